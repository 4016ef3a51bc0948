//! Focal inverse distance transform (FIDT) toolkit for crowd localization.
//!
//! * [`distance`]: exact Euclidean distance transform of point annotations.
//! * [`fidt`]: IDT / FIDT maps and 1-D response profiles.
//! * [`lmds`]: local-maxima detection of head positions and counts.
//! * [`boxes`]: pseudo bounding boxes from k-nearest-neighbour spacing.
//! * [`loss`]: MSE + independent SSIM objective and its gradient.
//! * [`eval`]: point matching, precision/recall/F1, MAE/MSE.
//! * [`io`]: map, annotation and CSV file formats.

pub mod assignment;
pub mod boxes;
pub mod distance;
pub mod error;
pub mod eval;
pub mod fidt;
pub mod io;
mod knn;
pub mod lmds;
pub mod loss;
pub mod types;

pub use boxes::{generate_boxes, BoxParams, PseudoBox};
pub use distance::{distance_transform, distance_transform_bruteforce};
pub use error::{Error, Result};
pub use eval::{
    counting_errors, evaluate_localization_sweep, match_points, match_points_with, scene_level_report, CountingErrors,
    MatchReport, Matching, SceneBucket, SigmaPolicy, SweepRange, Tally,
};
pub use fidt::{fidt_map, fidt_profile, idt_map, FidtParams};
pub use io::{AnnotationDocument, MapKind};
pub use lmds::{detect, DetectionResult, LmdsParams};
pub use loss::{issim_loss, mse_loss, ssim, total_loss, LossReport, SsimParams};
pub use types::{DenseMap, HeadBox, Point, PointSet};

/// Ground-truth FIDT map (or IDT map for `FidtParams::IDT`) of an annotation set.
pub fn ground_truth_map(annotations: &PointSet, params: &FidtParams) -> Result<DenseMap> {
    fidt_map(&distance_transform(annotations)?, params)
}
