//! Pseudo bounding boxes from k-nearest-neighbour spacing.
//!
//! Each point gets a square box of side
//! `min(f * mean(k nearest neighbour distances), cap_fraction * min(img_w, img_h))`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knn::NeighborIndex;
use crate::types::{Point, PointSet};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxParams {
    pub k: usize,
    pub f: f64,
    pub cap_fraction: f64,
}

impl Default for BoxParams {
    fn default() -> Self {
        Self {
            k: 4,
            f: 0.1,
            cap_fraction: 0.05,
        }
    }
}

impl BoxParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: "must be >= 1".into(),
            });
        }
        if !(self.f > 0.0 && self.f.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "f",
                reason: format!("must be > 0, got {}", self.f),
            });
        }
        if !(self.cap_fraction > 0.0 && self.cap_fraction.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "cap_fraction",
                reason: format!("must be > 0, got {}", self.cap_fraction),
            });
        }
        Ok(())
    }
}

/// Square box of side `size` centered on `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PseudoBox {
    pub center: Point,
    pub size: f64,
}

impl PseudoBox {
    /// `(x0, y0, x1, y1)` clipped to `[0, width] x [0, height]`.
    pub fn clipped(&self, width: usize, height: usize) -> (f64, f64, f64, f64) {
        let half = self.size / 2.0;
        (
            (self.center.x - half).max(0.0),
            (self.center.y - half).max(0.0),
            (self.center.x + half).min(width as f64),
            (self.center.y + half).min(height as f64),
        )
    }
}

/// Mean distance from every point to its (up to) `k` nearest neighbours.
/// `None` for a point with no neighbours.
pub fn knn_mean_distances(points: &[Point], k: usize) -> Vec<Option<f64>> {
    let index = NeighborIndex::new(points);
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let d = index.nearest_distances(i, k);
            (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
        })
        .collect()
}

pub fn generate_boxes(points: &PointSet, params: &BoxParams) -> Result<Vec<PseudoBox>> {
    params.validate()?;
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let cap = params.cap_fraction * points.width().min(points.height()) as f64;
    let means = knn_mean_distances(points.points(), params.k);
    Ok(points
        .points()
        .iter()
        .zip(means)
        .map(|(&center, mean)| PseudoBox {
            center,
            size: mean.map_or(cap, |m| (params.f * m).min(cap)),
        })
        .collect())
}
