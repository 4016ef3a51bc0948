//! Counting and localization metrics.
//!
//! A prediction matches a ground-truth point when their distance is at most
//! the threshold that governs that ground-truth point. Matching is one-to-one;
//! the default solver maximises the number of matches and breaks ties by the
//! smallest total distance.

use std::collections::{HashMap, HashSet};

use crate::assignment;
use crate::error::{Error, Result};
use crate::types::{Point, PointSet};

/// How the per-ground-truth match threshold is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaPolicy {
    /// One global threshold, in pixels.
    Fixed(f64),
    /// `min(w, h) / 2` of each ground-truth box.
    BoxSmall,
    /// `sqrt(w^2 + h^2) / 2` of each ground-truth box.
    BoxLarge,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Matching {
    #[default]
    Optimal,
    /// Repeatedly take the closest free pair.
    Greedy,
}

/// Inclusive integer threshold range for the averaged protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepRange {
    pub start: u32,
    pub end: u32,
}

impl Default for SweepRange {
    fn default() -> Self {
        Self { start: 1, end: 100 }
    }
}

impl SweepRange {
    pub fn new(start: u32, end: u32) -> Result<Self> {
        if start == 0 || end < start {
            return Err(Error::InvalidParameter {
                name: "sweep_range",
                reason: format!("need 1 <= start <= end, got {start}:{end}"),
            });
        }
        Ok(Self { start, end })
    }

    pub fn sigmas(&self) -> impl Iterator<Item = f64> {
        (self.start..=self.end).map(f64::from)
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchPair {
    pub pred_index: usize,
    pub gt_index: usize,
    pub distance: f64,
}

/// TP/FP/FN counts. Summing tallies across images gives dataset-level scores.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl std::ops::AddAssign for Tally {
    fn add_assign(&mut self, rhs: Self) {
        self.true_positives += rhs.true_positives;
        self.false_positives += rhs.false_positives;
        self.false_negatives += rhs.false_negatives;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    /// F1 from given precision and recall; `0/0` is `0`.
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }
}

impl Tally {
    /// Both sets empty scores 1/1/1; any other `0/0` ratio scores 0.
    pub fn scores(&self) -> Scores {
        let Tally {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fneg,
        } = *self;
        if tp + fp + fneg == 0 {
            return Scores {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Scores::from_pr(ratio(tp, tp + fp), ratio(tp, tp + fneg))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub pairs: Vec<MatchPair>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MatchReport {
    pub fn tally(&self) -> Tally {
        Tally {
            true_positives: self.true_positives,
            false_positives: self.false_positives,
            false_negatives: self.false_negatives,
        }
    }
}

/// Per-ground-truth thresholds under `policy`.
pub fn thresholds(truth: &PointSet, policy: SigmaPolicy) -> Result<Vec<f64>> {
    match policy {
        SigmaPolicy::Fixed(sigma) => {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "sigma",
                    reason: format!("must be finite and >= 0, got {sigma}"),
                });
            }
            Ok(vec![sigma; truth.len()])
        }
        SigmaPolicy::BoxSmall | SigmaPolicy::BoxLarge if truth.is_empty() => Ok(Vec::new()),
        SigmaPolicy::BoxSmall | SigmaPolicy::BoxLarge => {
            let boxes = truth.boxes().ok_or(Error::MissingBoxes)?;
            Ok(boxes
                .iter()
                .map(|b| match policy {
                    SigmaPolicy::BoxSmall => b.w.min(b.h) / 2.0,
                    _ => b.w.hypot(b.h) / 2.0,
                })
                .collect())
        }
    }
}

pub fn match_points(predicted: &PointSet, truth: &PointSet, policy: SigmaPolicy) -> Result<MatchReport> {
    match_points_with(predicted, truth, policy, Matching::Optimal)
}

pub fn match_points_with(
    predicted: &PointSet,
    truth: &PointSet,
    policy: SigmaPolicy,
    matching: Matching,
) -> Result<MatchReport> {
    let sigmas = thresholds(truth, policy)?;
    Ok(match_with_thresholds(
        predicted.points(),
        truth.points(),
        &sigmas,
        matching,
    ))
}

/// Matches `pred` against `gt` where gt point `j` accepts predictions within `sigmas[j]`.
pub fn match_with_thresholds(pred: &[Point], gt: &[Point], sigmas: &[f64], matching: Matching) -> MatchReport {
    let edges = candidate_edges(pred, gt, sigmas);
    let mut pairs = match matching {
        Matching::Optimal => optimal_pairs(&edges),
        Matching::Greedy => greedy_pairs(edges),
    };
    pairs.sort_by_key(|p| (p.pred_index, p.gt_index));
    let tally = Tally {
        true_positives: pairs.len(),
        false_positives: pred.len() - pairs.len(),
        false_negatives: gt.len() - pairs.len(),
    };
    let s = tally.scores();
    MatchReport {
        true_positives: tally.true_positives,
        false_positives: tally.false_positives,
        false_negatives: tally.false_negatives,
        pairs,
        precision: s.precision,
        recall: s.recall,
        f1: s.f1,
    }
}

/// All `(pred, gt)` pairs within the gt threshold, found through a bucket grid.
fn candidate_edges(pred: &[Point], gt: &[Point], sigmas: &[f64]) -> Vec<MatchPair> {
    let max_sigma = sigmas.iter().copied().fold(0.0, f64::max);
    if pred.is_empty() || gt.is_empty() {
        return Vec::new();
    }
    let cell = max_sigma.max(1.0);
    let key = |p: &Point| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (j, g) in gt.iter().enumerate() {
        buckets.entry(key(g)).or_default().push(j);
    }
    let mut edges = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        let (cx, cy) = key(p);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let Some(list) = buckets.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &j in list {
                    let d = p.distance(&gt[j]);
                    if d <= sigmas[j] {
                        edges.push(MatchPair {
                            pred_index: i,
                            gt_index: j,
                            distance: d,
                        });
                    }
                }
            }
        }
    }
    edges.sort_by_key(|e| (e.pred_index, e.gt_index));
    edges
}

fn greedy_pairs(mut edges: Vec<MatchPair>) -> Vec<MatchPair> {
    edges.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.pred_index.cmp(&b.pred_index))
            .then(a.gt_index.cmp(&b.gt_index))
    });
    let mut pred_used = HashSet::new();
    let mut gt_used = HashSet::new();
    let mut out = Vec::new();
    for e in edges {
        if pred_used.contains(&e.pred_index) || gt_used.contains(&e.gt_index) {
            continue;
        }
        pred_used.insert(e.pred_index);
        gt_used.insert(e.gt_index);
        out.push(e);
    }
    out
}

/// Maximum-cardinality, minimum-distance matching, solved independently on
/// each connected component of the candidate graph.
fn optimal_pairs(edges: &[MatchPair]) -> Vec<MatchPair> {
    // Union-find over pred nodes and gt nodes (gt offset into a separate map).
    let mut pred_ids: HashMap<usize, usize> = HashMap::new();
    let mut gt_ids: HashMap<usize, usize> = HashMap::new();
    let mut parent: Vec<usize> = Vec::new();
    let node = |map: &mut HashMap<usize, usize>, key: usize, parent: &mut Vec<usize>| {
        *map.entry(key).or_insert_with(|| {
            parent.push(parent.len());
            parent.len() - 1
        })
    };
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in edges {
        let a = node(&mut pred_ids, e.pred_index, &mut parent);
        let b = node(&mut gt_ids, e.gt_index, &mut parent);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut components: Vec<(usize, Vec<&MatchPair>)> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for e in edges {
        let root = find(&mut parent, pred_ids[&e.pred_index]);
        let k = *slot.entry(root).or_insert_with(|| {
            components.push((root, Vec::new()));
            components.len() - 1
        });
        components[k].1.push(e);
    }
    components
        .into_iter()
        .flat_map(|(_, comp)| solve_component(&comp))
        .collect()
}

fn solve_component(edges: &[&MatchPair]) -> Vec<MatchPair> {
    let mut preds: Vec<usize> = edges.iter().map(|e| e.pred_index).collect();
    let mut gts: Vec<usize> = edges.iter().map(|e| e.gt_index).collect();
    preds.sort_unstable();
    preds.dedup();
    gts.sort_unstable();
    gts.dedup();
    if edges.len() == 1 {
        return vec![*edges[0]];
    }
    let transpose = preds.len() > gts.len();
    let (rows, cols) = if transpose { (&gts, &preds) } else { (&preds, &gts) };
    let row_of: HashMap<usize, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let col_of: HashMap<usize, usize> = cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    // Each match earns `bonus`, which exceeds any achievable total distance,
    // so cardinality dominates and distance breaks ties.
    let max_d = edges.iter().map(|e| e.distance).fold(0.0, f64::max);
    let bonus = (max_d + 1.0) * (rows.len() as f64 + 1.0);
    let mut cost = vec![vec![0.0; cols.len()]; rows.len()];
    let mut edge_at: HashMap<(usize, usize), MatchPair> = HashMap::new();
    for e in edges {
        let (r, c) = if transpose {
            (row_of[&e.gt_index], col_of[&e.pred_index])
        } else {
            (row_of[&e.pred_index], col_of[&e.gt_index])
        };
        cost[r][c] = e.distance - bonus;
        edge_at.insert((r, c), **e);
    }
    assignment::solve(&cost)
        .into_iter()
        .enumerate()
        .filter_map(|(r, c)| edge_at.get(&(r, c)).copied())
        .collect()
}

/// Averaged precision and recall over every threshold in `range`, with F1
/// computed from the averages.
pub fn evaluate_localization_sweep(
    predicted: &PointSet,
    truth: &PointSet,
    range: SweepRange,
    matching: Matching,
) -> Result<Scores> {
    let tallies = sweep_tallies(predicted, truth, range, matching)?;
    Ok(average_scores(&tallies))
}

/// One tally per threshold in `range`, in ascending threshold order.
pub fn sweep_tallies(
    predicted: &PointSet,
    truth: &PointSet,
    range: SweepRange,
    matching: Matching,
) -> Result<Vec<Tally>> {
    range
        .sigmas()
        .map(|s| match_points_with(predicted, truth, SigmaPolicy::Fixed(s), matching).map(|r| r.tally()))
        .collect()
}

pub fn average_scores(tallies: &[Tally]) -> Scores {
    let n = tallies.len().max(1) as f64;
    let (p, r) = tallies
        .iter()
        .map(Tally::scores)
        .fold((0.0, 0.0), |(p, r), s| (p + s.precision, r + s.recall));
    Scores::from_pr(p / n, r / n)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountingErrors {
    pub mae: f64,
    /// Root of the mean squared error.
    pub mse: f64,
}

pub fn counting_errors(predicted: &[f64], truth: &[f64]) -> Result<CountingErrors> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = predicted.len() as f64;
    let (abs, sq) = predicted.iter().zip(truth).fold((0.0, 0.0), |(a, s), (p, g)| {
        let d = p - g;
        (a + d.abs(), s + d * d)
    });
    Ok(CountingErrors {
        mae: abs / n,
        mse: (sq / n).sqrt(),
    })
}

/// Density buckets by ground-truth count: 0, (0,100], (100,500], (500,5000], >5000.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SceneBucket {
    S0,
    S1,
    S2,
    S3,
    S4,
}

impl SceneBucket {
    pub const ALL: [SceneBucket; 5] = [Self::S0, Self::S1, Self::S2, Self::S3, Self::S4];

    pub fn from_count(truth: usize) -> Self {
        match truth {
            0 => Self::S0,
            1..=100 => Self::S1,
            101..=500 => Self::S2,
            501..=5000 => Self::S3,
            _ => Self::S4,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::S0 => "S0",
            Self::S1 => "S1",
            Self::S2 => "S2",
            Self::S3 => "S3",
            Self::S4 => "S4",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneReport {
    /// `(bucket, images, mae)` for every non-empty bucket, in S0..S4 order.
    pub buckets: Vec<(SceneBucket, usize, f64)>,
    /// Unweighted mean of the bucket MAEs.
    pub average: f64,
}

/// Per-bucket MAE from `(predicted count, truth count)` pairs.
pub fn scene_level_report(per_image: &[(f64, usize)]) -> Result<SceneReport> {
    if per_image.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut buckets = Vec::new();
    for bucket in SceneBucket::ALL {
        let (pred, truth): (Vec<f64>, Vec<f64>) = per_image
            .iter()
            .filter(|(_, t)| SceneBucket::from_count(*t) == bucket)
            .map(|&(p, t)| (p, t as f64))
            .unzip();
        if !pred.is_empty() {
            let e = counting_errors(&pred, &truth)?;
            buckets.push((bucket, pred.len(), e.mae));
        }
    }
    let average = buckets.iter().map(|b| b.2).sum::<f64>() / buckets.len() as f64;
    Ok(SceneReport { buckets, average })
}
