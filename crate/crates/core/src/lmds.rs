//! Local maxima detection on predicted FIDT maps.
//!
//! A pixel is a candidate when it equals the maximum of its
//! `pool_size x pool_size` neighbourhood (window clipped at the borders).
//! If the largest candidate is below `negative_cutoff` the map is a negative
//! sample; otherwise every candidate at or above
//! `threshold_ratio * largest` is reported.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::DenseMap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmdsParams {
    pub threshold_ratio: f64,
    pub negative_cutoff: f64,
    pub pool_size: usize,
    /// Keep only the first pixel (row-major) of each 8-connected plateau of
    /// equal-valued maxima. Off by default.
    pub dedup_plateaus: bool,
}

impl Default for LmdsParams {
    fn default() -> Self {
        Self {
            threshold_ratio: 100.0 / 255.0,
            negative_cutoff: 0.10,
            pool_size: 3,
            dedup_plateaus: false,
        }
    }
}

impl LmdsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_ratio > 0.0 && self.threshold_ratio < 1.0) {
            return Err(Error::InvalidParameter {
                name: "threshold_ratio",
                reason: format!("must lie in (0, 1), got {}", self.threshold_ratio),
            });
        }
        if !(self.negative_cutoff > 0.0 && self.negative_cutoff.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "negative_cutoff",
                reason: format!("must be > 0, got {}", self.negative_cutoff),
            });
        }
        if self.pool_size < 3 || self.pool_size.is_multiple_of(2) {
            return Err(Error::InvalidParameter {
                name: "pool_size",
                reason: format!("must be odd and >= 3, got {}", self.pool_size),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResult {
    /// `(x, y)` pixel positions in row-major order.
    pub coordinates: Vec<(usize, usize)>,
    pub count: usize,
    pub is_negative: bool,
    /// Largest value among the candidate maxima.
    pub max_value: f64,
}

/// Sliding maximum with stride 1; the window is clipped at the borders.
pub fn max_filter(map: &DenseMap, size: usize) -> DenseMap {
    let (w, h) = (map.width(), map.height());
    let r = size / 2;
    let src = map.values();
    let mut horizontal = vec![0.0; w * h];
    horizontal
        .par_chunks_mut(w)
        .zip(src.par_chunks(w))
        .for_each(|(out, row)| {
            for (x, o) in out.iter_mut().enumerate() {
                let lo = x.saturating_sub(r);
                let hi = (x + r).min(w - 1);
                *o = row[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            }
        });
    let mut values = vec![0.0; w * h];
    values.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for (x, o) in out.iter_mut().enumerate() {
            *o = (lo..=hi)
                .map(|yy| horizontal[yy * w + x])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    });
    DenseMap::from_raw(w, h, values)
}

pub fn detect(map: &DenseMap, params: &LmdsParams) -> Result<DetectionResult> {
    params.validate()?;
    let w = map.width();
    let pooled = max_filter(map, params.pool_size);

    let candidates: Vec<f64> = map
        .values()
        .iter()
        .zip(pooled.values())
        .map(|(&v, &m)| if v == m { v } else { 0.0 })
        .collect();
    let max_value = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    if max_value < params.negative_cutoff {
        return Ok(DetectionResult {
            coordinates: Vec::new(),
            count: 0,
            is_negative: true,
            max_value,
        });
    }

    let threshold = params.threshold_ratio * max_value;
    let keep: Vec<bool> = candidates.iter().map(|&v| v >= threshold && v > 0.0).collect();
    let keep = if params.dedup_plateaus {
        dedup_plateaus(&keep, &candidates, w)
    } else {
        keep
    };
    let coordinates: Vec<(usize, usize)> = keep
        .iter()
        .enumerate()
        .filter(|(_, &k)| k)
        .map(|(i, _)| (i % w, i / w))
        .collect();
    Ok(DetectionResult {
        count: coordinates.len(),
        coordinates,
        is_negative: false,
        max_value,
    })
}

pub fn count(map: &DenseMap, params: &LmdsParams) -> Result<usize> {
    detect(map, params).map(|d| d.count)
}

fn dedup_plateaus(keep: &[bool], values: &[f64], w: usize) -> Vec<bool> {
    let h = keep.len() / w;
    let mut out = vec![false; keep.len()];
    let mut seen = vec![false; keep.len()];
    let mut queue = VecDeque::new();
    for start in 0..keep.len() {
        if !keep[start] || seen[start] {
            continue;
        }
        out[start] = true;
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if keep[j] && !seen[j] && values[j] == values[start] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    out
}
