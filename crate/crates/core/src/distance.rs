//! Exact Euclidean distance transform of a set of annotation points.
//!
//! Annotations are rounded to their nearest pixel and distances are measured
//! between pixel centers. The fast path is the separable lower-envelope
//! transform: a 1-D nearest-seed sweep along rows followed by a parabola
//! lower envelope along columns, all in exact squared integer distances.

use rayon::prelude::*;

use crate::error::Result;
use crate::types::{DenseMap, PointSet};

/// Value of every pixel when there are no annotations: the grid diagonal.
pub fn empty_sentinel(width: usize, height: usize) -> f64 {
    (width as f64).hypot(height as f64)
}

/// Unique seed mask of the rounded annotation pixels.
fn seed_mask(points: &PointSet) -> Vec<bool> {
    let (w, h) = (points.width(), points.height());
    let mut mask = vec![false; w * h];
    for (x, y) in points.pixels() {
        mask[y * w + x] = true;
    }
    mask
}

/// Distance from every pixel to its nearest annotation.
pub fn distance_transform(annotations: &PointSet) -> Result<DenseMap> {
    let (w, h) = (annotations.width(), annotations.height());
    if annotations.is_empty() {
        return DenseMap::filled(w, h, empty_sentinel(w, h));
    }
    let mask = seed_mask(annotations);

    // Squared horizontal distance to the nearest seed in the same row.
    let mut rows = vec![f64::INFINITY; w * h];
    rows.par_chunks_mut(w)
        .zip(mask.par_chunks(w))
        .for_each(|(out, seeds)| row_sweep(seeds, out));

    // Column envelopes, written column-major.
    let mut cols = vec![0.0; w * h];
    cols.par_chunks_mut(h).enumerate().for_each_init(
        || Envelope::with_capacity(h),
        |env, (x, out)| {
            let column: Vec<f64> = (0..h).map(|y| rows[y * w + x]).collect();
            env.transform(&column, out);
        },
    );

    let mut values = vec![0.0; w * h];
    values.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        for (x, v) in out.iter_mut().enumerate() {
            *v = cols[x * h + y].sqrt();
        }
    });
    Ok(DenseMap::from_raw(w, h, values))
}

/// Direct evaluation of the minimum over all (deduplicated, rounded)
/// annotations for every pixel. `O(W * H * N)`; meant for small grids and
/// as a reference for [`distance_transform`].
pub fn distance_transform_bruteforce(annotations: &PointSet) -> Result<DenseMap> {
    let (w, h) = (annotations.width(), annotations.height());
    if annotations.is_empty() {
        return DenseMap::filled(w, h, empty_sentinel(w, h));
    }
    let mut seeds = annotations.pixels();
    seeds.sort_unstable();
    seeds.dedup();
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let best = seeds
                .iter()
                .map(|&(sx, sy)| {
                    let dx = x as f64 - sx as f64;
                    let dy = y as f64 - sy as f64;
                    dx * dx + dy * dy
                })
                .fold(f64::INFINITY, f64::min);
            values.push(best.sqrt());
        }
    }
    Ok(DenseMap::from_raw(w, h, values))
}

fn row_sweep(seeds: &[bool], out: &mut [f64]) {
    let n = seeds.len();
    let mut last: Option<usize> = None;
    for i in 0..n {
        if seeds[i] {
            last = Some(i);
        }
        if let Some(s) = last {
            let d = (i - s) as f64;
            out[i] = d * d;
        }
    }
    last = None;
    for i in (0..n).rev() {
        if seeds[i] {
            last = Some(i);
        }
        if let Some(s) = last {
            let d = (s - i) as f64;
            out[i] = out[i].min(d * d);
        }
    }
}

/// Lower envelope of parabolas `f(q) + (p - q)^2`; infinite samples are skipped.
struct Envelope {
    vertices: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            vertices: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    fn transform(&mut self, f: &[f64], out: &mut [f64]) {
        self.vertices.clear();
        self.bounds.clear();
        for (q, &fq) in f.iter().enumerate() {
            if !fq.is_finite() {
                continue;
            }
            let qf = q as f64;
            let mut s = f64::NEG_INFINITY;
            while let Some(&p) = self.vertices.last() {
                let pf = p as f64;
                s = ((fq + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf));
                if s <= *self.bounds.last().unwrap() {
                    self.vertices.pop();
                    self.bounds.pop();
                    s = f64::NEG_INFINITY;
                } else {
                    break;
                }
            }
            self.vertices.push(q);
            self.bounds.push(s);
        }
        if self.vertices.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (p, o) in out.iter_mut().enumerate() {
            let pf = p as f64;
            while k + 1 < self.vertices.len() && self.bounds[k + 1] < pf {
                k += 1;
            }
            let v = self.vertices[k];
            let d = pf - v as f64;
            *o = d * d + f[v];
        }
    }
}
