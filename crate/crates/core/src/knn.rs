//! Exact k-nearest-neighbour distances over a uniform bucket grid.

use crate::types::Point;

/// Below this many points the all-pairs scan is used directly.
const EXHAUSTIVE_LIMIT: usize = 64;

pub struct NeighborIndex<'a> {
    points: &'a [Point],
    min_x: f64,
    min_y: f64,
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> NeighborIndex<'a> {
    pub fn new(points: &'a [Point]) -> Self {
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        if points.is_empty() {
            (min_x, min_y, max_x, max_y) = (0.0, 0.0, 0.0, 0.0);
        }
        let span_x = (max_x - min_x).max(1.0);
        let span_y = (max_y - min_y).max(1.0);
        // Roughly two points per bucket.
        let cell = (2.0 * span_x * span_y / points.len().max(1) as f64).sqrt().max(1e-9);
        let cols = ((span_x / cell).floor() as usize + 1).min(4096);
        let rows = ((span_y / cell).floor() as usize + 1).min(4096);
        let cell = cell.max(span_x / cols as f64).max(span_y / rows as f64);
        let mut index = Self {
            points,
            min_x,
            min_y,
            cell,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
        };
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = index.cell_of(p);
            index.buckets[cy * cols + cx].push(i);
        }
        index
    }

    fn cell_of(&self, p: &Point) -> (usize, usize) {
        let cx = (((p.x - self.min_x) / self.cell).floor().max(0.0) as usize).min(self.cols - 1);
        let cy = (((p.y - self.min_y) / self.cell).floor().max(0.0) as usize).min(self.rows - 1);
        (cx, cy)
    }

    /// Distances from point `query` to its `k` nearest other points, ascending.
    /// Fewer than `k` are returned when the set is smaller.
    pub fn nearest_distances(&self, query: usize, k: usize) -> Vec<f64> {
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        if k == 0 {
            return best;
        }
        let q = self.points[query];
        if self.points.len() <= EXHAUSTIVE_LIMIT {
            for (i, p) in self.points.iter().enumerate() {
                if i != query {
                    push_bounded(&mut best, q.distance(p), k);
                }
            }
            return best;
        }
        let (qx, qy) = self.cell_of(&q);
        let max_ring = self.cols.max(self.rows);
        for ring in 0..=max_ring {
            let x0 = qx as isize - ring as isize;
            let x1 = qx as isize + ring as isize;
            let y0 = qy as isize - ring as isize;
            let y1 = qy as isize + ring as isize;
            for cy in y0..=y1 {
                if cy < 0 || cy >= self.rows as isize {
                    continue;
                }
                let on_edge_row = cy == y0 || cy == y1;
                let mut cx = x0;
                while cx <= x1 {
                    if cx >= 0 && cx < self.cols as isize {
                        for &i in &self.buckets[cy as usize * self.cols + cx as usize] {
                            if i != query {
                                push_bounded(&mut best, q.distance(&self.points[i]), k);
                            }
                        }
                    }
                    // interior rows only contribute their two edge cells
                    cx = if on_edge_row || cx == x1 { cx + 1 } else { x1 };
                }
            }
            if best.len() == k && best[k - 1] <= ring as f64 * self.cell {
                break;
            }
        }
        best
    }
}

fn push_bounded(best: &mut Vec<f64>, d: f64, k: usize) {
    if best.len() == k && d >= best[k - 1] {
        return;
    }
    let pos = best.partition_point(|&b| b <= d);
    best.insert(pos, d);
    best.truncate(k);
}
