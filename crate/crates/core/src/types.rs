//! Shared domain types: annotation point sets and dense single-channel maps.

use crate::error::{Error, Result};

/// A head position, `x` is the pixel column and `y` the pixel row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Nearest grid cell, clamped so that in-bounds points always map inside
    /// the grid (a point at `x = width - 0.3` rounds to `width - 1`).
    pub fn pixel(&self, width: usize, height: usize) -> (usize, usize) {
        let col = (self.x.round().max(0.0) as usize).min(width - 1);
        let row = (self.y.round().max(0.0) as usize).min(height - 1);
        (col, row)
    }
}

/// Annotated head extent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeadBox {
    pub w: f64,
    pub h: f64,
}

impl HeadBox {
    pub const fn new(w: f64, h: f64) -> Self {
        Self { w, h }
    }
}

/// Point annotations (or predictions) for a single image.
///
/// An empty point set is valid and denotes a negative sample.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    width: usize,
    height: usize,
    points: Vec<Point>,
    boxes: Option<Vec<HeadBox>>,
}

impl PointSet {
    pub fn new(width: usize, height: usize, points: Vec<Point>) -> Result<Self> {
        Self::with_boxes(width, height, points, None)
    }

    pub fn with_boxes(width: usize, height: usize, points: Vec<Point>, boxes: Option<Vec<HeadBox>>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyGrid { width, height });
        }
        for (index, p) in points.iter().enumerate() {
            let inside = p.x >= 0.0 && p.y >= 0.0 && p.x < width as f64 && p.y < height as f64;
            if !inside {
                return Err(Error::PointOutOfBounds {
                    index,
                    x: p.x,
                    y: p.y,
                    width,
                    height,
                });
            }
        }
        if let Some(boxes) = &boxes {
            if boxes.len() != points.len() {
                return Err(Error::BoxCountMismatch {
                    points: points.len(),
                    boxes: boxes.len(),
                });
            }
            for (index, b) in boxes.iter().enumerate() {
                if !(b.w > 0.0 && b.h > 0.0 && b.w.is_finite() && b.h.is_finite()) {
                    return Err(Error::InvalidBox { index, w: b.w, h: b.h });
                }
            }
        }
        Ok(Self {
            width,
            height,
            points,
            boxes,
        })
    }

    /// Builds a point set from integer pixel coordinates.
    pub fn from_pixels(width: usize, height: usize, pixels: &[(usize, usize)]) -> Result<Self> {
        let points = pixels.iter().map(|&(x, y)| Point::new(x as f64, y as f64)).collect();
        Self::new(width, height, points)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn boxes(&self) -> Option<&[HeadBox]> {
        self.boxes.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rounded pixel of every point, in input order (duplicates retained).
    pub fn pixels(&self) -> Vec<(usize, usize)> {
        self.points.iter().map(|p| p.pixel(self.width, self.height)).collect()
    }
}

/// Row-major `height x width` grid of finite reals.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DenseMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyGrid { width, height });
        }
        let expected = width.checked_mul(height).ok_or(Error::EmptyGrid { width, height })?;
        if values.len() != expected {
            return Err(Error::ValueCount {
                expected,
                actual: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    /// Caller guarantees the invariants; used where values are produced
    /// from an already-valid map by a finite-preserving transform.
    pub(crate) fn from_raw(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self { width, height, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Sets one pixel; rejects non-finite values.
    pub fn set(&mut self, x: usize, y: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                index: y * self.width + x,
                value,
            });
        }
        self.values[y * self.width + x] = value;
        Ok(())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    pub(crate) fn ensure_same_shape(&self, other: &DenseMap) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            });
        }
        Ok(())
    }
}
