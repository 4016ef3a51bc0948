//! Inverse distance transform (IDT) and focal inverse distance transform
//! (FIDT) maps.
//!
//! `idt = 1 / (P + c)` and `fidt = 1 / (P^(alpha * P + beta) + c)`, where `P`
//! is the distance to the nearest annotation. `0^x` is taken as `0`, so every
//! annotated pixel holds exactly `1 / c`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::DenseMap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidtParams {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
}

impl Default for FidtParams {
    fn default() -> Self {
        Self {
            alpha: 0.02,
            beta: 0.75,
            c: 1.0,
        }
    }
}

impl FidtParams {
    /// Parameters under which the FIDT map reduces to the IDT map.
    pub const IDT: FidtParams = FidtParams {
        alpha: 0.0,
        beta: 1.0,
        c: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid("c", format!("must be > 0, got {}", self.c)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be >= 0, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta", format!("must be > 0, got {}", self.beta)));
        }
        Ok(())
    }

    /// FIDT response at distance `p`.
    #[inline]
    pub fn fidt(&self, p: f64) -> f64 {
        let powered = if p > 0.0 {
            // powf is exact for a unit exponent, keeping (0, 1) identical to IDT
            p.powf(self.alpha * p + self.beta)
        } else {
            0.0
        };
        1.0 / (powered + self.c)
    }

    /// IDT response at distance `p`.
    #[inline]
    pub fn idt(&self, p: f64) -> f64 {
        1.0 / (p + self.c)
    }
}

fn invalid(name: &'static str, reason: String) -> Error {
    Error::InvalidParameter { name, reason }
}

fn check_distances(distance: &DenseMap) -> Result<()> {
    match distance.values().iter().position(|&v| v < 0.0) {
        Some(index) => Err(Error::NegativeDistance {
            index,
            value: distance.values()[index],
        }),
        None => Ok(()),
    }
}

fn map_pixels(distance: &DenseMap, f: impl Fn(f64) -> f64 + Sync) -> DenseMap {
    let values = distance.values().par_iter().map(|&p| f(p)).collect();
    DenseMap::from_raw(distance.width(), distance.height(), values)
}

pub fn idt_map(distance: &DenseMap, c: f64) -> Result<DenseMap> {
    let params = FidtParams { c, ..FidtParams::IDT };
    params.validate()?;
    check_distances(distance)?;
    Ok(map_pixels(distance, |p| params.idt(p)))
}

pub fn fidt_map(distance: &DenseMap, params: &FidtParams) -> Result<DenseMap> {
    params.validate()?;
    check_distances(distance)?;
    Ok(map_pixels(distance, |p| params.fidt(p)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileSample {
    pub distance: f64,
    pub fidt: f64,
    pub idt: f64,
}

/// Samples both responses at `0, step, 2 * step, ...` up to `max_distance`.
pub fn fidt_profile(params: &FidtParams, max_distance: f64, step: f64) -> Result<Vec<ProfileSample>> {
    params.validate()?;
    if !(max_distance > 0.0 && max_distance.is_finite()) {
        return Err(invalid("max_distance", format!("must be > 0, got {max_distance}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("step", format!("must be > 0, got {step}")));
    }
    // Tolerate accumulated rounding in max_distance / step.
    let n = ((max_distance / step) * (1.0 + 1e-12)).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let distance = i as f64 * step;
            ProfileSample {
                distance,
                fidt: params.fidt(distance),
                idt: params.idt(distance),
            }
        })
        .collect())
}
