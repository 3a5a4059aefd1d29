use serde::{Deserialize, Serialize};

use super::RgbImage;
use crate::error::{Error, Result};

pub const DEFAULT_PEAK: f64 = 255.0;

/// PSNR in dB; identical images have no finite value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    pub fn db(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Psnr::Finite(v) => Some(v),
            Psnr::Infinite => None,
        }
    }
}

/// `10·log10(peak² / MSE)` with the MSE taken over all channels.
pub fn psnr(estimate: &RgbImage, reference: &RgbImage, peak: f64) -> Result<Psnr> {
    estimate.expect_same_size(reference)?;
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!("PSNR peak must be > 0, got {peak}")));
    }
    let n = estimate.pixels().len();
    if n == 0 {
        return Err(Error::Empty("image"));
    }
    let sse: f64 = estimate
        .pixels()
        .iter()
        .zip(reference.pixels())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    if sse == 0.0 {
        return Ok(Psnr::Infinite);
    }
    Ok(Psnr::Finite(10.0 * (peak * peak / (sse / n as f64)).log10()))
}
