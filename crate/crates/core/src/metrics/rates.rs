use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ratio = original / compressed`. `relative_gain = ratio - 1` is the
/// convention used by published compression tables that print, e.g., 3.96
/// for a 4.96× smaller model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateComparison {
    pub ratio: f64,
    pub relative_gain: f64,
}

fn rate(what: &str, original: f64, compressed: f64) -> Result<RateComparison> {
    if !(original > 0.0 && compressed > 0.0) || !original.is_finite() || !compressed.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "{what} must be positive and finite, got {original} and {compressed}"
        )));
    }
    let ratio = original / compressed;
    Ok(RateComparison {
        ratio,
        relative_gain: ratio - 1.0,
    })
}

/// Parameter-count ratio α(original) / α(compressed).
pub fn compression_rate(alpha_original: u64, alpha_compressed: u64) -> Result<RateComparison> {
    rate("parameter counts", alpha_original as f64, alpha_compressed as f64)
}

/// Per-image latency ratio β(original) / β(compressed).
pub fn speed_up(beta_original: f64, beta_compressed: f64) -> Result<RateComparison> {
    rate("per-image times", beta_original, beta_compressed)
}
