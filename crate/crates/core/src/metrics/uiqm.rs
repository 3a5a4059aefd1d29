//! Underwater image quality measure: a weighted sum of colourfulness
//! (UICM), sharpness (UISM) and contrast (UIConM).

use serde::{Deserialize, Serialize};

use super::RgbImage;
use crate::error::{Error, Result};

/// Linear weights of the three sub-measures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UiqmCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for UiqmCoefficients {
    fn default() -> Self {
        UiqmCoefficients {
            c1: 0.0282,
            c2: 0.2953,
            c3: 3.5753,
        }
    }
}

impl UiqmCoefficients {
    pub fn combine(&self, uicm: f64, uism: f64, uiconm: f64) -> f64 {
        self.c1 * uicm + self.c2 * uism + self.c3 * uiconm
    }
}

/// Every constant used by the sub-measures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UiqmConfig {
    pub coefficients: UiqmCoefficients,
    /// Fractions trimmed from the low and high ends for the UICM mean.
    pub alpha_low: f64,
    pub alpha_high: f64,
    /// UICM weights on the opponent-channel mean and spread.
    pub uicm_mean_weight: f64,
    pub uicm_spread_weight: f64,
    /// Per-channel UISM weights (R, G, B).
    pub uism_lambda: [f64; 3],
    pub block: usize,
    pub plip_gamma: f64,
}

impl Default for UiqmConfig {
    fn default() -> Self {
        UiqmConfig {
            coefficients: UiqmCoefficients::default(),
            alpha_low: 0.1,
            alpha_high: 0.1,
            uicm_mean_weight: -0.0268,
            uicm_spread_weight: 0.1586,
            uism_lambda: [0.299, 0.587, 0.114],
            block: 8,
            plip_gamma: 1026.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UiqmScores {
    pub uicm: f64,
    pub uism: f64,
    pub uiconm: f64,
    pub uiqm: f64,
}

/// Mean after discarding `ceil(α_L·K)` lowest and `floor(α_R·K)` highest
/// samples.
fn alpha_trimmed_mean(mut xs: Vec<f64>, alpha_low: f64, alpha_high: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    let lo = (alpha_low * k as f64).ceil() as usize;
    let hi = (alpha_high * k as f64).floor() as usize;
    if lo + hi >= k {
        return xs.iter().sum::<f64>() / k as f64;
    }
    xs[lo..k - hi].iter().sum::<f64>() / (k - lo - hi) as f64
}

fn spread_about(xs: &[f64], mu: f64) -> f64 {
    xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / xs.len() as f64
}

fn expect_blocks(img: &RgbImage, block: usize) -> Result<()> {
    if block == 0 || img.width() < block || img.height() < block {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min: block.max(1),
        });
    }
    Ok(())
}

/// Colourfulness from the RG = R − G and YB = (R + G)/2 − B opponent
/// channels.
pub fn uicm(img: &RgbImage, cfg: &UiqmConfig) -> Result<f64> {
    if img.pixels().is_empty() {
        return Err(Error::Empty("image"));
    }
    let (rg, yb): (Vec<f64>, Vec<f64>) = img
        .pixels()
        .chunks_exact(3)
        .map(|p| {
            let (r, g, b) = (p[0] as f64, p[1] as f64, p[2] as f64);
            (r - g, (r + g) / 2.0 - b)
        })
        .unzip();
    let mu_rg = alpha_trimmed_mean(rg.clone(), cfg.alpha_low, cfg.alpha_high);
    let mu_yb = alpha_trimmed_mean(yb.clone(), cfg.alpha_low, cfg.alpha_high);
    let s_rg = spread_about(&rg, mu_rg);
    let s_yb = spread_about(&yb, mu_yb);
    Ok(cfg.uicm_mean_weight * (mu_rg * mu_rg + mu_yb * mu_yb).sqrt()
        + cfg.uicm_spread_weight * (s_rg + s_yb).sqrt())
}

/// Sobel gradient magnitude with replicated borders.
fn sobel_magnitude(plane: &[f64], w: usize, h: usize) -> Vec<f64> {
    let at = |x: isize, y: isize| {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        plane[yc * w + xc]
    };
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            out[y as usize * w + x as usize] = gx.hypot(gy);
        }
    }
    out
}

/// Visits every full `block × block` tile (trailing partial tiles are
/// cropped) and hands its max and min to `f`.
fn for_each_block(
    planes: &[&[f64]],
    w: usize,
    h: usize,
    block: usize,
    mut f: impl FnMut(f64, f64),
) -> usize {
    let (bx, by) = (w / block, h / block);
    for j in 0..by {
        for i in 0..bx {
            let mut hi = f64::NEG_INFINITY;
            let mut lo = f64::INFINITY;
            for p in planes {
                for y in j * block..(j + 1) * block {
                    for &v in &p[y * w + i * block..y * w + (i + 1) * block] {
                        hi = hi.max(v);
                        lo = lo.min(v);
                    }
                }
            }
            f(hi, lo);
        }
    }
    bx * by
}

/// `(2 / k₁k₂)·Σ ln(max / min)` over blocks, with max and min clamped to ≥ 1.
fn eme(plane: &[f64], w: usize, h: usize, block: usize) -> f64 {
    let mut sum = 0.0;
    let n = for_each_block(&[plane], w, h, block, |hi, lo| {
        sum += (hi.max(1.0) / lo.max(1.0)).ln();
    });
    2.0 * sum / n as f64
}

/// Sobel response of a full-range (0 → 255) step edge.
const FULL_STEP_RESPONSE: f64 = 4.0 * 255.0;

/// Sharpness: λ-weighted EME of each channel masked by its Sobel edge
/// magnitude. The magnitude is scaled so a full-range step reads 1, which
/// keeps the edge map in gray levels; a per-image max normalisation would
/// make the score blind to blur.
pub fn uism(img: &RgbImage, cfg: &UiqmConfig) -> Result<f64> {
    expect_blocks(img, cfg.block)?;
    let (w, h) = (img.width(), img.height());
    let mut total = 0.0;
    for c in 0..3 {
        let plane = img.channel_f64(c);
        let edges: Vec<f64> = plane
            .iter()
            .zip(sobel_magnitude(&plane, w, h))
            .map(|(v, m)| v * m / FULL_STEP_RESPONSE)
            .collect();
        total += cfg.uism_lambda[c] * eme(&edges, w, h, cfg.block);
    }
    Ok(total)
}

/// Contrast: block-wise log-AMEE with PLIP difference and sum,
/// `-(1/k₁k₂)·Σ r·ln r` with `r = (max ⊖ min) / (max ⊕ min)` taken over all
/// three channels of each block.
pub fn uiconm(img: &RgbImage, cfg: &UiqmConfig) -> Result<f64> {
    expect_blocks(img, cfg.block)?;
    let (w, h) = (img.width(), img.height());
    let planes: Vec<Vec<f64>> = (0..3).map(|c| img.channel_f64(c)).collect();
    let refs: Vec<&[f64]> = planes.iter().map(Vec::as_slice).collect();
    let g = cfg.plip_gamma;
    let mut sum = 0.0;
    let n = for_each_block(&refs, w, h, cfg.block, |hi, lo| {
        let diff = g * (hi - lo) / (g - lo);
        let add = hi + lo - hi * lo / g;
        if diff > 0.0 && add > 0.0 {
            let r = diff / add;
            sum += r * r.ln();
        }
    });
    Ok(-sum / n as f64)
}

pub fn uiqm(img: &RgbImage, cfg: &UiqmConfig) -> Result<UiqmScores> {
    let (cm, sm, conm) = (uicm(img, cfg)?, uism(img, cfg)?, uiconm(img, cfg)?);
    Ok(UiqmScores {
        uicm: cm,
        uism: sm,
        uiconm: conm,
        uiqm: cfg.coefficients.combine(cm, sm, conm),
    })
}
