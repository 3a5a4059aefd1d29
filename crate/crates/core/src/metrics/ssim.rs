use serde::{Deserialize, Serialize};

use super::RgbImage;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        SsimConfig {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: 255.0,
        }
    }
}

impl SsimConfig {
    /// Normalised 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn kernel(&self) -> Vec<f64> {
        let c = (self.window as f64 - 1.0) / 2.0;
        let taps: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - c;
                (-(d * d) / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let s: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / s).collect()
    }
}

/// Gaussian-windowed SSIM with default constants, averaged over channels.
pub fn ssim(estimate: &RgbImage, reference: &RgbImage) -> Result<f64> {
    ssim_with(estimate, reference, &SsimConfig::default())
}

/// Mean of the local SSIM map over every window position that lies fully
/// inside the image, computed per channel and averaged.
pub fn ssim_with(estimate: &RgbImage, reference: &RgbImage, cfg: &SsimConfig) -> Result<f64> {
    estimate.expect_same_size(reference)?;
    let (w, h) = (estimate.width(), estimate.height());
    if w < cfg.window || h < cfg.window {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: cfg.window,
        });
    }
    if cfg.window % 2 == 0 || cfg.sigma <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "SSIM window must be odd with positive sigma: {cfg:?}"
        )));
    }
    let kernel = cfg.kernel();
    let sum: f64 = (0..3)
        .map(|c| {
            ssim_plane(
                &estimate.channel_f64(c),
                &reference.channel_f64(c),
                w,
                h,
                &kernel,
                cfg,
            )
        })
        .sum();
    Ok(sum / 3.0)
}

/// Separable "valid" filtering: output is `(h - k + 1) × (w - k + 1)`.
fn filter_valid(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut tmp = vec![0.0; h * ow];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = kernel.iter().zip(&row[x..x + k]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            let mut s = 0.0;
            for (i, &kv) in kernel.iter().enumerate() {
                s += kv * tmp[(y + i) * ow + x];
            }
            out[y * ow + x] = s;
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize, kernel: &[f64], cfg: &SsimConfig) -> f64 {
    let c1 = (cfg.k1 * cfg.data_range).powi(2);
    let c2 = (cfg.k2 * cfg.data_range).powi(2);
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
    };
    let mu_a = filter_valid(a, w, h, kernel);
    let mu_b = filter_valid(b, w, h, kernel);
    let e_aa = filter_valid(&prod(&|x, _| x * x), w, h, kernel);
    let e_bb = filter_valid(&prod(&|_, y| y * y), w, h, kernel);
    let e_ab = filter_valid(&prod(&|x, y| x * y), w, h, kernel);
    let n = mu_a.len();
    let mut total = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total / n as f64
}
