//! Deterministic degraded/clean image pairs for tests, demos and smoke runs.
//!
//! The clean image is a smooth mix of random sinusoids per channel. The
//! degraded copy mimics water-column colour loss: red is strongly
//! attenuated, and a blue-green veil is added to every channel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::RgbImage;

/// Per-channel (gain, offset) applied to the clean image in `[0, 1]`.
pub const DEGRADATION: [(f64, f64); 3] = [(0.45, 0.05), (0.80, 0.12), (0.75, 0.20)];

pub fn clean_image(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<[(f64, f64, f64); 3]> = (0..3)
        .map(|_| {
            std::array::from_fn(|_| {
                (
                    rng.random_range(0.5..3.0),
                    rng.random_range(0.5..3.0),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
        })
        .collect();
    let mut pixels = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let (u, v) = (x as f64 / width as f64, y as f64 / height as f64);
            for wave in &waves {
                let s: f64 = wave
                    .iter()
                    .map(|&(fx, fy, ph)| (std::f64::consts::TAU * (fx * u + fy * v) + ph).sin())
                    .sum::<f64>()
                    / 3.0;
                pixels.push(((0.5 + 0.4 * s) * 255.0).round() as u8);
            }
        }
    }
    RgbImage::new(width, height, pixels).expect("sized above")
}

pub fn degrade(clean: &RgbImage) -> RgbImage {
    let mut out = clean.clone();
    for px in out.pixels_mut().chunks_exact_mut(3) {
        for (c, &(gain, offset)) in DEGRADATION.iter().enumerate() {
            let v = px[c] as f64 / 255.0 * gain + offset;
            px[c] = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        }
    }
    out
}

/// `(raw, reference)`.
pub fn underwater_pair(width: usize, height: usize, seed: u64) -> (RgbImage, RgbImage) {
    let clean = clean_image(width, height, seed);
    (degrade(&clean), clean)
}
