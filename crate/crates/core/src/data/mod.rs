//! Image decode/encode, resizing and paired-dataset handling.

mod codec;
mod dataset;
mod resize;
pub mod synthetic;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Real, Shape, Tensor};

pub use codec::{
    decode_image, decode_rgb8, encode_image, encode_rgb8, read_image, write_image, ImageFormat,
};
pub use dataset::{
    load_sample, open_dataset, scan_dataset, split, DatasetManifest, PairEntry, PairedSample,
    Split, MANIFEST_FILE,
};
pub use resize::resize_bilinear;

/// Interleaved 8-bit RGB image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height * 3 {
            return Err(Error::InvalidArgument(format!(
                "{width}x{height} RGB image needs {} bytes, got {}",
                width * height * 3,
                pixels.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let pixels = rgb.iter().copied().cycle().take(width * height * 3).collect();
        RgbImage {
            width,
            height,
            pixels,
        }
    }

    /// Uniformly random pixels from a seeded stream.
    pub fn random(width: usize, height: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pixels = (0..width * height * 3).map(|_| rng.random::<u8>()).collect();
        RgbImage {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// One channel as a row-major plane of 0–255 values.
    pub fn channel_f64(&self, c: usize) -> Vec<f64> {
        self.pixels.iter().skip(c).step_by(3).map(|&v| v as f64).collect()
    }

    pub fn expect_same_size(&self, other: &RgbImage) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::InvalidArgument(format!(
                "image sizes differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// `(1, 3, H, W)` tensor with values `x / 255`.
    pub fn to_tensor<T: Real>(&self) -> Tensor<T> {
        let (w, h) = (self.width, self.height);
        let mut data = vec![T::zero(); 3 * w * h];
        for (i, px) in self.pixels.chunks_exact(3).enumerate() {
            for c in 0..3 {
                data[c * w * h + i] = T::of(px[c] as f64 / 255.0);
            }
        }
        Tensor::from_vec(Shape::new(1, 3, h, w), data).expect("sized above")
    }

    /// Batch item `n` of a 3-channel tensor, clamped to `[0, 1]` and
    /// rounded to the nearest 8-bit level.
    pub fn from_tensor<T: Real>(t: &Tensor<T>, n: usize) -> Result<Self> {
        let s = t.shape();
        if s.c != 3 {
            return Err(Error::ChannelMismatch {
                op: "export",
                expected: 3,
                actual: s.c,
            });
        }
        if n >= s.n {
            return Err(Error::InvalidArgument(format!(
                "batch index {n} out of range for {} items",
                s.n
            )));
        }
        let hw = s.plane();
        let base = n * 3 * hw;
        let mut pixels = Vec::with_capacity(3 * hw);
        for i in 0..hw {
            for c in 0..3 {
                let v = t.data()[base + c * hw + i].as_f64();
                let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
                pixels.push((v * 255.0).round() as u8);
            }
        }
        RgbImage::new(s.w, s.h, pixels)
    }
}
