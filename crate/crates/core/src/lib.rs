//! Shallow convolutional enhancement network for underwater imagery.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`]: a small dense 4-D tensor with hand-written forward and
//!   backward kernels (convolution, ReLU, dropout, channel concatenation,
//!   2×2 max pooling) and the Adam optimizer.
//! - [`model`]: the three-block network with raw-image skip concatenation,
//!   its training step, parameter accounting and the `SUWN` weight format.
//! - [`loss`]: pixel MSE plus a frozen feature-space (perceptual) distance.
//! - [`metrics`]: PSNR, SSIM, UIQM (UICM/UISM/UIConM), compression and
//!   speed-up rates, and mean ± std aggregation.
//! - [`data`]: PPM/PNG/JPEG decode and encode, bilinear resize, paired
//!   dataset scanning and seeded splits.
//! - [`bench`]: latency measurement and compression/speed-up reports.
//!
//! All kernels are generic over [`tensor::Real`], so the same network code
//! runs in `f32` for training and deployment and in `f64` for gradient
//! checking.

pub mod bench;
pub mod data;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod tensor;

pub use error::{Error, Result};
pub use loss::{FeatureExtractor, LossReport};
pub use model::{NetworkConfig, ParameterStore, TrainState};
pub use tensor::{Shape, Tensor};
