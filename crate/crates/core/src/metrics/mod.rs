//! Full-reference (PSNR, SSIM) and no-reference (UIQM) image quality
//! measures, plus the compression and speed-up ratios used to compare model
//! footprints.
//!
//! Metrics operate on exported 8-bit images ([`RgbImage`]), so reported
//! numbers match the files a user actually writes.

mod psnr;
mod rates;
mod report;
mod ssim;
mod uiqm;

pub use psnr::{psnr, Psnr, DEFAULT_PEAK};
pub use rates::{compression_rate, speed_up, RateComparison};
pub use report::{aggregate, evaluate_pair, render_table, MeanStd, MetricAggregate, MetricReport, MetricRow};
pub use ssim::{ssim, ssim_with, SsimConfig};
pub use uiqm::{uicm, uiconm, uiqm, uism, UiqmCoefficients, UiqmConfig, UiqmScores};

pub use crate::data::RgbImage;
