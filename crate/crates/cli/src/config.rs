use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use uwnet_core::bench::TimingConfig;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    #[default]
    Table,
}

/// Every setting of a run. It is embedded verbatim in each report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub data: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub epochs: u32,
    pub lr: f64,
    pub batch: usize,
    pub dropout: f64,
    pub seed: u64,
    /// Extractor manifest; `None` is the identity extractor.
    pub extractor: Option<PathBuf>,
    /// Square training crop size; bench also uses it for synthetic inputs.
    pub image_size: usize,
    pub train_pairs: Option<usize>,
    pub val_pairs: usize,
    pub enhanced: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub baselines: Option<PathBuf>,
    pub timing: TimingConfig,
    pub timing_images: usize,
    pub format: Format,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        RunConfig {
            command: command.to_owned(),
            data: None,
            weights: None,
            out: None,
            epochs: 50,
            lr: 2e-4,
            batch: 1,
            dropout: 0.2,
            seed: 0,
            extractor: None,
            image_size: 256,
            train_pairs: None,
            val_pairs: 0,
            enhanced: None,
            reference: None,
            baselines: None,
            timing: TimingConfig::default(),
            timing_images: 1,
            format: Format::Table,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(CliError::Config(format!("--lr must be finite and ≥ 0, got {}", self.lr)));
        }
        if self.batch != 1 {
            return Err(CliError::Config(format!(
                "only batch size 1 is supported, got {}",
                self.batch
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(CliError::Config(format!(
                "--dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        if self.image_size < 3 {
            return Err(CliError::Config(format!(
                "--size must be at least 3, got {}",
                self.image_size
            )));
        }
        if self.timing.timed_runs == 0 || self.timing_images == 0 {
            return Err(CliError::Config("timing needs at least one run and one image".into()));
        }
        Ok(())
    }

    pub fn require<'a>(&self, field: &'a Option<PathBuf>, flag: &str) -> Result<&'a PathBuf, CliError> {
        field
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("{} requires {flag}", self.command)))
    }
}
