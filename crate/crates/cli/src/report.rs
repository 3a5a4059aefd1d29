//! Pieces shared by every report: hashes, parameter accounting, extractor
//! provenance and file output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uwnet_core::model::{LayerCount, REFERENCE_PARAMETER_COUNT};
use uwnet_core::{FeatureExtractor, ParameterStore};

use crate::error::CliError;
use crate::RunConfig;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Loads a weight file, returning the store and the file's content hash.
pub fn load_weights(path: &Path) -> Result<(ParameterStore, String), CliError> {
    let bytes = read_file(path)?;
    let store = ParameterStore::load_weights(&bytes)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((store, sha256_hex(&bytes)))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Failed(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::failed)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub total: usize,
    pub reference_total: usize,
    pub delta_vs_reference: i64,
    pub delta_explanation: String,
    pub per_layer: Vec<LayerCount>,
}

impl ParameterSummary {
    pub fn of(store: &ParameterStore) -> Self {
        let count = store.count_parameters();
        let delta = count.delta_vs_reference();
        let delta_explanation = format!(
            "This count follows the canonical wiring: a head conv, then per block two feature convs \
             with dropout and a closing conv over the features concatenated with the raw image, then \
             a final conv to RGB. It totals {} parameters against the reference figure of {} \
             (delta {delta:+}). The architecture description admits no wiring we could find that \
             reproduces the reference figure exactly, so the difference is reported, not forced; \
             the per-layer rows show where every parameter sits.",
            count.total, REFERENCE_PARAMETER_COUNT
        );
        ParameterSummary {
            total: count.total,
            reference_total: REFERENCE_PARAMETER_COUNT,
            delta_vs_reference: delta,
            delta_explanation,
            per_layer: count.per_layer,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14} {:>5} {:>6} {:>3} {:>9}", "layer", "c_in", "c_out", "k", "params");
        for l in &self.per_layer {
            let _ = writeln!(
                out,
                "{:<14} {:>5} {:>6} {:>3} {:>9}",
                l.name, l.c_in, l.c_out, l.kernel, l.total
            );
        }
        let _ = writeln!(
            out,
            "total {} (reference {}, delta {:+})",
            self.total, self.reference_total, self.delta_vs_reference
        );
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractorInfo {
    /// `identity` or `manifest`.
    pub kind: String,
    pub manifest: Option<PathBuf>,
    pub weights_sha256: Option<String>,
    pub conv_layers: usize,
    /// What the extractor is fed.
    pub input: String,
}

pub fn load_extractor(config: &RunConfig) -> Result<(FeatureExtractor, ExtractorInfo), CliError> {
    let input = "RGB in [0, 1], no channel normalisation".to_owned();
    let Some(manifest) = &config.extractor else {
        return Ok((
            FeatureExtractor::identity(),
            ExtractorInfo {
                kind: "identity".into(),
                manifest: None,
                weights_sha256: None,
                conv_layers: 0,
                input,
            },
        ));
    };
    let extractor = FeatureExtractor::load(manifest).map_err(CliError::config)?;
    let weights_path = FeatureExtractor::<f32>::weights_path_for(manifest);
    let weights_sha256 = extractor
        .weights()
        .filter(|w| !w.is_empty())
        .map(|_| read_file(&weights_path).map(|b| sha256_hex(&b)))
        .transpose()?;
    let info = ExtractorInfo {
        kind: "manifest".into(),
        manifest: Some(manifest.clone()),
        weights_sha256,
        conv_layers: extractor.spec().conv_layers().count(),
        input,
    };
    Ok((extractor, info))
}
