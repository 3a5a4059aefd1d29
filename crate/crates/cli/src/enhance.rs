use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uwnet_core::data::{read_image, write_image, ImageFormat, RgbImage};
use uwnet_core::model::{forward, Mode};
use uwnet_core::{NetworkConfig, ParameterStore};

use crate::error::{CliError, Outcome};
use crate::report::{load_weights, write_json};
use crate::RunConfig;

pub const REPORT_FILE: &str = "enhance_report.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhancedFile {
    pub input: PathBuf,
    pub output: PathBuf,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileError {
    pub file: PathBuf,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhanceReport {
    pub run_config: RunConfig,
    pub weights_sha256: String,
    pub network: NetworkConfig,
    pub outputs: Vec<EnhancedFile>,
    pub errors: Vec<FileError>,
}

impl EnhanceReport {
    pub fn outcome(&self) -> Outcome {
        if self.errors.is_empty() {
            Outcome::Complete
        } else {
            Outcome::Partial
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for f in &self.outputs {
            let _ = writeln!(
                out,
                "ok    {} -> {} ({}x{})",
                f.input.display(),
                f.output.display(),
                f.width,
                f.height
            );
        }
        for e in &self.errors {
            let _ = writeln!(out, "error {}: {}", e.file.display(), e.error);
        }
        let _ = writeln!(out, "{} enhanced, {} failed", self.outputs.len(), self.errors.len());
        out
    }
}

/// Image files (by extension) under `input`, or `input` itself, sorted.
fn collect_inputs(input: &Path) -> Result<Vec<PathBuf>, CliError> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let entries = std::fs::read_dir(input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && ImageFormat::from_path(p).is_some())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(format!("no images found in {}", input.display())));
    }
    Ok(files)
}

/// Runs the network in inference mode, then clamps and quantises to 8 bits.
pub fn enhance_image(network: &NetworkConfig, params: &ParameterStore, img: &RgbImage) -> uwnet_core::Result<RgbImage> {
    let y = forward(network, params, &img.to_tensor::<f32>(), Mode::Infer, 0)?;
    RgbImage::from_tensor(&y, 0)
}

fn enhance_file(network: &NetworkConfig, params: &ParameterStore, input: &Path, out_dir: &Path) -> Result<EnhancedFile, String> {
    let img = read_image(input).map_err(|e| e.to_string())?;
    let enhanced = enhance_image(network, params, &img).map_err(|e| e.to_string())?;
    let output = out_dir.join(input.file_name().ok_or("no file name")?);
    write_image(&output, &enhanced).map_err(|e| e.to_string())?;
    Ok(EnhancedFile {
        input: input.to_path_buf(),
        output,
        width: enhanced.width(),
        height: enhanced.height(),
    })
}

/// Enhances one file or every image in a directory. Per-file failures are
/// collected; the remaining files are still written.
pub fn run(config: &RunConfig) -> Result<EnhanceReport, CliError> {
    config.validate()?;
    let (params, weights_sha256) = load_weights(config.require(&config.weights, "--weights")?)?;
    let network = params.infer_config(config.dropout).map_err(CliError::config)?;
    let inputs = collect_inputs(config.require(&config.data, "--data")?)?;
    let out_dir = config.require(&config.out, "--out")?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;

    let mut outputs = Vec::new();
    let mut errors = Vec::new();
    for input in inputs {
        match enhance_file(&network, &params, &input, out_dir) {
            Ok(f) => outputs.push(f),
            Err(error) => errors.push(FileError { file: input, error }),
        }
    }
    let report = EnhanceReport {
        run_config: config.clone(),
        weights_sha256,
        network,
        outputs,
        errors,
    };
    write_json(&out_dir.join(REPORT_FILE), &report)?;
    Ok(report)
}
