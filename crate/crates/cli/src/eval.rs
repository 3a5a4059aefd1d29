use std::path::Path;

use serde::{Deserialize, Serialize};
use uwnet_core::data::{open_dataset, read_image, scan_dataset, PairEntry};
use uwnet_core::metrics::{evaluate_pair, render_table, MetricReport, MetricRow, SsimConfig, UiqmConfig, DEFAULT_PEAK};

use crate::enhance::{enhance_image, FileError};
use crate::error::{CliError, Outcome};
use crate::report::{load_weights, read_file, sha256_hex, write_file, write_json};
use crate::RunConfig;

pub const REPORT_FILE: &str = "eval_report.json";
pub const TABLE_FILE: &str = "eval_table.txt";
pub const MODEL_NAME: &str = "uwnet";

/// Constants the numbers depend on, recorded with every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSettings {
    pub psnr_peak: f64,
    pub ssim: SsimConfig,
    pub uiqm: UiqmConfig,
    pub inputs: String,
}

impl Default for MetricSettings {
    fn default() -> Self {
        MetricSettings {
            psnr_peak: DEFAULT_PEAK,
            ssim: SsimConfig::default(),
            uiqm: UiqmConfig::default(),
            inputs: "8-bit RGB images as exported; identical pairs are flagged as infinite PSNR and \
                     left out of the PSNR mean"
                .into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub run_config: RunConfig,
    pub dataset: String,
    pub weights_sha256: Option<String>,
    pub settings: MetricSettings,
    pub report: MetricReport,
    /// Raw input against reference, when the run enhanced the raw images
    /// itself.
    pub raw_baseline: Option<MetricReport>,
    pub warnings: Vec<String>,
    pub errors: Vec<FileError>,
}

impl EvalReport {
    pub fn outcome(&self) -> Outcome {
        if self.errors.is_empty() {
            Outcome::Complete
        } else {
            Outcome::Partial
        }
    }

    pub fn render(&self) -> String {
        let mut out = render_table(MODEL_NAME, &[(&self.dataset, &self.report)]);
        if let Some(raw) = &self.raw_baseline {
            out.push('\n');
            out.push_str(&render_table("raw input", &[(&self.dataset, raw)]));
        }
        for e in &self.errors {
            out.push_str(&format!("error {}: {}\n", e.file.display(), e.error));
        }
        out
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn to_str(p: &Path) -> Result<&str, CliError> {
    p.to_str()
        .ok_or_else(|| CliError::Config(format!("path is not valid UTF-8: {}", p.display())))
}

/// Pairs to score: either enhanced/reference directories matched by stem,
/// or a dataset root whose raw images are enhanced here.
fn pairs(config: &RunConfig) -> Result<(Vec<PairEntry>, Vec<String>, String), CliError> {
    if let (Some(enhanced), Some(reference)) = (&config.enhanced, &config.reference) {
        let m = scan_dataset(Path::new(""), to_str(enhanced)?, to_str(reference)?).map_err(CliError::config)?;
        return Ok((m.pairs, m.warnings, dataset_name(reference)));
    }
    if config.enhanced.is_some() || config.reference.is_some() {
        return Err(CliError::Config("--enhanced and --reference must be given together".into()));
    }
    let root = config.require(&config.data, "--data (or --enhanced with --reference)")?;
    let m = open_dataset(root).map_err(CliError::config)?;
    Ok((m.pairs, m.warnings, dataset_name(root)))
}

pub fn run(config: &RunConfig) -> Result<EvalReport, CliError> {
    config.validate()?;
    let (pairs, warnings, dataset) = pairs(config)?;
    let model = if config.enhanced.is_none() {
        let (params, sha) = load_weights(config.require(&config.weights, "--weights when evaluating --data")?)?;
        let network = params.infer_config(config.dropout).map_err(CliError::config)?;
        Some((params, network, sha))
    } else {
        None
    };
    let settings = MetricSettings::default();

    let mut rows = Vec::new();
    let mut raw_rows = Vec::new();
    let mut errors = Vec::new();
    for p in &pairs {
        let scored = (|| -> uwnet_core::Result<(MetricRow, Option<MetricRow>)> {
            let (first, reference) = (read_image(&p.raw)?, read_image(&p.reference)?);
            let score = |img| evaluate_pair(&p.id, img, &reference, &settings.ssim, &settings.uiqm);
            match &model {
                Some((params, network, _)) => {
                    let enhanced = enhance_image(network, params, &first)?;
                    Ok((score(&enhanced)?, Some(score(&first)?)))
                }
                None => Ok((score(&first)?, None)),
            }
        })();
        match scored {
            Ok((row, raw)) => {
                rows.push(row);
                raw_rows.extend(raw);
            }
            Err(e) => errors.push(FileError {
                file: p.raw.clone(),
                error: e.to_string(),
            }),
        }
    }
    if rows.is_empty() {
        return Err(CliError::Failed(format!("no pair could be evaluated ({} errors)", errors.len())));
    }
    let report = MetricReport::from_rows(rows).map_err(CliError::failed)?;
    let raw_baseline = if raw_rows.is_empty() {
        None
    } else {
        Some(MetricReport::from_rows(raw_rows).map_err(CliError::failed)?)
    };
    let weights_sha256 = match (model, &config.weights) {
        (Some((_, _, sha)), _) => Some(sha),
        (None, Some(path)) => Some(sha256_hex(&read_file(path)?)),
        (None, None) => None,
    };
    let result = EvalReport {
        run_config: config.clone(),
        dataset,
        weights_sha256,
        settings,
        report,
        raw_baseline,
        warnings,
        errors,
    };
    if let Some(out) = &config.out {
        write_json(&out.join(REPORT_FILE), &result)?;
        write_file(&out.join(TABLE_FILE), result.render().as_bytes())?;
    }
    Ok(result)
}
