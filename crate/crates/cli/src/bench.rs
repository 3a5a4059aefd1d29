use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use uwnet_core::bench::{
    compare, default_baselines, measure_latency, parse_baselines, render_bench_table, BenchRecord,
    Comparison, Environment, TimingStats, PUBLISHED_SELF,
};
use uwnet_core::data::synthetic::underwater_pair;
use uwnet_core::data::{read_image, ImageFormat};
use uwnet_core::model::{build_canonical, forward, Mode};
use uwnet_core::{NetworkConfig, Tensor};

use crate::error::CliError;
use crate::report::{load_weights, read_file, write_json, ParameterSummary};
use crate::RunConfig;

pub const REPORT_FILE: &str = "bench_report.json";
pub const MODEL_NAME: &str = "uwnet";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Methodology {
    pub statistic: String,
    pub mode: String,
    pub threads: usize,
    pub precision: String,
    pub inputs: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub run_config: RunConfig,
    /// `None` when no weight file was given and a seeded fresh network was
    /// timed instead; latency does not depend on weight values.
    pub weights_sha256: Option<String>,
    pub network: NetworkConfig,
    pub parameters: ParameterSummary,
    pub ours: BenchRecord,
    pub comparisons: Vec<Comparison>,
    /// The published self row against the same baselines; reproduces the
    /// printed compression and speed-up columns.
    pub published_comparisons: Vec<Comparison>,
    pub timing: TimingStats,
    pub methodology: Methodology,
    pub environment: Environment,
}

impl BenchReport {
    pub fn render(&self) -> String {
        let mut out = String::from("Measured on this machine:\n");
        out.push_str(&render_bench_table(&self.ours, &self.comparisons));
        out.push_str("\nPublished figures for this model:\n");
        let published_self = BenchRecord {
            name: format!("{MODEL_NAME} (published)"),
            alpha: PUBLISHED_SELF.alpha,
            beta_seconds: PUBLISHED_SELF.beta_seconds,
        };
        out.push_str(&render_bench_table(&published_self, &self.published_comparisons));
        out.push('\n');
        out.push_str(&self.parameters.render());
        let e = &self.environment;
        let _ = writeln!(
            out,
            "\n{} over {} timed runs after {} warmups, {} image(s); {} on {}/{}, {} of {} logical CPUs",
            self.methodology.statistic,
            self.timing.timed_runs,
            self.timing.warmup_runs,
            self.timing.images,
            e.precision,
            e.os,
            e.arch,
            e.threads_used,
            e.logical_cpus
        );
        out
    }
}

fn timing_inputs(config: &RunConfig) -> Result<(Vec<Tensor<f32>>, String), CliError> {
    if let Some(dir) = &config.data {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| ImageFormat::from_path(p).is_some())
            .collect();
        files.sort();
        files.truncate(config.timing_images);
        if files.is_empty() {
            return Err(CliError::Config(format!("timing set is empty: no images in {}", dir.display())));
        }
        let tensors = files
            .iter()
            .map(|p| read_image(p).map(|img| img.to_tensor()).map_err(CliError::config))
            .collect::<Result<Vec<_>, _>>()?;
        let desc = format!("{} image(s) from {}", tensors.len(), dir.display());
        return Ok((tensors, desc));
    }
    let s = config.image_size;
    let tensors = (0..config.timing_images)
        .map(|i| underwater_pair(s, s, config.seed.wrapping_add(i as u64)).0.to_tensor())
        .collect();
    Ok((tensors, format!("{} synthetic {s}x{s} image(s)", config.timing_images)))
}

pub fn run(config: &RunConfig) -> Result<BenchReport, CliError> {
    config.validate()?;
    let baselines = match &config.baselines {
        Some(path) => {
            let text = String::from_utf8(read_file(path)?).map_err(CliError::config)?;
            parse_baselines(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => default_baselines(),
    };
    let (params, weights_sha256) = match &config.weights {
        Some(path) => {
            let (p, sha) = load_weights(path)?;
            (p, Some(sha))
        }
        None => {
            let network = NetworkConfig {
                dropout_rate: config.dropout,
                ..NetworkConfig::default()
            };
            (build_canonical(&network, config.seed).map_err(CliError::config)?, None)
        }
    };
    let network = params.infer_config(config.dropout).map_err(CliError::config)?;
    let (inputs, inputs_desc) = timing_inputs(config)?;

    let timing = measure_latency(&inputs, config.timing, |x| {
        forward(&network, &params, x, Mode::Infer, 0).map(|_| ())
    })
    .map_err(CliError::failed)?;
    let parameters = ParameterSummary::of(&params);
    let ours = BenchRecord {
        name: MODEL_NAME.into(),
        alpha: parameters.total as u64,
        beta_seconds: timing.median_seconds_per_image,
    };
    let comparisons = compare(&ours, &baselines).map_err(CliError::failed)?;
    let published_self = BenchRecord {
        name: format!("{MODEL_NAME} (published)"),
        alpha: PUBLISHED_SELF.alpha,
        beta_seconds: PUBLISHED_SELF.beta_seconds,
    };
    let published_comparisons = compare(&published_self, &baselines).map_err(CliError::failed)?;
    let environment = Environment::current();
    let report = BenchReport {
        run_config: config.clone(),
        weights_sha256,
        network,
        parameters,
        ours,
        comparisons,
        published_comparisons,
        timing,
        methodology: Methodology {
            statistic: "median per-image wall time".into(),
            mode: "inference (dropout off)".into(),
            threads: environment.threads_used,
            precision: environment.precision.clone(),
            inputs: inputs_desc,
        },
        environment,
    };
    if let Some(out) = &config.out {
        write_json(&out.join(REPORT_FILE), &report)?;
    }
    Ok(report)
}
