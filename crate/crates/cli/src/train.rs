use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use uwnet_core::data::{load_sample, open_dataset, split, PairedSample, Split};
use uwnet_core::loss::total_loss;
use uwnet_core::model::{build_canonical, forward, mix_seed, train_step, Mode};
use uwnet_core::tensor::AdamConfig;
use uwnet_core::{LossReport, NetworkConfig, TrainState};

use crate::error::CliError;
use crate::report::{load_extractor, sha256_hex, write_file, write_json, ExtractorInfo, ParameterSummary};
use crate::RunConfig;

pub const WEIGHTS_FILE: &str = "weights.suwn";
pub const LOSS_LOG_FILE: &str = "loss_log.csv";
pub const REPORT_FILE: &str = "train_report.json";

/// Stream index separating the epoch-shuffle seeds from other seed uses.
const SHUFFLE_STREAM: u64 = 0x5348_5546;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: u32,
    pub l_mse: f64,
    pub l_vgg: f64,
    pub l_total: f64,
    /// Mean inference-mode loss over the validation pairs, if any.
    pub val_l_total: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub root: PathBuf,
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub run_config: RunConfig,
    pub weights_file: PathBuf,
    pub weights_sha256: String,
    pub loss_log: PathBuf,
    pub network: NetworkConfig,
    pub optimizer: AdamConfig,
    pub parameters: ParameterSummary,
    pub extractor: ExtractorInfo,
    pub dataset: DatasetSummary,
    pub steps: u64,
    pub epochs: Vec<EpochRow>,
}

impl TrainReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "epoch  l_mse       l_vgg       l_total     val_l_total");
        for r in &self.epochs {
            let val = r.val_l_total.map_or("-".to_owned(), |v| format!("{v:.6}"));
            let _ = writeln!(
                out,
                "{:<6} {:<11.6} {:<11.6} {:<11.6} {val}",
                r.epoch, r.l_mse, r.l_vgg, r.l_total
            );
        }
        let _ = writeln!(
            out,
            "{} steps on {} train / {} val pairs; weights {} (sha256 {})",
            self.steps,
            self.dataset.train_ids.len(),
            self.dataset.val_ids.len(),
            self.weights_file.display(),
            self.weights_sha256
        );
        out.push_str(&self.parameters.render());
        out
    }
}

pub fn loss_log_csv(rows: &[EpochRow]) -> String {
    let mut s = String::from("epoch,l_mse,l_vgg,l_total,val_l_total\n");
    for r in rows {
        let val = r.val_l_total.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(s, "{},{},{},{},{val}", r.epoch, r.l_mse, r.l_vgg, r.l_total);
    }
    s
}

/// Train indices in a seeded order that changes every epoch.
fn epoch_order(n: usize, seed: u64, epoch: u32) -> Vec<usize> {
    let key = mix_seed(mix_seed(seed, SHUFFLE_STREAM), epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (mix_seed(key, i as u64), i));
    order
}

fn mean_report(reports: &[LossReport]) -> LossReport {
    let n = reports.len().max(1) as f64;
    LossReport::new(
        reports.iter().map(|r| r.l_mse).sum::<f64>() / n,
        reports.iter().map(|r| r.l_vgg).sum::<f64>() / n,
    )
}

fn load_split(config: &RunConfig) -> Result<(Vec<PairedSample>, Vec<PairedSample>, DatasetSummary), CliError> {
    let root = config.require(&config.data, "--data")?;
    let manifest = open_dataset(root).map_err(CliError::config)?;
    let total = manifest.pairs.len();
    let train_n = config.train_pairs.unwrap_or(total.saturating_sub(config.val_pairs));
    let manifest = split(&manifest, train_n, config.val_pairs, config.seed).map_err(CliError::config)?;
    if train_n == 0 {
        return Err(CliError::Config("the train split is empty".into()));
    }
    let size = (config.image_size, config.image_size);
    let load = |s: Split| -> Result<Vec<PairedSample>, CliError> {
        manifest
            .with_split(s)
            .map(|p| load_sample(p, size).map_err(|e| CliError::Config(format!("pair {:?}: {e}", p.id))))
            .collect()
    };
    let (train, val) = (load(Split::Train)?, load(Split::Val)?);
    let summary = DatasetSummary {
        root: root.clone(),
        train_ids: train.iter().map(|s| s.id.clone()).collect(),
        val_ids: val.iter().map(|s| s.id.clone()).collect(),
        warnings: manifest.warnings.clone(),
    };
    Ok((train, val, summary))
}

/// Trains from a fresh seeded initialisation, writing the weight file, the
/// per-epoch CSV log and the JSON report into `--out`.
pub fn run(config: &RunConfig) -> Result<TrainReport, CliError> {
    config.validate()?;
    let out = config.require(&config.out, "--out")?.clone();
    let network = NetworkConfig {
        dropout_rate: config.dropout,
        ..NetworkConfig::default()
    };
    let (extractor, extractor_info) = load_extractor(config)?;
    let (train, val, dataset) = load_split(config)?;
    let params = build_canonical(&network, config.seed).map_err(CliError::config)?;
    let optimizer = AdamConfig {
        lr: config.lr,
        ..AdamConfig::default()
    };
    let mut state = TrainState::new(network.clone(), params, optimizer, config.seed).map_err(CliError::config)?;

    let mut epochs = Vec::with_capacity(config.epochs as usize);
    for epoch in 1..=config.epochs {
        state.epoch = epoch;
        let mut reports = Vec::with_capacity(train.len());
        for i in epoch_order(train.len(), config.seed, epoch) {
            let r = train_step(&mut state, &train[i].raw, &train[i].reference, &extractor).map_err(|e| {
                CliError::Failed(format!(
                    "epoch {epoch}, step {} (pair {:?}): {e}",
                    state.step + 1,
                    train[i].id
                ))
            })?;
            reports.push(r);
        }
        let val_l_total = if val.is_empty() {
            None
        } else {
            let mut sum = 0.0;
            for s in &val {
                let y = forward(&network, &state.params, &s.raw, Mode::Infer, 0).map_err(CliError::failed)?;
                sum += total_loss(&y, &s.reference, &extractor).map_err(CliError::failed)?.l_total;
            }
            Some(sum / val.len() as f64)
        };
        let m = mean_report(&reports);
        eprintln!("epoch {epoch}/{}: l_total {:.6}", config.epochs, m.l_total);
        epochs.push(EpochRow {
            epoch,
            l_mse: m.l_mse,
            l_vgg: m.l_vgg,
            l_total: m.l_total,
            val_l_total,
        });
    }

    let weights_file = config.weights.clone().unwrap_or_else(|| out.join(WEIGHTS_FILE));
    let bytes = state.params.save_weights().map_err(CliError::failed)?;
    write_file(&weights_file, &bytes)?;
    let loss_log = out.join(LOSS_LOG_FILE);
    write_file(&loss_log, loss_log_csv(&epochs).as_bytes())?;

    let report = TrainReport {
        run_config: config.clone(),
        weights_file,
        weights_sha256: sha256_hex(&bytes),
        loss_log,
        network,
        optimizer,
        parameters: ParameterSummary::of(&state.params),
        extractor: extractor_info,
        dataset,
        steps: state.step,
        epochs,
    };
    write_json(&out.join(REPORT_FILE), &report)?;
    Ok(report)
}
