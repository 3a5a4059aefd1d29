//! Footprint and latency comparison against other enhancement models.
//!
//! Each model is summarised by its parameter count α and per-image
//! inference time β. Comparisons report both the plain ratio and the
//! `ratio − 1` gain that published compression tables print.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{compression_rate, speed_up, RateComparison};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub name: String,
    pub alpha: u64,
    pub beta_seconds: f64,
}

impl BenchRecord {
    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0 || !(self.beta_seconds > 0.0) || !self.beta_seconds.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "benchmark record {:?} needs alpha > 0 and beta > 0",
                self.name
            )));
        }
        Ok(())
    }
}

/// Published figures for a named model: parameters, seconds per image and
/// the printed compression / speed-up columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedRow {
    pub alpha: u64,
    pub beta_seconds: f64,
    pub compression: f64,
    pub speed_up: f64,
}

pub const PUBLISHED_SELF: PublishedRow = PublishedRow {
    alpha: 219_840,
    beta_seconds: 0.02,
    compression: 1.0,
    speed_up: 1.0,
};

const PUBLISHED: [(&str, PublishedRow); 3] = [
    (
        "WaterNet",
        PublishedRow {
            alpha: 1_090_668,
            beta_seconds: 0.50,
            compression: 3.96,
            speed_up: 24.0,
        },
    ),
    (
        "Deep SESR",
        PublishedRow {
            alpha: 2_454_023,
            beta_seconds: 0.16,
            compression: 10.17,
            speed_up: 7.0,
        },
    ),
    (
        "FUnIE-GAN",
        PublishedRow {
            alpha: 4_212_707,
            beta_seconds: 0.18,
            compression: 18.17,
            speed_up: 8.0,
        },
    ),
];

pub fn published(name: &str) -> Option<PublishedRow> {
    PUBLISHED
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, r)| *r)
}

/// Default baselines: the published α/β of the three comparison models.
pub fn default_baselines() -> Vec<BenchRecord> {
    PUBLISHED
        .iter()
        .map(|(name, r)| BenchRecord {
            name: (*name).to_owned(),
            alpha: r.alpha,
            beta_seconds: r.beta_seconds,
        })
        .collect()
}

/// Parses `[{"name": str, "alpha": int, "beta_seconds": real}, …]`.
pub fn parse_baselines(json: &str) -> Result<Vec<BenchRecord>> {
    let rows: Vec<BenchRecord> = serde_json::from_str(json)?;
    for r in &rows {
        r.validate()?;
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: BenchRecord,
    pub compression: RateComparison,
    pub speed_up: RateComparison,
    /// Printed values for this baseline, when it is one of the published
    /// comparison models.
    pub published: Option<PublishedRow>,
}

pub fn compare(ours: &BenchRecord, baselines: &[BenchRecord]) -> Result<Vec<Comparison>> {
    ours.validate()?;
    baselines
        .iter()
        .map(|b| {
            b.validate()?;
            Ok(Comparison {
                baseline: b.clone(),
                compression: compression_rate(b.alpha, ours.alpha)?,
                speed_up: speed_up(b.beta_seconds, ours.beta_seconds)?,
                published: published(&b.name),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub warmup_runs: usize,
    pub timed_runs: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            warmup_runs: 5,
            timed_runs: 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub images: usize,
    pub warmup_runs: usize,
    pub timed_runs: usize,
    /// Median over runs of (run wall time / images).
    pub median_seconds_per_image: f64,
    pub mean_seconds_per_image: f64,
    pub min_seconds_per_image: f64,
    pub max_seconds_per_image: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Runs `infer` over every input `warmup_runs` times untimed, then
/// `timed_runs` times timed, on the calling thread.
pub fn measure_latency<I>(
    inputs: &[I],
    cfg: TimingConfig,
    mut infer: impl FnMut(&I) -> Result<()>,
) -> Result<TimingStats> {
    if inputs.is_empty() {
        return Err(Error::Empty("timing set"));
    }
    if cfg.timed_runs == 0 {
        return Err(Error::InvalidArgument("timed_runs must be ≥ 1".into()));
    }
    for _ in 0..cfg.warmup_runs {
        for x in inputs {
            infer(x)?;
        }
    }
    let mut per_image = Vec::with_capacity(cfg.timed_runs);
    for _ in 0..cfg.timed_runs {
        let start = Instant::now();
        for x in inputs {
            infer(x)?;
        }
        per_image.push(start.elapsed().as_secs_f64() / inputs.len() as f64);
    }
    per_image.sort_by(f64::total_cmp);
    Ok(TimingStats {
        images: inputs.len(),
        warmup_runs: cfg.warmup_runs,
        timed_runs: cfg.timed_runs,
        median_seconds_per_image: median(&per_image),
        mean_seconds_per_image: per_image.iter().sum::<f64>() / per_image.len() as f64,
        min_seconds_per_image: per_image[0],
        max_seconds_per_image: per_image[per_image.len() - 1],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub threads_used: usize,
    pub precision: String,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            os: std::env::consts::OS.to_owned(),
            arch: std::env::consts::ARCH.to_owned(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            threads_used: 1,
            precision: "f32".to_owned(),
        }
    }
}

/// Table with one row per model: parameters, seconds per image, and the
/// compression / speed-up of our model against that row in both
/// conventions.
pub fn render_bench_table(ours: &BenchRecord, comparisons: &[Comparison]) -> String {
    let mut rows = vec![[
        "Model".to_owned(),
        "# Parameters".to_owned(),
        "Compression ratio".to_owned(),
        "Compression ratio-1".to_owned(),
        "Published".to_owned(),
        "Secs/image".to_owned(),
        "Speed-up ratio".to_owned(),
        "Speed-up ratio-1".to_owned(),
        "Published".to_owned(),
    ]];
    rows.push([
        ours.name.clone(),
        ours.alpha.to_string(),
        "1.000".into(),
        "0.000".into(),
        "1".into(),
        format!("{:.4}", ours.beta_seconds),
        "1.000".into(),
        "0.000".into(),
        "1".into(),
    ]);
    for c in comparisons {
        let (pc, ps) = c.published.map_or(("-".into(), "-".into()), |p| {
            (format!("{:.2}", p.compression), format!("{}", p.speed_up))
        });
        rows.push([
            c.baseline.name.clone(),
            c.baseline.alpha.to_string(),
            format!("{:.3}", c.compression.ratio),
            format!("{:.3}", c.compression.relative_gain),
            pc,
            format!("{:.4}", c.baseline.beta_seconds),
            format!("{:.3}", c.speed_up.ratio),
            format!("{:.3}", c.speed_up.relative_gain),
            ps,
        ]);
    }
    let widths: Vec<usize> = (0..9)
        .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (k, r) in rows.iter().enumerate() {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
        if k == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            let _ = writeln!(out, "| {} |", rule.join(" | "));
        }
    }
    out.push_str("ratio-1 columns follow the published-table convention (printed value = ratio - 1).\n");
    out
}
