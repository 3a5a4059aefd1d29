use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{psnr, ssim_with, uiqm, Psnr, RgbImage, SsimConfig, UiqmConfig, DEFAULT_PEAK};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single value.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn display(&self, decimals: usize) -> String {
        format!("{:.*} ± {:.*}", decimals, self.mean, decimals, self.std)
    }
}

pub fn aggregate(values: &[f64]) -> Result<MeanStd> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Empty("metric rows"));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n == 1 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(MeanStd { mean, std, n })
}

/// Scores for one enhanced/reference pair. UIQM and its parts are computed
/// on the enhanced image alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub id: String,
    /// `None` when the images are identical.
    pub psnr: Option<f64>,
    pub psnr_infinite: bool,
    pub ssim: f64,
    pub uiqm: f64,
    pub uicm: f64,
    pub uism: f64,
    pub uiconm: f64,
}

pub fn evaluate_pair(
    id: &str,
    enhanced: &RgbImage,
    reference: &RgbImage,
    ssim_cfg: &SsimConfig,
    uiqm_cfg: &UiqmConfig,
) -> Result<MetricRow> {
    let p = psnr(enhanced, reference, DEFAULT_PEAK)?;
    let s = ssim_with(enhanced, reference, ssim_cfg)?;
    let q = uiqm(enhanced, uiqm_cfg)?;
    Ok(MetricRow {
        id: id.to_owned(),
        psnr: p.finite(),
        psnr_infinite: p == Psnr::Infinite,
        ssim: s,
        uiqm: q.uiqm,
        uicm: q.uicm,
        uism: q.uism,
        uiconm: q.uiconm,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    /// Over rows with a finite PSNR; `None` if every row is infinite.
    pub psnr: Option<MeanStd>,
    pub psnr_infinite_rows: usize,
    pub ssim: MeanStd,
    pub uiqm: MeanStd,
    pub uicm: MeanStd,
    pub uism: MeanStd,
    pub uiconm: MeanStd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub aggregate: MetricAggregate,
}

impl MetricReport {
    /// Sorts rows by id and aggregates them.
    pub fn from_rows(mut rows: Vec<MetricRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("metric rows"));
        }
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        let col = |f: fn(&MetricRow) -> f64| aggregate(&rows.iter().map(f).collect::<Vec<_>>());
        let finite: Vec<f64> = rows.iter().filter_map(|r| r.psnr).collect();
        let aggregate = MetricAggregate {
            psnr: if finite.is_empty() {
                None
            } else {
                Some(aggregate(&finite)?)
            },
            psnr_infinite_rows: rows.iter().filter(|r| r.psnr_infinite).count(),
            ssim: col(|r| r.ssim)?,
            uiqm: col(|r| r.uiqm)?,
            uicm: col(|r| r.uicm)?,
            uism: col(|r| r.uism)?,
            uiconm: col(|r| r.uiconm)?,
        };
        Ok(MetricReport { rows, aggregate })
    }
}

/// Plain-text table with one row per metric and one `mean ± std` column per
/// dataset.
pub fn render_table(model: &str, datasets: &[(&str, &MetricReport)]) -> String {
    let mut header = vec!["Metric".to_owned()];
    header.extend(datasets.iter().map(|(name, _)| format!("{name} ({model})")));
    let psnr_cell = |r: &MetricReport| match (&r.aggregate.psnr, r.aggregate.psnr_infinite_rows) {
        (Some(m), 0) => m.display(2),
        (Some(m), k) => format!("{} (+{k} inf)", m.display(2)),
        (None, _) => "inf".to_owned(),
    };
    let rows: Vec<Vec<String>> = vec![
        std::iter::once("PSNR".to_owned())
            .chain(datasets.iter().map(|(_, r)| psnr_cell(r)))
            .collect(),
        std::iter::once("SSIM".to_owned())
            .chain(datasets.iter().map(|(_, r)| r.aggregate.ssim.display(2)))
            .collect(),
        std::iter::once("UIQM".to_owned())
            .chain(datasets.iter().map(|(_, r)| r.aggregate.uiqm.display(2)))
            .collect(),
    ];
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            rows.iter()
                .map(|r| r[i].chars().count())
                .chain(std::iter::once(header[i].chars().count()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "| {} |", padded.join(" | "));
    };
    line(&mut out, &header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut out, &rule);
    for r in &rows {
        line(&mut out, r);
    }
    out
}
