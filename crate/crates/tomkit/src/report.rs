//! JSON report documents written by the CLI.
//!
//! Schemas for every document live in `docs/schemas/`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tomkit_core::loss::LossBreakdown;
use tomkit_core::{AlignMode, LogBase, MetricsReport, RegionMetrics};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub tom: f64,
    pub ssi: f64,
    pub total: f64,
    pub tom_pixels: usize,
}

impl From<&LossBreakdown> for LossReport {
    fn from(b: &LossBreakdown) -> Self {
        Self {
            tom: b.tom,
            ssi: b.ssi,
            total: b.total,
            tom_pixels: b.tom_pixels,
        }
    }
}

/// Per-region metrics; an empty region is `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTable<T> {
    pub all: Option<T>,
    pub tom: Option<T>,
    pub other: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub align: AlignMode,
    pub log_base: LogBase,
    /// Fitted scale; `null` without alignment.
    pub s: Option<f64>,
    /// Fitted shift; `null` without alignment.
    pub t: Option<f64>,
    pub regions: RegionTable<RegionMetrics>,
}

impl EvalReport {
    pub fn new(report: &MetricsReport, log_base: LogBase) -> Self {
        Self {
            align: report.align,
            log_base,
            s: report.params.map(|p| p.scale),
            t: report.params.map(|p| p.shift),
            regions: RegionTable {
                all: Some(report.all),
                tom: report.tom,
                other: report.other,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub pred: String,
    pub gt: String,
    pub mask: String,
    pub status: ItemStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
}

/// Dataset-level mean of per-image metrics for one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub delta_105: f64,
    pub delta_115: f64,
    pub delta_125: f64,
    pub abs_rel: f64,
    pub rmse: f64,
    pub log_mae: f64,
    /// Images contributing to the mean.
    pub images: usize,
    /// Total pixels across those images.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub align: AlignMode,
    pub log_base: LogBase,
    pub succeeded: usize,
    pub failed: usize,
    pub mean: RegionTable<MeanMetrics>,
    pub items: Vec<BatchItem>,
}

/// Sequential mean over `metrics` in the given order.
pub fn mean_metrics<'a>(metrics: impl IntoIterator<Item = &'a RegionMetrics>) -> Option<MeanMetrics> {
    let mut acc = MeanMetrics {
        delta_105: 0.0,
        delta_115: 0.0,
        delta_125: 0.0,
        abs_rel: 0.0,
        rmse: 0.0,
        log_mae: 0.0,
        images: 0,
        count: 0,
    };
    for m in metrics {
        acc.delta_105 += m.delta_105;
        acc.delta_115 += m.delta_115;
        acc.delta_125 += m.delta_125;
        acc.abs_rel += m.abs_rel;
        acc.rmse += m.rmse;
        acc.log_mae += m.log_mae;
        acc.images += 1;
        acc.count += m.pixel_count;
    }
    if acc.images == 0 {
        return None;
    }
    let n = acc.images as f64;
    Some(MeanMetrics {
        delta_105: acc.delta_105 / n,
        delta_115: acc.delta_115 / n,
        delta_125: acc.delta_125 / n,
        abs_rel: acc.abs_rel / n,
        rmse: acc.rmse / n,
        log_mae: acc.log_mae / n,
        ..acc
    })
}

impl EvalSummary {
    pub fn new(align: AlignMode, log_base: LogBase, items: Vec<BatchItem>) -> Self {
        let reports: Vec<&EvalReport> = items.iter().filter_map(|i| i.report.as_ref()).collect();
        let mean = RegionTable {
            all: mean_metrics(reports.iter().filter_map(|r| r.regions.all.as_ref())),
            tom: mean_metrics(reports.iter().filter_map(|r| r.regions.tom.as_ref())),
            other: mean_metrics(reports.iter().filter_map(|r| r.regions.other.as_ref())),
        };
        let succeeded = reports.len();
        Self {
            align,
            log_base,
            succeeded,
            failed: items.len() - succeeded,
            mean,
            items,
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Json {
        path: path.to_owned(),
        source: e,
    })?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

const CSV_HEADER: [&str; 11] = [
    "pred", "gt", "mask", "region", "delta_105", "delta_115", "delta_125", "abs_rel", "rmse", "log_mae", "count",
];

/// One row per (item, non-empty region) plus `mean` rows.
pub fn write_summary_csv(summary: &EvalSummary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    writer.write_record(CSV_HEADER).map_err(csv_err)?;
    for item in &summary.items {
        let Some(report) = &item.report else { continue };
        let regions = [
            ("all", &report.regions.all),
            ("tom", &report.regions.tom),
            ("other", &report.regions.other),
        ];
        for (name, m) in regions {
            let Some(m) = m else { continue };
            writer
                .write_record([
                    item.pred.clone(),
                    item.gt.clone(),
                    item.mask.clone(),
                    name.to_owned(),
                    m.delta_105.to_string(),
                    m.delta_115.to_string(),
                    m.delta_125.to_string(),
                    m.abs_rel.to_string(),
                    m.rmse.to_string(),
                    m.log_mae.to_string(),
                    m.pixel_count.to_string(),
                ])
                .map_err(csv_err)?;
        }
    }
    let means = [
        ("all", &summary.mean.all),
        ("tom", &summary.mean.tom),
        ("other", &summary.mean.other),
    ];
    for (name, m) in means {
        let Some(m) = m else { continue };
        writer
            .write_record([
                "mean".to_owned(),
                String::new(),
                String::new(),
                name.to_owned(),
                m.delta_105.to_string(),
                m.delta_115.to_string(),
                m.delta_125.to_string(),
                m.abs_rel.to_string(),
                m.rmse.to_string(),
                m.log_mae.to_string(),
                m.count.to_string(),
            ])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
