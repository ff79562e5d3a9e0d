// SPDX-License-Identifier: Apache-2.0

//! Boundary error metrics: mean absolute error in pixels and micrometres,
//! relative error reduction, and a first-difference jaggedness score.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::LayerId;
use crate::track::Pipeline;

pub const DEFAULT_UM_PER_PX: f64 = 2.61;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub um_per_px: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            um_per_px: DEFAULT_UM_PER_PX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub layer: &'static str,
    pub pipeline: String,
    pub mae_px: f64,
    pub mae_um: f64,
    pub n_columns: usize,
    pub jaggedness_px: f64,
    /// Filled for the filtered pipeline; relative to the raw one.
    pub reduction_pct: Option<f64>,
}

pub fn mean_abs_error(estimates: &[f64], truth: &[f64]) -> Result<f64> {
    if estimates.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: truth.len(),
        });
    }
    if estimates.is_empty() {
        return Err(Error::Empty);
    }
    let total: f64 = estimates.iter().zip(truth).map(|(e, t)| (e - t).abs()).sum();
    Ok(total / estimates.len() as f64)
}

pub fn px_to_um(px: f64, cfg: &EvalConfig) -> f64 {
    px * cfg.um_per_px
}

/// `100 * (baseline - method) / baseline`.
pub fn reduction_pct(baseline_mae: f64, method_mae: f64) -> Result<f64> {
    if !(baseline_mae > 0.0) {
        return Err(Error::InvalidParam("baseline error must be positive".into()));
    }
    Ok(100.0 * (baseline_mae - method_mae) / baseline_mae)
}

/// Mean absolute first difference.
pub fn jaggedness(estimates: &[f64]) -> Result<f64> {
    if estimates.len() < 2 {
        return Err(Error::InvalidParam("jaggedness needs at least two points".into()));
    }
    let total: f64 = estimates.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(total / (estimates.len() - 1) as f64)
}

pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Scores one pipeline's per-column estimates against truth. Columns without
/// an estimate (before a track is seeded) are skipped.
pub fn evaluate(
    layer: LayerId,
    pipeline: Pipeline,
    estimates: &[Option<f64>],
    truth: &[f64],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if estimates.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: truth.len(),
        });
    }
    let (est, tru): (Vec<f64>, Vec<f64>) = estimates
        .iter()
        .zip(truth)
        .filter_map(|(e, t)| e.map(|e| (e, *t)))
        .unzip();
    let mae_px = mean_abs_error(&est, &tru)?;
    Ok(EvalReport {
        layer: layer.as_str(),
        pipeline: pipeline.to_string(),
        mae_px,
        mae_um: px_to_um(mae_px, cfg),
        n_columns: est.len(),
        jaggedness_px: if est.len() >= 2 { jaggedness(&est)? } else { 0.0 },
        reduction_pct: None,
    })
}

/// Column-aligned estimates of both pipelines for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSeries {
    pub layer: LayerId,
    pub raw: Vec<Option<f64>>,
    pub kdh: Vec<Option<f64>>,
    pub truth: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub um_per_px: f64,
    pub reports: Vec<EvalReport>,
}

impl Comparison {
    pub fn report(&self, layer: LayerId, pipeline: Pipeline) -> Option<&EvalReport> {
        let name = pipeline.to_string();
        self.reports
            .iter()
            .find(|r| r.layer == layer.as_str() && r.pipeline == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table: one row per pipeline, one column pair per layer.
    pub fn to_table(&self) -> String {
        let layers: Vec<LayerId> = LayerId::ALL
            .into_iter()
            .filter(|l| self.reports.iter().any(|r| r.layer == l.as_str()))
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{:<10}", "Approach");
        for l in &layers {
            let title = match l {
                LayerId::Epithelium => "Average Epithelium Error",
                LayerId::DM => "Average DM Error",
            };
            let _ = write!(out, "  {title:<28}");
        }
        out.push('\n');
        for p in [Pipeline::Kdh, Pipeline::Raw] {
            let _ = write!(out, "{:<10}", p.to_string().to_uppercase());
            for l in &layers {
                let cell = match self.report(*l, p) {
                    Some(r) => format!("{:.4} px  {:.4} um", r.mae_px, r.mae_um),
                    None => "-".into(),
                };
                let _ = write!(out, "  {cell:<28}");
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<10}", "Reduction");
        for l in &layers {
            let cell = match self.report(*l, Pipeline::Kdh).and_then(|r| r.reduction_pct) {
                Some(v) => format!("{v:.2}%"),
                None => "-".into(),
            };
            let _ = write!(out, "  {cell:<28}");
        }
        out.push('\n');
        out
    }
}

pub fn compare(series: &[LayerSeries], cfg: &EvalConfig) -> Result<Comparison> {
    let mut reports = Vec::with_capacity(series.len() * 2);
    for s in series {
        let raw = evaluate(s.layer, Pipeline::Raw, &s.raw, &s.truth, cfg)?;
        let mut kdh = evaluate(s.layer, Pipeline::Kdh, &s.kdh, &s.truth, cfg)?;
        kdh.reduction_pct = if raw.mae_px > 0.0 {
            Some(round2(reduction_pct(raw.mae_px, kdh.mae_px)?))
        } else if kdh.mae_px == 0.0 {
            Some(0.0)
        } else {
            None
        };
        reports.push(kdh);
        reports.push(raw);
    }
    Ok(Comparison {
        um_per_px: cfg.um_per_px,
        reports,
    })
}
