//! Many-model sweeps and the accuracy-versus-confidence scatter.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::{repeat_match, MatchConfig};
use crate::metrics::{build_report, BinningSpec, Report};
use crate::model::PredictionSet;

/// One model's predictions on a source and a target dataset.
#[derive(Debug, Clone)]
pub struct PairEntry {
    pub model_name: String,
    pub src: PredictionSet,
    pub tgt: PredictionSet,
}

impl PairEntry {
    pub fn new(
        model_name: impl Into<String>,
        src: PredictionSet,
        tgt: PredictionSet,
    ) -> Result<Self> {
        let model_name = model_name.into();
        if src.num_classes() != tgt.num_classes() {
            return Err(Error::InvalidSet(format!(
                "entry '{model_name}': source has {} classes, target has {}",
                src.num_classes(),
                tgt.num_classes()
            )));
        }
        Ok(PairEntry {
            model_name,
            src,
            tgt,
        })
    }
}

/// One row of a sweep table. Gaps are `source - target`. Matched fields are
/// absent when no run produced a matched pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model_name: String,
    pub accuracy_src: f64,
    pub accuracy_tgt: f64,
    pub accuracy_gap: f64,
    pub matched_accuracy_src: Option<f64>,
    pub matched_accuracy_src_stderr: Option<f64>,
    pub matched_accuracy_tgt: Option<f64>,
    pub matched_accuracy_tgt_stderr: Option<f64>,
    pub matched_gap: Option<f64>,
    pub matched_gap_stderr: Option<f64>,
    pub fraction_unmatched: f64,
    pub fraction_unmatched_stderr: f64,
    pub runs: usize,
    pub first_seed: u64,
}

impl SweepRow {
    pub fn from_report(model_name: &str, report: &Report) -> Self {
        let src = report.matched_accuracy_src;
        let tgt = report.matched_accuracy_tgt;
        SweepRow {
            model_name: model_name.to_string(),
            accuracy_src: report.src.accuracy,
            accuracy_tgt: report.tgt.accuracy,
            accuracy_gap: report.src.accuracy - report.tgt.accuracy,
            matched_accuracy_src: src.map(|s| s.mean),
            matched_accuracy_src_stderr: src.map(|s| s.stderr),
            matched_accuracy_tgt: tgt.map(|s| s.mean),
            matched_accuracy_tgt_stderr: tgt.map(|s| s.stderr),
            matched_gap: src.zip(tgt).map(|(s, t)| s.mean - t.mean),
            matched_gap_stderr: report.matched_gap.map(|g| g.stderr),
            fraction_unmatched: report.fraction_unmatched.mean,
            fraction_unmatched_stderr: report.fraction_unmatched.stderr,
            runs: report.config.runs,
            first_seed: report.config.seeds.first().copied().unwrap_or_default(),
        }
    }
}

/// Matches every entry and returns rows sorted by ascending source accuracy,
/// ties broken by model name. Entry `i` uses seeds starting at
/// `cfg.seed + i * runs`, so appending entries leaves earlier rows unchanged.
pub fn sweep(
    entries: &[PairEntry],
    cfg: &MatchConfig,
    runs: usize,
    bins: BinningSpec,
) -> Result<Vec<SweepRow>> {
    if entries.is_empty() {
        return Err(Error::InvalidConfig(
            "sweep needs at least one entry".into(),
        ));
    }
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    let mut rows = entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let offset = (i as u64).wrapping_mul(runs as u64);
            let entry_cfg = cfg.with_seed(cfg.seed.wrapping_add(offset));
            let outcomes = repeat_match(&e.src, &e.tgt, &entry_cfg, runs)?;
            let report = build_report(&e.src, &e.tgt, &outcomes, bins)?;
            Ok(SweepRow::from_report(&e.model_name, &report))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(row_order);
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub model_name: String,
    pub dataset_name: String,
    pub accuracy: f64,
    pub mean_confidence: f64,
}

/// Two points per entry, source first.
pub fn scatter_points(entries: &[PairEntry]) -> Result<Vec<ScatterPoint>> {
    if entries.is_empty() {
        return Err(Error::InvalidConfig(
            "scatter needs at least one entry".into(),
        ));
    }
    Ok(entries
        .iter()
        .flat_map(|e| {
            [&e.src, &e.tgt].map(|set| ScatterPoint {
                model_name: e.model_name.clone(),
                dataset_name: set.name().to_string(),
                accuracy: set.accuracy(),
                mean_confidence: set.mean_confidence(),
            })
        })
        .collect())
}

/// Orders rows the way [`sweep`] does. Exposed for callers merging tables.
pub fn row_order(a: &SweepRow, b: &SweepRow) -> Ordering {
    a.accuracy_src
        .total_cmp(&b.accuracy_src)
        .then_with(|| a.model_name.cmp(&b.model_name))
}
