//! Matched accuracy, fraction unmatched, reliability curves, confidence
//! histograms, ECE, and the multi-run [`Report`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::{MatchConfig, MatchCriterion, MatchOutcome, TargetOrder};
use crate::model::{accuracy, mean_confidence, PredictionRecord, PredictionSet};
use crate::rng::PRNG_NAME;

pub const DEFAULT_BINS: usize = 15;

/// Equal-width bins over `[0, 1]`; every bin is `[lower, upper)` except the
/// last, which is closed on the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningSpec {
    num_bins: usize,
}

impl Default for BinningSpec {
    fn default() -> Self {
        BinningSpec {
            num_bins: DEFAULT_BINS,
        }
    }
}

impl BinningSpec {
    pub fn new(num_bins: usize) -> Result<Self> {
        if num_bins == 0 {
            return Err(Error::InvalidConfig("bin count must be at least 1".into()));
        }
        Ok(BinningSpec { num_bins })
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn lower(&self, bin: usize) -> f64 {
        bin as f64 / self.num_bins as f64
    }

    pub fn upper(&self, bin: usize) -> f64 {
        if bin + 1 == self.num_bins {
            1.0
        } else {
            (bin + 1) as f64 / self.num_bins as f64
        }
    }

    /// Bin containing `confidence`, consistent with the reported edges.
    pub fn bin_of(&self, confidence: f64) -> usize {
        let last = self.num_bins - 1;
        let mut b = ((confidence * self.num_bins as f64).floor().max(0.0) as usize).min(last);
        // floor(p * B) can land one bin off near an edge.
        if b > 0 && confidence < self.lower(b) {
            b -= 1;
        } else if b < last && confidence >= self.upper(b) {
            b += 1;
        }
        b
    }
}

/// One point of a reliability (calibration) curve. Statistics are absent for
/// empty bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_confidence: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub density: f64,
}

/// `(accuracy(src_matched), accuracy(tgt_matched))`.
pub fn matched_accuracies(outcome: &MatchOutcome) -> Result<(f64, f64)> {
    if outcome.src_matched.is_empty() {
        return Err(Error::NoMatchedDatapoints);
    }
    Ok((
        accuracy(&outcome.src_matched)?,
        accuracy(&outcome.tgt_matched)?,
    ))
}

pub fn fraction_unmatched(outcome: &MatchOutcome) -> f64 {
    let total = outcome.tgt_matched.len() + outcome.tgt_unmatched.len();
    if total == 0 {
        return 0.0;
    }
    outcome.tgt_unmatched.len() as f64 / total as f64
}

pub fn reliability_curve(
    records: &[PredictionRecord],
    bins: BinningSpec,
) -> Result<Vec<ReliabilityBin>> {
    if records.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    let n = bins.num_bins();
    let mut counts = vec![0usize; n];
    let mut correct = vec![0usize; n];
    let mut conf_sum = vec![0.0f64; n];
    for r in records {
        let b = bins.bin_of(r.confidence);
        counts[b] += 1;
        conf_sum[b] += r.confidence;
        if r.is_correct() {
            correct[b] += 1;
        }
    }
    Ok((0..n)
        .map(|b| {
            let c = counts[b];
            ReliabilityBin {
                lower: bins.lower(b),
                upper: bins.upper(b),
                count: c,
                mean_confidence: (c > 0).then(|| conf_sum[b] / c as f64),
                accuracy: (c > 0).then(|| correct[b] as f64 / c as f64),
            }
        })
        .collect())
}

/// Normalized counts per bin. Densities sum to one.
pub fn confidence_histogram(
    records: &[PredictionRecord],
    bins: BinningSpec,
) -> Result<Vec<HistogramBin>> {
    if records.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    let mut counts = vec![0usize; bins.num_bins()];
    for r in records {
        counts[bins.bin_of(r.confidence)] += 1;
    }
    let n = records.len() as f64;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(b, &c)| HistogramBin {
            lower: bins.lower(b),
            upper: bins.upper(b),
            density: c as f64 / n,
        })
        .collect())
}

/// Expected calibration error: count-weighted mean of
/// `|accuracy - mean confidence|` over non-empty bins.
pub fn ece(records: &[PredictionRecord], bins: BinningSpec) -> Result<f64> {
    let curve = reliability_curve(records, bins)?;
    let n = records.len() as f64;
    Ok(curve
        .iter()
        .filter_map(|b| match (b.accuracy, b.mean_confidence) {
            (Some(acc), Some(conf)) => Some(b.count as f64 / n * (acc - conf).abs()),
            _ => None,
        })
        .sum())
}

/// Mean and standard error of the mean over runs (sample standard deviation
/// with `runs - 1` denominator, divided by `sqrt(runs)`; zero for one run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStat {
    pub mean: f64,
    pub stderr: f64,
    pub runs: usize,
}

impl RunStat {
    pub fn from_values(values: &[f64]) -> Option<RunStat> {
        if values.is_empty() {
            return None;
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let stderr = if values.len() < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        };
        Some(RunStat {
            mean,
            stderr,
            runs: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub size: usize,
    pub accuracy: f64,
    pub mean_confidence: f64,
}

impl DatasetSummary {
    fn of(set: &PredictionSet) -> Self {
        DatasetSummary {
            name: set.name().to_string(),
            size: set.len(),
            accuracy: set.accuracy(),
            mean_confidence: set.mean_confidence(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    SrcFull,
    TgtFull,
    SrcMatched,
    TgtMatched,
    TgtUnmatched,
    SrcUnmatched,
}

impl Subset {
    pub fn as_str(self) -> &'static str {
        match self {
            Subset::SrcFull => "src_full",
            Subset::TgtFull => "tgt_full",
            Subset::SrcMatched => "src_matched",
            Subset::TgtMatched => "tgt_matched",
            Subset::TgtUnmatched => "tgt_unmatched",
            Subset::SrcUnmatched => "src_unmatched",
        }
    }
}

/// Curve and histogram for one subset. Both are absent when the subset is
/// empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCurves {
    pub subset: Subset,
    /// Seed of the run the subset came from; absent for full datasets.
    pub seed: Option<u64>,
    pub size: usize,
    pub accuracy: Option<f64>,
    pub mean_confidence: Option<f64>,
    pub ece: Option<f64>,
    pub reliability: Option<Vec<ReliabilityBin>>,
    pub histogram: Option<Vec<HistogramBin>>,
}

impl SubsetCurves {
    pub fn compute(
        subset: Subset,
        seed: Option<u64>,
        records: &[PredictionRecord],
        bins: BinningSpec,
    ) -> SubsetCurves {
        SubsetCurves {
            subset,
            seed,
            size: records.len(),
            accuracy: accuracy(records).ok(),
            mean_confidence: mean_confidence(records).ok(),
            ece: ece(records, bins).ok(),
            reliability: reliability_curve(records, bins).ok(),
            histogram: confidence_histogram(records, bins).ok(),
        }
    }
}

/// Echo of the settings that produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub epsilon: f64,
    pub criterion: MatchCriterion,
    pub target_order: TargetOrder,
    pub seeds: Vec<u64>,
    pub runs: usize,
    pub bins: usize,
    pub prng: String,
}

/// Per-run scalars, kept so every mean in the report can be recomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub matched_pairs: usize,
    pub matched_accuracy_src: Option<f64>,
    pub matched_accuracy_tgt: Option<f64>,
    pub fraction_unmatched: f64,
    pub unmatched_accuracy: Option<f64>,
}

impl RunSummary {
    pub fn of(outcome: &MatchOutcome) -> Self {
        let matched = matched_accuracies(outcome).ok();
        RunSummary {
            seed: outcome.seed(),
            matched_pairs: outcome.matched_pairs(),
            matched_accuracy_src: matched.map(|m| m.0),
            matched_accuracy_tgt: matched.map(|m| m.1),
            fraction_unmatched: fraction_unmatched(outcome),
            unmatched_accuracy: accuracy(&outcome.tgt_unmatched).ok(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReportOptions {
    /// Emit curves for every run instead of the first only.
    pub all_runs: bool,
    /// Add the never-drawn source records as an extra subset.
    pub include_unmatched_src: bool,
}

/// Aggregate comparison of one model on one source/target pair.
///
/// Matched-accuracy statistics are taken over runs with at least one matched
/// pair (`RunStat::runs` records how many); unmatched-subset accuracy over
/// runs with at least one unmatched target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub src: DatasetSummary,
    pub tgt: DatasetSummary,
    pub accuracy_gap: f64,
    pub matched_accuracy_src: Option<RunStat>,
    pub matched_accuracy_tgt: Option<RunStat>,
    pub matched_gap: Option<RunStat>,
    pub matched_pairs: RunStat,
    pub fraction_unmatched: RunStat,
    pub unmatched_accuracy: Option<RunStat>,
    pub runs: Vec<RunSummary>,
    pub curves: Vec<SubsetCurves>,
    pub config: ConfigEcho,
}

pub fn build_report(
    src: &PredictionSet,
    tgt: &PredictionSet,
    outcomes: &[MatchOutcome],
    bins: BinningSpec,
) -> Result<Report> {
    build_report_with(src, tgt, outcomes, bins, ReportOptions::default())
}

pub fn build_report_with(
    src: &PredictionSet,
    tgt: &PredictionSet,
    outcomes: &[MatchOutcome],
    bins: BinningSpec,
    options: ReportOptions,
) -> Result<Report> {
    let first = outcomes
        .first()
        .ok_or_else(|| Error::MixedOutcomes("no outcomes supplied".into()))?;
    check_same_pair(src, tgt, first.config, outcomes)?;

    let runs: Vec<RunSummary> = outcomes.iter().map(RunSummary::of).collect();
    let collect =
        |f: fn(&RunSummary) -> Option<f64>| -> Vec<f64> { runs.iter().filter_map(f).collect() };

    let matched_src = collect(|r| r.matched_accuracy_src);
    let matched_tgt = collect(|r| r.matched_accuracy_tgt);
    let matched_gap = collect(|r| Some(r.matched_accuracy_src? - r.matched_accuracy_tgt?));
    let pairs: Vec<f64> = runs.iter().map(|r| r.matched_pairs as f64).collect();
    let unmatched_frac: Vec<f64> = runs.iter().map(|r| r.fraction_unmatched).collect();
    let unmatched_acc = collect(|r| r.unmatched_accuracy);

    let mut curves = vec![
        SubsetCurves::compute(Subset::SrcFull, None, src.records(), bins),
        SubsetCurves::compute(Subset::TgtFull, None, tgt.records(), bins),
    ];
    let shown = if options.all_runs { outcomes.len() } else { 1 };
    for o in &outcomes[..shown] {
        let seed = Some(o.seed());
        curves.push(SubsetCurves::compute(
            Subset::SrcMatched,
            seed,
            &o.src_matched,
            bins,
        ));
        curves.push(SubsetCurves::compute(
            Subset::TgtMatched,
            seed,
            &o.tgt_matched,
            bins,
        ));
        curves.push(SubsetCurves::compute(
            Subset::TgtUnmatched,
            seed,
            &o.tgt_unmatched,
            bins,
        ));
        if options.include_unmatched_src {
            curves.push(SubsetCurves::compute(
                Subset::SrcUnmatched,
                seed,
                &o.src_unmatched,
                bins,
            ));
        }
    }

    let src_summary = DatasetSummary::of(src);
    let tgt_summary = DatasetSummary::of(tgt);
    Ok(Report {
        accuracy_gap: src_summary.accuracy - tgt_summary.accuracy,
        src: src_summary,
        tgt: tgt_summary,
        matched_accuracy_src: RunStat::from_values(&matched_src),
        matched_accuracy_tgt: RunStat::from_values(&matched_tgt),
        matched_gap: RunStat::from_values(&matched_gap),
        matched_pairs: RunStat::from_values(&pairs).expect("non-empty runs"),
        fraction_unmatched: RunStat::from_values(&unmatched_frac).expect("non-empty runs"),
        unmatched_accuracy: RunStat::from_values(&unmatched_acc),
        runs,
        curves,
        config: ConfigEcho {
            epsilon: first.config.epsilon,
            criterion: first.config.criterion,
            target_order: first.config.target_order,
            seeds: outcomes.iter().map(MatchOutcome::seed).collect(),
            runs: outcomes.len(),
            bins: bins.num_bins(),
            prng: PRNG_NAME.to_string(),
        },
    })
}

fn check_same_pair(
    src: &PredictionSet,
    tgt: &PredictionSet,
    cfg: MatchConfig,
    outcomes: &[MatchOutcome],
) -> Result<()> {
    for o in outcomes {
        if o.src_name != src.name() || o.src_len != src.len() {
            return Err(Error::MixedOutcomes(format!(
                "outcome seed {} was matched against source '{}' ({} records), expected '{}' ({})",
                o.seed(),
                o.src_name,
                o.src_len,
                src.name(),
                src.len()
            )));
        }
        if o.tgt_name != tgt.name() || o.tgt_len != tgt.len() {
            return Err(Error::MixedOutcomes(format!(
                "outcome seed {} was matched against target '{}' ({} records), expected '{}' ({})",
                o.seed(),
                o.tgt_name,
                o.tgt_len,
                tgt.name(),
                tgt.len()
            )));
        }
        if o.config.epsilon != cfg.epsilon
            || o.config.criterion != cfg.criterion
            || o.config.target_order != cfg.target_order
        {
            return Err(Error::MixedOutcomes(format!(
                "outcome seed {} used different matching settings",
                o.seed()
            )));
        }
    }
    Ok(())
}
