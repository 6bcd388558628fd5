//! Greedy, randomized, without-replacement matching of target predictions
//! to source predictions.
//!
//! Targets are visited in order. For each target, every remaining source
//! record that passes the criterion is a candidate; one candidate is drawn
//! uniformly and removed from the pool. Targets without candidates go to the
//! unmatched list.
//!
//! Two implementations produce identical output for the same inputs:
//! [`match_greedy`] scans the whole pool for every target and serves as the
//! reference, [`match_indexed`] answers the same queries from sorted
//! per-label indexes. Both order candidates by ascending source index and
//! pick position `rng.below(count)`, so the random stream is consumed
//! identically.

mod index;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PredictionRecord, PredictionSet};
use crate::rng::StreamRng;

pub use index::match_indexed;

pub const DEFAULT_EPSILON: f64 = 0.005;
pub const DEFAULT_RUNS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchCriterion {
    /// Same predicted label and predicted probability within epsilon.
    LabelAndProbability,
    /// Predicted probability within epsilon, labels ignored.
    ProbabilityOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetOrder {
    /// Visit targets in file order.
    FileOrder,
    /// Shuffle the visiting order with the run's generator before matching.
    ShuffledPerSeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub epsilon: f64,
    pub criterion: MatchCriterion,
    pub seed: u64,
    pub target_order: TargetOrder,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            epsilon: DEFAULT_EPSILON,
            criterion: MatchCriterion::LabelAndProbability,
            seed: 0,
            target_order: TargetOrder::FileOrder,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        MatchConfig { seed, ..self }
    }
}

/// Result of one matching run.
///
/// `src_matched[i]` and `tgt_matched[i]` form the i-th matched pair.
/// `tgt_unmatched` is in visiting order; `src_unmatched` lists the source
/// records never drawn, in index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub src_name: String,
    pub tgt_name: String,
    pub src_len: usize,
    pub tgt_len: usize,
    pub config: MatchConfig,
    pub src_matched: Vec<PredictionRecord>,
    pub tgt_matched: Vec<PredictionRecord>,
    pub tgt_unmatched: Vec<PredictionRecord>,
    pub src_unmatched: Vec<PredictionRecord>,
}

impl MatchOutcome {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn matched_pairs(&self) -> usize {
        self.src_matched.len()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&PredictionRecord, &PredictionRecord)> {
        self.src_matched.iter().zip(&self.tgt_matched)
    }
}

/// The inclusive window test `src - eps <= tgt <= src + eps`, evaluated
/// exactly in f64. Both bounds are monotone in `src`, so the accepted source
/// values form one contiguous range.
#[inline]
pub fn within_window(src_confidence: f64, tgt_confidence: f64, epsilon: f64) -> bool {
    src_confidence - epsilon <= tgt_confidence && tgt_confidence <= src_confidence + epsilon
}

#[inline]
pub fn is_candidate(
    src: &PredictionRecord,
    tgt: &PredictionRecord,
    criterion: MatchCriterion,
    epsilon: f64,
) -> bool {
    (criterion == MatchCriterion::ProbabilityOnly || src.predicted == tgt.predicted)
        && within_window(src.confidence, tgt.confidence, epsilon)
}

/// Source indices in `pool` that may be paired with `target`, ascending.
///
/// `pool` holds the not-yet-matched source records in ascending index order.
pub fn candidate_indices(
    pool: &[PredictionRecord],
    target: &PredictionRecord,
    criterion: MatchCriterion,
    epsilon: f64,
) -> Vec<usize> {
    pool.iter()
        .filter(|s| is_candidate(s, target, criterion, epsilon))
        .map(|s| s.index)
        .collect()
}

/// Order in which targets are visited. Shuffling consumes draws from `rng`
/// before any candidate draw.
pub(crate) fn visiting_order(len: usize, order: TargetOrder, rng: &mut StreamRng) -> Vec<usize> {
    let mut visit: Vec<usize> = (0..len).collect();
    if order == TargetOrder::ShuffledPerSeed {
        rng.shuffle(&mut visit);
    }
    visit
}

pub(crate) fn check_inputs(
    src: &PredictionSet,
    tgt: &PredictionSet,
    cfg: &MatchConfig,
) -> Result<()> {
    cfg.validate()?;
    if tgt.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    if src.is_empty() {
        warn!(
            "source set '{}' is empty; every target will be unmatched",
            src.name()
        );
    }
    Ok(())
}

pub(crate) fn unmatched_sources(src: &PredictionSet, used: &[bool]) -> Vec<PredictionRecord> {
    src.records()
        .iter()
        .zip(used)
        .filter(|(_, &u)| !u)
        .map(|(r, _)| *r)
        .collect()
}

/// Reference matcher: a literal scan of the remaining pool for each target.
/// Quadratic; intended as the oracle for [`match_indexed`] and for small
/// inputs.
pub fn match_greedy(
    src: &PredictionSet,
    tgt: &PredictionSet,
    cfg: &MatchConfig,
) -> Result<MatchOutcome> {
    check_inputs(src, tgt, cfg)?;
    let mut rng = StreamRng::from_seed(cfg.seed);
    let order = visiting_order(tgt.len(), cfg.target_order, &mut rng);

    let mut pool: Vec<PredictionRecord> = src.records().to_vec();
    let mut used = vec![false; src.len()];
    let mut src_matched = Vec::new();
    let mut tgt_matched = Vec::new();
    let mut tgt_unmatched = Vec::new();

    for ti in order {
        let t = tgt.records()[ti];
        let candidates = candidate_indices(&pool, &t, cfg.criterion, cfg.epsilon);
        if candidates.is_empty() {
            tgt_unmatched.push(t);
            continue;
        }
        let chosen = candidates[rng.below_usize(candidates.len())];
        let pos = pool
            .binary_search_by_key(&chosen, |r| r.index)
            .expect("candidate drawn from pool");
        let s = pool.remove(pos);
        used[s.index] = true;
        src_matched.push(s);
        tgt_matched.push(t);
    }

    Ok(MatchOutcome {
        src_name: src.name().to_string(),
        tgt_name: tgt.name().to_string(),
        src_len: src.len(),
        tgt_len: tgt.len(),
        config: *cfg,
        src_matched,
        tgt_matched,
        tgt_unmatched,
        src_unmatched: unmatched_sources(src, &used),
    })
}

/// Runs the indexed matcher for seeds `cfg.seed, cfg.seed + 1, ...`.
/// Runs are independent and evaluated in parallel; output order follows the
/// seeds.
pub fn repeat_match(
    src: &PredictionSet,
    tgt: &PredictionSet,
    cfg: &MatchConfig,
    runs: usize,
) -> Result<Vec<MatchOutcome>> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    (0..runs as u64)
        .into_par_iter()
        .map(|i| match_indexed(src, tgt, &cfg.with_seed(cfg.seed.wrapping_add(i))))
        .collect()
}

/// Applies the larger-set-is-source convention. Warns when the target is
/// larger than the source; swaps the pair only when `auto_swap` is set.
/// Returns the (possibly swapped) pair and whether a swap happened.
pub fn orient<'a>(
    src: &'a PredictionSet,
    tgt: &'a PredictionSet,
    auto_swap: bool,
) -> (&'a PredictionSet, &'a PredictionSet, bool) {
    if tgt.len() > src.len() {
        if auto_swap {
            warn!(
                "target '{}' ({}) is larger than source '{}' ({}); swapping",
                tgt.name(),
                tgt.len(),
                src.name(),
                src.len()
            );
            return (tgt, src, true);
        }
        warn!(
            "target '{}' ({}) is larger than source '{}' ({}); the larger set is usually the source",
            tgt.name(),
            tgt.len(),
            src.name(),
            src.len()
        );
    }
    (src, tgt, false)
}
