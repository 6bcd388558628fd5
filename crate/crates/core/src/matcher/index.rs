use std::collections::BTreeSet;

use crate::error::Result;
use crate::model::{PredictionRecord, PredictionSet};
use crate::rng::StreamRng;

use super::{
    check_inputs, is_candidate, unmatched_sources, visiting_order, MatchConfig, MatchCriterion,
    MatchOutcome,
};

// Widening applied to the range query before the exact window test. Only
// affects how many keys are inspected, never which records qualify.
const RANGE_SLACK: f64 = 1e-9;

/// Order-preserving key for a confidence in `[0, 1]`. Non-negative f64 bit
/// patterns sort like the values; `+ 0.0` folds `-0.0` onto `+0.0`.
#[inline]
fn key(confidence: f64) -> u64 {
    (confidence + 0.0).to_bits()
}

/// Remaining source records grouped by predicted label (a single group under
/// probability-only matching), each group sorted by confidence then index.
struct SourceIndex {
    by_group: Vec<BTreeSet<(u64, usize)>>,
    criterion: MatchCriterion,
}

impl SourceIndex {
    fn build(src: &PredictionSet, criterion: MatchCriterion) -> Self {
        let groups = match criterion {
            MatchCriterion::LabelAndProbability => src.num_classes() as usize,
            MatchCriterion::ProbabilityOnly => 1,
        };
        let mut by_group = vec![BTreeSet::new(); groups];
        for r in src.records() {
            by_group[Self::group_of(criterion, r)].insert((key(r.confidence), r.index));
        }
        SourceIndex {
            by_group,
            criterion,
        }
    }

    fn group_of(criterion: MatchCriterion, r: &PredictionRecord) -> usize {
        match criterion {
            MatchCriterion::LabelAndProbability => r.predicted.index(),
            MatchCriterion::ProbabilityOnly => 0,
        }
    }

    /// Fills `out` with the source indices passing the exact candidate test
    /// for `t`, in no particular order.
    fn candidates(
        &self,
        src: &PredictionSet,
        t: &PredictionRecord,
        epsilon: f64,
        out: &mut Vec<usize>,
    ) {
        out.clear();
        let Some(group) = self.by_group.get(Self::group_of(self.criterion, t)) else {
            return;
        };
        let lo = (t.confidence - epsilon - RANGE_SLACK).max(0.0);
        let hi = t.confidence + epsilon + RANGE_SLACK;
        let records = src.records();
        out.extend(
            group
                .range((key(lo), 0)..=(key(hi), usize::MAX))
                .map(|&(_, i)| i)
                .filter(|&i| is_candidate(&records[i], t, self.criterion, epsilon)),
        );
    }

    fn remove(&mut self, r: &PredictionRecord) {
        let removed =
            self.by_group[Self::group_of(self.criterion, r)].remove(&(key(r.confidence), r.index));
        debug_assert!(removed);
    }
}

/// Indexed matcher. Produces exactly the output of
/// [`match_greedy`](super::match_greedy) while answering each window query
/// in `O(log n + c)` for `c` keys in range.
pub fn match_indexed(
    src: &PredictionSet,
    tgt: &PredictionSet,
    cfg: &MatchConfig,
) -> Result<MatchOutcome> {
    check_inputs(src, tgt, cfg)?;
    let mut rng = StreamRng::from_seed(cfg.seed);
    let order = visiting_order(tgt.len(), cfg.target_order, &mut rng);

    let mut index = SourceIndex::build(src, cfg.criterion);
    let mut used = vec![false; src.len()];
    let mut candidates = Vec::new();
    let mut src_matched = Vec::with_capacity(tgt.len().min(src.len()));
    let mut tgt_matched = Vec::with_capacity(tgt.len().min(src.len()));
    let mut tgt_unmatched = Vec::new();

    for ti in order {
        let t = tgt.records()[ti];
        index.candidates(src, &t, cfg.epsilon, &mut candidates);
        if candidates.is_empty() {
            tgt_unmatched.push(t);
            continue;
        }
        // The draw picks a rank in ascending source-index order.
        let rank = rng.below_usize(candidates.len());
        let (_, &mut chosen, _) = candidates.select_nth_unstable(rank);
        let s = src.records()[chosen];
        index.remove(&s);
        used[chosen] = true;
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
