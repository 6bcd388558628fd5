#![allow(dead_code)]

use std::collections::BTreeSet;

use predmatch::matcher::within_window;
use predmatch::rng::StreamRng;
use predmatch::{MatchConfig, MatchCriterion, MatchOutcome, PredictionSet};

pub const EPSILONS: [f64; 4] = [0.0, 0.005, 0.05, 1.0];

/// Random prediction set. Confidences come from a coarse grid about half the
/// time so that exact ties (and epsilon = 0 matches) actually occur.
pub fn random_set(rng: &mut StreamRng, name: &str, n: usize, k: u32) -> PredictionSet {
    let coarse = rng.below(2) == 0;
    let triples: Vec<_> = (0..n)
        .map(|_| {
            let p = if coarse {
                rng.below(41) as f64 / 40.0
            } else {
                rng.unit_f64()
            };
            (
                rng.below(u64::from(k)) as u32,
                rng.below(u64::from(k)) as u32,
                p,
            )
        })
        .collect();
    PredictionSet::from_triples(name, k, triples).unwrap()
}

/// Checks every structural guarantee of a matching run. Returns a
/// description of the first violation.
pub fn check_outcome(
    src: &PredictionSet,
    tgt: &PredictionSet,
    cfg: &MatchConfig,
    out: &MatchOutcome,
) -> Result<(), String> {
    if out.src_matched.len() != out.tgt_matched.len() {
        return Err("matched lists differ in length".into());
    }
    if out.tgt_matched.len() + out.tgt_unmatched.len() != tgt.len() {
        return Err("target partition does not cover the target set".into());
    }
    let mut tgt_seen = BTreeSet::new();
    for t in out.tgt_matched.iter().chain(&out.tgt_unmatched) {
        if tgt.records()[t.index] != *t || !tgt_seen.insert(t.index) {
            return Err(format!("target record {} duplicated or altered", t.index));
        }
    }
    let mut src_seen = BTreeSet::new();
    for s in &out.src_matched {
        if src.records()[s.index] != *s {
            return Err(format!("source record {} altered", s.index));
        }
        if !src_seen.insert(s.index) {
            return Err(format!("source record {} matched twice", s.index));
        }
    }
    for s in &out.src_unmatched {
        if !src_seen.insert(s.index) {
            return Err(format!(
                "source record {} both matched and unmatched",
                s.index
            ));
        }
    }
    if src_seen.len() != src.len() {
        return Err("source partition does not cover the source set".into());
    }
    for (s, t) in out.pairs() {
        if !within_window(s.confidence, t.confidence, cfg.epsilon) {
            return Err(format!(
                "pair ({}, {}) outside window: {} vs {} at eps {}",
                s.index, t.index, s.confidence, t.confidence, cfg.epsilon
            ));
        }
        if (s.confidence - t.confidence).abs() > cfg.epsilon + 1e-15 {
            return Err(format!(
                "pair ({}, {}) differs by more than eps",
                s.index, t.index
            ));
        }
        if cfg.criterion == MatchCriterion::LabelAndProbability && s.predicted != t.predicted {
            return Err(format!(
                "pair ({}, {}) has different predicted labels",
                s.index, t.index
            ));
        }
    }
    if cfg.criterion == MatchCriterion::LabelAndProbability {
        let mut a: Vec<_> = out.src_matched.iter().map(|r| r.predicted).collect();
        let mut b: Vec<_> = out.tgt_matched.iter().map(|r| r.predicted).collect();
        a.sort();
        b.sort();
        if a != b {
            return Err("predicted-label multisets differ".into());
        }
    }
    Ok(())
}

pub fn report_line(name: &str, pass: bool, detail: &str) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}
