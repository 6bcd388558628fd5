//! Compare a classifier on two similar test datasets by matching predictions
//! across them on predicted label and/or predicted probability, then
//! reporting accuracy on the matched subsets alongside plain accuracy.
//!
//! Labels are 0-based throughout.

pub mod error;
pub mod experiment;
pub mod io;
pub mod matcher;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use experiment::{scatter_points, sweep, PairEntry, ScatterPoint, SweepRow};
pub use matcher::{
    candidate_indices, match_greedy, match_indexed, repeat_match, MatchConfig, MatchCriterion,
    MatchOutcome, TargetOrder,
};
pub use metrics::{
    build_report, confidence_histogram, ece, fraction_unmatched, matched_accuracies,
    reliability_curve, BinningSpec, ReliabilityBin, Report,
};
pub use model::{accuracy, mean_confidence, ClassLabel, PredictionRecord, PredictionSet};
pub use synth::{make_shift_pair, sample_set, CalibrationFn, ConfidenceDist, SynthSpec};
