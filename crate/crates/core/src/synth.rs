//! Synthetic prediction sets with a known confidence distribution and a
//! known accuracy-given-confidence curve.
//!
//! For each record: draw a confidence `p`, draw the predicted label uniformly,
//! and make the prediction correct with probability `calibration(p)`.
//! Wrong predictions get a ground truth drawn uniformly from the other
//! `K - 1` classes.

use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PredictionRecord, PredictionSet};
use crate::rng::StreamRng;

/// Accuracy as a function of confidence, clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CalibrationFn {
    Identity,
    Affine { intercept: f64, slope: f64 },
    Power { gamma: f64 },
}

impl CalibrationFn {
    pub fn accuracy_at(&self, p: f64) -> f64 {
        let acc = match *self {
            CalibrationFn::Identity => p,
            CalibrationFn::Affine { intercept, slope } => intercept + slope * p,
            CalibrationFn::Power { gamma } => p.powf(gamma),
        };
        acc.clamp(0.0, 1.0)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CalibrationFn::Identity => Ok(()),
            CalibrationFn::Affine { intercept, slope }
                if intercept.is_finite() && slope.is_finite() =>
            {
                Ok(())
            }
            CalibrationFn::Power { gamma } if gamma > 0.0 && gamma.is_finite() => Ok(()),
            other => Err(Error::InvalidConfig(format!(
                "invalid calibration function {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfidenceDist {
    Beta {
        alpha: f64,
        beta: f64,
    },
    /// Point mass; the degenerate limit of a Beta.
    Constant {
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub num_classes: u32,
    pub confidence: ConfidenceDist,
    pub calibration: CalibrationFn,
    /// Rescale draws as `1/K + (1 - 1/K) * b` so confidences never fall
    /// below chance.
    #[serde(default)]
    pub floor_at_chance: bool,
}

impl SynthSpec {
    pub fn beta(
        n: usize,
        num_classes: u32,
        alpha: f64,
        beta: f64,
        calibration: CalibrationFn,
    ) -> Self {
        SynthSpec {
            n,
            num_classes,
            confidence: ConfidenceDist::Beta { alpha, beta },
            calibration,
            floor_at_chance: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig(
                "synthetic set size must be at least 1".into(),
            ));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig(
                "synthetic sets need at least 2 classes".into(),
            ));
        }
        match self.confidence {
            ConfidenceDist::Beta { alpha, beta }
                if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() => {}
            ConfidenceDist::Constant { value } if (0.0..=1.0).contains(&value) => {}
            other => {
                return Err(Error::InvalidConfig(format!(
                    "invalid confidence distribution {other:?}"
                )));
            }
        }
        self.calibration.validate()
    }
}

enum Sampler {
    Beta(Beta<f64>),
    Constant(f64),
}

/// Draws one prediction set from `spec` using a stream seeded with `seed`.
pub fn sample_set(spec: &SynthSpec, seed: u64, name: &str) -> Result<PredictionSet> {
    sample_with(spec, &mut StreamRng::from_seed(seed), name)
}

fn sample_with(spec: &SynthSpec, rng: &mut StreamRng, name: &str) -> Result<PredictionSet> {
    spec.validate()?;
    let sampler = match spec.confidence {
        ConfidenceDist::Beta { alpha, beta } => Sampler::Beta(
            Beta::new(alpha, beta)
                .map_err(|e| Error::InvalidConfig(format!("beta distribution: {e}")))?,
        ),
        ConfidenceDist::Constant { value } => Sampler::Constant(value),
    };
    let k = spec.num_classes;
    let chance = 1.0 / f64::from(k);
    let mut records = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let raw = match &sampler {
            Sampler::Beta(b) => b.sample(rng),
            Sampler::Constant(v) => *v,
        };
        let p = if spec.floor_at_chance {
            (chance + (1.0 - chance) * raw).min(1.0)
        } else {
            raw
        };
        let predicted = rng.below(u64::from(k)) as u32;
        let ground_truth = if rng.unit_f64() < spec.calibration.accuracy_at(p) {
            predicted
        } else {
            let other = rng.below(u64::from(k - 1)) as u32;
            if other >= predicted {
                other + 1
            } else {
                other
            }
        };
        records.push(PredictionRecord::new(i, ground_truth, predicted, p));
    }
    PredictionSet::new(name, k, records)
}

/// Two independent sets named `src` and `tgt`. The target uses the source
/// stream jumped ahead by 2^128 draws, so the streams never overlap.
pub fn make_shift_pair(
    src_spec: &SynthSpec,
    tgt_spec: &SynthSpec,
    seed: u64,
) -> Result<(PredictionSet, PredictionSet)> {
    if src_spec.num_classes != tgt_spec.num_classes {
        return Err(Error::InvalidConfig(format!(
            "shift pair class counts differ: {} vs {}",
            src_spec.num_classes, tgt_spec.num_classes
        )));
    }
    let mut src_rng = StreamRng::from_seed(seed);
    let mut tgt_rng = src_rng.clone();
    tgt_rng.jump();
    let src = sample_with(src_spec, &mut src_rng, "src")?;
    let tgt = sample_with(tgt_spec, &mut tgt_rng, "tgt")?;
    Ok((src, tgt))
}
