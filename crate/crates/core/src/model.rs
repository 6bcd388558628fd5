//! Prediction records and the two scalar summaries everything else builds on.
//!
//! Labels are 0-based: a set with `K` classes accepts labels `0..K`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A class index in `0..K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabel(pub u32);

impl ClassLabel {
    pub fn id(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One datapoint's model output: ground truth, predicted label, and the
/// predicted (maximum softmax) probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub index: usize,
    pub ground_truth: ClassLabel,
    pub predicted: ClassLabel,
    pub confidence: f64,
}

impl PredictionRecord {
    pub fn new(index: usize, ground_truth: u32, predicted: u32, confidence: f64) -> Self {
        PredictionRecord {
            index,
            ground_truth: ClassLabel(ground_truth),
            predicted: ClassLabel(predicted),
            confidence,
        }
    }

    pub fn is_correct(&self) -> bool {
        self.ground_truth == self.predicted
    }
}

/// Validated predictions of one model on one test dataset.
///
/// Record indices are exactly `0..n` in order, every label is below
/// `num_classes`, and every confidence lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    name: String,
    num_classes: u32,
    records: Vec<PredictionRecord>,
}

impl PredictionSet {
    pub fn new(
        name: impl Into<String>,
        num_classes: u32,
        records: Vec<PredictionRecord>,
    ) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::InvalidSet(
                "number of classes must be positive".into(),
            ));
        }
        if records.is_empty() {
            return Err(Error::InvalidSet(
                "a prediction set needs at least one record".into(),
            ));
        }
        for (i, r) in records.iter().enumerate() {
            if r.index != i {
                return Err(Error::InvalidSet(format!(
                    "record at position {i} carries index {}",
                    r.index
                )));
            }
            check_record(r, num_classes)
                .map_err(|msg| Error::InvalidSet(format!("record {i}: {msg}")))?;
        }
        Ok(PredictionSet {
            name: name.into(),
            num_classes,
            records,
        })
    }

    /// Builds a set from `(ground_truth, predicted, confidence)` triples,
    /// assigning indices in order.
    pub fn from_triples(
        name: impl Into<String>,
        num_classes: u32,
        triples: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<Self> {
        let records = triples
            .into_iter()
            .enumerate()
            .map(|(i, (y, yhat, p))| PredictionRecord::new(i, y, yhat, p))
            .collect();
        Self::new(name, num_classes, records)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn accuracy(&self) -> f64 {
        // non-empty by construction
        accuracy(&self.records).unwrap_or(0.0)
    }

    pub fn mean_confidence(&self) -> f64 {
        mean_confidence(&self.records).unwrap_or(0.0)
    }

    /// Number of records whose confidence is below chance level `1/K`.
    /// Such records are legal but cannot come from a softmax maximum.
    pub fn below_chance_count(&self) -> usize {
        let chance = 1.0 / f64::from(self.num_classes);
        self.records
            .iter()
            .filter(|r| r.confidence < chance)
            .count()
    }
}

/// Checks a single record against a class count, returning a human-readable
/// reason on failure.
pub(crate) fn check_record(
    r: &PredictionRecord,
    num_classes: u32,
) -> std::result::Result<(), String> {
    if !(0.0..=1.0).contains(&r.confidence) {
        return Err(format!("confidence {} outside [0, 1]", r.confidence));
    }
    if r.ground_truth.0 >= num_classes {
        return Err(format!(
            "ground-truth label {} not below class count {num_classes}",
            r.ground_truth.0
        ));
    }
    if r.predicted.0 >= num_classes {
        return Err(format!(
            "predicted label {} not below class count {num_classes}",
            r.predicted.0
        ));
    }
    Ok(())
}

/// Fraction of records whose predicted label equals the ground truth.
pub fn accuracy(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    let correct = correct_count(records);
    Ok(correct as f64 / records.len() as f64)
}

pub fn correct_count(records: &[PredictionRecord]) -> usize {
    records.iter().filter(|r| r.is_correct()).count()
}

/// Arithmetic mean of the predicted probabilities.
pub fn mean_confidence(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    let sum: f64 = records.iter().map(|r| r.confidence).sum();
    Ok(sum / records.len() as f64)
}
