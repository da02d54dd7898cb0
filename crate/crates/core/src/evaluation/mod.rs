//! Token accuracy, boundary F1 and evaluation reports.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{SegExample, Vocabulary, SEPARATOR};
use crate::model::{max_decode_len, Decoded, ModelError, ModelParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("nothing to evaluate")]
    Empty,
    #[error("{predictions} predictions for {golds} gold segmentations")]
    LengthMismatch { predictions: usize, golds: usize },
}

fn check_aligned(predictions: usize, golds: usize) -> Result<(), EvalError> {
    if predictions != golds {
        return Err(EvalError::LengthMismatch { predictions, golds });
    }
    Ok(())
}

/// Fraction of predictions that equal their gold string exactly.
pub fn token_accuracy<P: AsRef<str>, G: AsRef<str>>(
    predictions: &[P],
    golds: &[G],
) -> Result<f64, EvalError> {
    check_aligned(predictions.len(), golds.len())?;
    if golds.is_empty() {
        return Err(EvalError::Empty);
    }
    let correct = predictions
        .iter()
        .zip(golds)
        .filter(|(p, g)| p.as_ref() == g.as_ref())
        .count();
    Ok(correct as f64 / golds.len() as f64)
}

/// Morph boundaries of a segmented string, each identified by the number
/// of non-separator characters before it.
///
/// Repeated separators collapse into one boundary; separators at the very
/// start or end of the string mark no boundary and are dropped.
pub fn boundary_positions(segmented: &str) -> BTreeSet<usize> {
    let mut seen = 0;
    let mut out = BTreeSet::new();
    for c in segmented.chars() {
        if c == SEPARATOR {
            if seen > 0 {
                out.insert(seen);
            }
        } else {
            seen += 1;
        }
    }
    out.remove(&seen);
    out
}

/// Corpus-level boundary counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BoundaryCounts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl BoundaryCounts {
    pub fn of_pair(prediction: &str, gold: &str) -> Self {
        let p = boundary_positions(prediction);
        let g = boundary_positions(gold);
        BoundaryCounts {
            matched: p.intersection(&g).count(),
            predicted: p.len(),
            gold: g.len(),
        }
    }

    /// Micro-averaged precision, recall and F1.
    pub fn scores(&self) -> BorderScore {
        if self.predicted == 0 && self.gold == 0 {
            return BorderScore {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(self.matched, self.predicted);
        let recall = ratio(self.matched, self.gold);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        BorderScore {
            precision,
            recall,
            f1,
        }
    }
}

impl std::ops::AddAssign for BoundaryCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.matched += rhs.matched;
        self.predicted += rhs.predicted;
        self.gold += rhs.gold;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorderScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Boundary precision, recall and F1, micro-averaged over the corpus.
pub fn border_f1<P: AsRef<str>, G: AsRef<str>>(
    predictions: &[P],
    golds: &[G],
) -> Result<BorderScore, EvalError> {
    Ok(boundary_counts(predictions, golds)?.scores())
}

pub fn boundary_counts<P: AsRef<str>, G: AsRef<str>>(
    predictions: &[P],
    golds: &[G],
) -> Result<BoundaryCounts, EvalError> {
    check_aligned(predictions.len(), golds.len())?;
    let mut total = BoundaryCounts::default();
    for (p, g) in predictions.iter().zip(golds) {
        total += BoundaryCounts::of_pair(p.as_ref(), g.as_ref());
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub source: String,
    pub prediction: String,
    pub gold: String,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub correct: usize,
    pub total: usize,
    pub boundaries: BoundaryCounts,
    /// Predictions cut off at the decoding limit.
    pub truncated: usize,
    pub records: Vec<EvalRecord>,
}

impl EvalReport {
    pub fn from_predictions(
        sources: &[String],
        predictions: &[String],
        golds: &[String],
    ) -> Result<Self, EvalError> {
        check_aligned(predictions.len(), golds.len())?;
        check_aligned(sources.len(), golds.len())?;
        let accuracy = token_accuracy(predictions, golds)?;
        let boundaries = boundary_counts(predictions, golds)?;
        let score = boundaries.scores();
        let records: Vec<EvalRecord> = sources
            .iter()
            .zip(predictions.iter().zip(golds))
            .map(|(s, (p, g))| EvalRecord {
                source: s.clone(),
                prediction: p.clone(),
                gold: g.clone(),
                correct: p == g,
            })
            .collect();
        Ok(EvalReport {
            accuracy,
            precision: score.precision,
            recall: score.recall,
            f1: score.f1,
            correct: records.iter().filter(|r| r.correct).count(),
            total: records.len(),
            boundaries,
            truncated: 0,
            records,
        })
    }

    /// Summary as `key=value` lines.
    pub fn to_text(&self) -> String {
        format!(
            "accuracy={:.4}\nprecision={:.4}\nrecall={:.4}\nf1={:.4}\ncorrect={}\ntotal={}\n\
             matched_boundaries={}\npredicted_boundaries={}\ngold_boundaries={}\ntruncated={}\n",
            self.accuracy,
            self.precision,
            self.recall,
            self.f1,
            self.correct,
            self.total,
            self.boundaries.matched,
            self.boundaries.predicted,
            self.boundaries.gold,
            self.truncated,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Sources decoded per batch during evaluation.
pub const DECODE_BATCH: usize = 64;

/// Greedy segmentations for `examples`, in input order.
pub fn predict(
    model: &ModelParams,
    vocab: &Vocabulary,
    examples: &[SegExample],
) -> Result<Vec<Decoded>, ModelError> {
    let mut out = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(DECODE_BATCH) {
        let encoded: Vec<Vec<usize>> = chunk.iter().map(|e| vocab.encode(e).source).collect();
        let sources: Vec<&[usize]> = encoded.iter().map(Vec::as_slice).collect();
        let limits: Vec<usize> = chunk
            .iter()
            .map(|e| max_decode_len(e.source.chars().count()))
            .collect();
        out.extend(model.greedy_decode_batch(vocab, &sources, &limits)?);
    }
    Ok(out)
}

/// Decodes every example and scores it against its gold segmentation.
pub fn evaluate(
    model: &ModelParams,
    vocab: &Vocabulary,
    examples: &[SegExample],
) -> Result<EvalReport, EvaluateError> {
    if examples.is_empty() {
        return Err(EvalError::Empty.into());
    }
    let decoded = predict(model, vocab, examples)?;
    let sources: Vec<String> = examples.iter().map(|e| e.source.clone()).collect();
    let golds: Vec<String> = examples.iter().map(SegExample::target_string).collect();
    let preds: Vec<String> = decoded.iter().map(|d| d.text.clone()).collect();
    let mut report = EvalReport::from_predictions(&sources, &preds, &golds)?;
    report.truncated = decoded.iter().filter(|d| d.truncated).count();
    Ok(report)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluateError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
