//! Classification metrics: accuracy, macro-F1, confusion matrix.

use serde::{Deserialize, Serialize};

use super::model::{forward_csi, ModelSpec, ParameterStore};
use super::train::TrainSet;
use crate::error::{Error, Result};

/// Evaluation report. The confusion matrix is indexed `[true][predicted]`,
/// so every scalar here can be recomputed from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_accuracy: Vec<f64>,
    pub confusion: Vec<Vec<u64>>,
    pub n_samples: usize,
}

/// Metrics from a confusion matrix: accuracy, macro-F1 (per-class F1 is
/// `2PR / (P + R)` with 0 where the denominator is empty), and per-class
/// recall.
pub fn metrics_from_confusion(confusion: &[Vec<u64>]) -> (f64, f64, Vec<f64>) {
    let classes = confusion.len();
    let total: u64 = confusion.iter().flatten().sum();
    let correct: u64 = (0..classes).map(|i| confusion[i][i]).sum();
    let accuracy = if total > 0 {
        correct as f64 / total as f64
    } else {
        0.0
    };

    let mut f1_sum = 0.0;
    let mut per_class = Vec::with_capacity(classes);
    for c in 0..classes {
        let tp = confusion[c][c] as f64;
        let actual: u64 = confusion[c].iter().sum();
        let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
        let precision = if predicted > 0 {
            tp / predicted as f64
        } else {
            0.0
        };
        let recall = if actual > 0 { tp / actual as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        f1_sum += f1;
        per_class.push(recall);
    }
    (accuracy, f1_sum / classes as f64, per_class)
}

/// Build a confusion matrix from prediction/label pairs.
pub fn confusion_matrix(
    predictions: &[usize],
    labels: &[usize],
    n_classes: usize,
) -> Result<Vec<Vec<u64>>> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut m = vec![vec![0u64; n_classes]; n_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= n_classes || l >= n_classes {
            return Err(Error::invalid(format!(
                "prediction {p} / label {l} out of range for {n_classes} classes"
            )));
        }
        m[l][p] += 1;
    }
    Ok(m)
}

const EVAL_BATCH: usize = 64;

/// Evaluate a trained model on a labeled test set.
pub fn evaluate(
    params: &ParameterStore,
    spec: &ModelSpec,
    test: &TrainSet,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    let shapes = spec.validate()?;
    if test.labels.iter().any(|&l| l >= shapes.n_main) {
        return Err(Error::invalid("test label out of model range"));
    }

    let mut predictions = Vec::with_capacity(test.len());
    let stride = test.inputs.stride();
    let mut start = 0;
    while start < test.len() {
        let end = (start + EVAL_BATCH).min(test.len());
        let mut shape = vec![end - start];
        shape.extend_from_slice(test.sample_shape());
        let data = test.inputs.data()[start * stride..end * stride].to_vec();
        let batch = super::tensor::Tensor::from_vec(&shape, data)?;
        let logits = forward_csi(spec, params, batch)?;
        for b in 0..(end - start) {
            let row = logits.sample(b);
            let mut arg = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[arg] {
                    arg = i;
                }
            }
            predictions.push(arg);
        }
        start = end;
    }

    let confusion = confusion_matrix(&predictions, &test.labels, shapes.n_main)?;
    let (accuracy, macro_f1, per_class_accuracy) = metrics_from_confusion(&confusion);
    Ok(EvalReport {
        accuracy,
        macro_f1,
        per_class_accuracy,
        confusion,
        n_samples: test.len(),
    })
}
