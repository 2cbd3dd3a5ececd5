//! Softmax and cross-entropy, fused for numerical stability.

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Numerically stable softmax of one logit row.
pub fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Fused softmax + cross-entropy over a `(batch, classes)` logit tensor with
/// zero-based class labels. Returns the mean loss and the logit gradient
/// `(softmax - onehot) / batch`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let [batch, classes] = match logits.shape() {
        [b, c] => [*b, *c],
        other => {
            return Err(Error::invalid(format!(
                "logits must be (batch, classes), got {other:?}"
            )))
        }
    };
    if labels.len() != batch {
        return Err(Error::invalid(format!(
            "{} labels for a batch of {batch}",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::invalid(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }

    let mut grad = Tensor::zeros(logits.shape());
    let inv_batch = 1.0 / batch as f64;
    let mut total = 0.0;
    for b in 0..batch {
        let row = logits.sample(b);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        let log_sum = max + sum_exp.ln();
        total += log_sum - row[labels[b]];

        let grow = grad.sample_mut(b);
        for (g, &v) in grow.iter_mut().zip(row) {
            *g = (v - log_sum).exp() * inv_batch;
        }
        grow[labels[b]] -= inv_batch;
    }
    Ok((total * inv_batch, grad))
}

/// Cross-entropy against one-hot label rows: mean over the batch of
/// `-sum_i onehot_i * log(softmax(logits)_i)`. Rows that are not exactly
/// one-hot are rejected.
pub fn cross_entropy_loss(logits: &Tensor, one_hot: &Tensor) -> Result<f64> {
    if logits.shape() != one_hot.shape() {
        return Err(Error::invalid(format!(
            "logits shape {:?} does not match labels shape {:?}",
            logits.shape(),
            one_hot.shape()
        )));
    }
    let batch = logits.batch();
    let mut labels = Vec::with_capacity(batch);
    for b in 0..batch {
        let row = one_hot.sample(b);
        let mut hot = None;
        for (i, &v) in row.iter().enumerate() {
            if v == 1.0 && hot.is_none() {
                hot = Some(i);
            } else if v != 0.0 {
                return Err(Error::invalid(format!(
                    "label row {b} is not one-hot: entry {i} = {v}"
                )));
            }
        }
        labels.push(
            hot.ok_or_else(|| Error::invalid(format!("label row {b} has no hot entry")))?,
        );
    }
    softmax_cross_entropy(logits, &labels).map(|(loss, _)| loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(batch: usize, classes: usize, labels: &[usize]) -> Tensor {
        let mut t = Tensor::zeros(&[batch, classes]);
        for (b, &l) in labels.iter().enumerate() {
            t.sample_mut(b)[l] = 1.0;
        }
        t
    }

    #[test]
    fn uniform_logits_cost_ln_classes() {
        for classes in [2usize, 10, 85] {
            let logits = Tensor::from_vec(&[3, classes], vec![0.37; 3 * classes]).unwrap();
            let labels = one_hot(3, classes, &[0, classes / 2, classes - 1]);
            let loss = cross_entropy_loss(&logits, &labels).unwrap();
            assert!(
                (loss - (classes as f64).ln()).abs() < 1e-12,
                "classes {classes}: loss {loss}"
            );
        }
    }

    #[test]
    fn confident_correct_logits_cost_nothing() {
        let mut logits = Tensor::zeros(&[1, 4]);
        logits.sample_mut(0)[2] = 20.0;
        let labels = one_hot(1, 4, &[2]);
        let loss = cross_entropy_loss(&logits, &labels).unwrap();
        assert!(loss < 1e-6, "loss {loss}");
    }

    #[test]
    fn matches_direct_per_row_summation() {
        let logits = Tensor::from_vec(
            &[4, 3],
            vec![
                0.3, -1.2, 0.8, //
                2.0, 0.1, -0.4, //
                -0.9, -0.2, 1.4, //
                0.0, 0.5, -2.0,
            ],
        )
        .unwrap();
        let labels = [2usize, 0, 1, 1];
        let (loss, _) = softmax_cross_entropy(&logits, &labels).unwrap();
        let mut direct = 0.0;
        for (b, &l) in labels.iter().enumerate() {
            let probs = softmax_row(logits.sample(b));
            direct -= probs[l].ln();
        }
        direct /= labels.len() as f64;
        assert!((loss - direct).abs() < 1e-12);
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let logits = Tensor::from_vec(&[2, 5], vec![0.1, 0.9, -0.3, 0.0, 2.0, 1.0, 1.0, 1.0, -1.0, 0.5])
            .unwrap();
        let (_, grad) = softmax_cross_entropy(&logits, &[4, 0]).unwrap();
        for b in 0..2 {
            let s: f64 = grad.sample(b).iter().sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn non_one_hot_rows_rejected() {
        let logits = Tensor::zeros(&[1, 3]);
        let bad = Tensor::from_vec(&[1, 3], vec![0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(
            cross_entropy_loss(&logits, &bad),
            Err(Error::InvalidArgument(_))
        ));
        let two_hot = Tensor::from_vec(&[1, 3], vec![1.0, 1.0, 0.0]).unwrap();
        assert!(cross_entropy_loss(&logits, &two_hot).is_err());
    }

    #[test]
    fn out_of_range_label_rejected() {
        let logits = Tensor::zeros(&[1, 3]);
        assert!(matches!(
            softmax_cross_entropy(&logits, &[3]),
            Err(Error::InvalidArgument(_))
        ));
    }
}
