use super::Tensor;
use crate::{Error, Result};

/// Numerically stable softmax of one logit row.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean softmax cross-entropy over a `[B, K]` batch and its gradient with
/// respect to the logits.
pub fn softmax_xent(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let shape = logits.shape();
    if shape.len() != 2 || shape[0] != labels.len() {
        return Err(Error::Shape(format!("logits {shape:?} do not match {} labels", labels.len())));
    }
    let (b, k) = (shape[0], shape[1]);
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::LabelOutOfRange { label: bad, classes: k });
    }
    let mut loss = 0.0f64;
    let mut grad = Vec::with_capacity(b * k);
    let inv_b = 1.0 / b.max(1) as f64;
    for (i, &label) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&z| (z - max).exp()).sum();
        let log_sum = max + sum.ln();
        loss += log_sum - row[label];
        for (j, &z) in row.iter().enumerate() {
            let p = (z - log_sum).exp();
            let target = if j == label { 1.0 } else { 0.0 };
            grad.push((p - target) * inv_b);
        }
    }
    Ok((loss * inv_b, Tensor::new(vec![b, k], grad)?))
}
