//! Central finite-difference check of backpropagated gradients.
//!
//! Uses only [`Network::forward`] and the loss, so it is independent of the
//! backward pass it validates.

use super::{softmax_xent, Network, Tape, Tensor};
use crate::Result;

/// Denominator floor for the relative error, so parameters whose true
/// gradient is ~0 are compared in absolute terms.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameters compared.
    pub checked: usize,
    /// Parameters skipped because the `±step` perturbation flipped a ReLU.
    pub skipped_kinks: usize,
}

fn loss(net: &Network, batch: &Tensor, labels: &[usize]) -> Result<f64> {
    Ok(softmax_xent(&net.forward(batch)?, labels)?.0)
}

fn relu_patterns(net: &Network, batch: &Tensor) -> Vec<Vec<bool>> {
    let b = batch.shape()[0];
    let per = batch.len() / b.max(1);
    (0..b).map(|i| net.relu_pattern(&batch.data()[i * per..(i + 1) * per])).collect()
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares every analytic parameter gradient of the mean softmax
/// cross-entropy against `(L(w+h) - L(w-h)) / 2h`.
pub fn check_gradients(net: &Network, batch: &Tensor, labels: &[usize], step: f64) -> Result<GradCheckReport> {
    let mut tape = Tape::default();
    let logits = net.forward_recorded(batch, &mut tape)?;
    let (_, grad_logits) = softmax_xent(&logits, labels)?;
    let analytic: Vec<f64> = net.backward(&tape, &grad_logits)?.values().collect();

    let mut probe = net.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, checked: 0, skipped_kinks: 0 };
    for (i, &a) in analytic.iter().enumerate() {
        let w = *probe.param_mut(i).unwrap();
        *probe.param_mut(i).unwrap() = w + step;
        let plus = loss(&probe, batch, labels)?;
        let plus_pattern = relu_patterns(&probe, batch);
        *probe.param_mut(i).unwrap() = w - step;
        let minus = loss(&probe, batch, labels)?;
        let minus_pattern = relu_patterns(&probe, batch);
        *probe.param_mut(i).unwrap() = w;
        if plus_pattern != minus_pattern {
            report.skipped_kinks += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * step);
        report.max_rel_error = report.max_rel_error.max(relative_error(a, numeric));
        report.checked += 1;
    }
    Ok(report)
}
