//! Error measures for simulation studies.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::depth::{Candidate, NormKind};
use crate::error::{Result, RfmError};

/// Smallest misclassification rate over all relabelings `s` of
/// `{0, …, k}` (outlier label included): `min_s (1/n) Σ 1{y_i ≠ s(ŷ_i)}`.
pub fn matching_error(truth: &[usize], pred: &[usize], k: usize) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(RfmError::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(RfmError::Empty("labelling"));
    }
    if let Some(&label) = truth.iter().chain(pred).find(|&&l| l > k) {
        return Err(RfmError::LabelOutOfRange { label, k });
    }
    let mut confusion = Matrix::new(k + 1, k + 1, 0i64);
    for (&t, &p) in truth.iter().zip(pred) {
        confusion[(p, t)] += 1;
    }
    let (agree, _) = kuhn_munkres(&confusion);
    Ok(1.0 - agree as f64 / truth.len() as f64)
}

/// Mean over replicates of the squared `kind`-norm of `estimate − truth`.
pub fn mse_report(estimates: &[Candidate], truth: &Candidate, kind: NormKind) -> Result<f64> {
    if estimates.is_empty() {
        return Err(RfmError::Empty("estimates"));
    }
    if truth.natural_norm() != kind {
        return Err(RfmError::KindMismatch);
    }
    let mut acc = 0.0;
    for e in estimates {
        acc += e.distance(truth)?.powi(2);
    }
    Ok(acc / estimates.len() as f64)
}
