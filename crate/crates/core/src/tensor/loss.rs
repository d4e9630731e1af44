//! Losses: mean squared error and softmax cross-entropy (in nats).

use super::matrix::Matrix;

/// Which loss head a training run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Mean over all elements of the squared error. Targets are real values.
    Mse,
    /// Softmax cross-entropy averaged over samples. Targets are one-hot rows.
    CrossEntropy,
}

/// MSE over all elements, accumulated in f64.
pub fn mse(pred: &Matrix, target: &Matrix) -> f32 {
    debug_assert_eq!(pred.rows(), target.rows());
    debug_assert_eq!(pred.cols(), target.cols());
    let mut acc = 0f64;
    for (p, t) in pred.data().iter().zip(target.data()) {
        let d = (*p - *t) as f64;
        acc += d * d;
    }
    (acc / pred.data().len().max(1) as f64) as f32
}

/// dL/dpred for [`mse`].
pub fn mse_grad(pred: &Matrix, target: &Matrix) -> Matrix {
    let n = pred.data().len().max(1) as f32;
    let mut g = Matrix::zeros(pred.rows(), pred.cols());
    for ((gv, &p), &t) in g.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        *gv = 2.0 * (p - t) / n;
    }
    g
}

/// Cross-entropy of softmax(logits) against one-hot targets, in nats.
pub fn cross_entropy(logits: &Matrix, one_hot: &Matrix) -> f32 {
    let mut acc = 0f64;
    for r in 0..logits.rows() {
        let row = logits.row(r);
        let log_probs = log_softmax(row);
        for (&t, lp) in one_hot.row(r).iter().zip(&log_probs) {
            if t != 0.0 {
                acc -= t as f64 * lp;
            }
        }
    }
    (acc / logits.rows().max(1) as f64) as f32
}

/// dL/dlogits for [`cross_entropy`]: `(softmax - one_hot) / batch`.
pub fn cross_entropy_grad(logits: &Matrix, one_hot: &Matrix) -> Matrix {
    let batch = logits.rows().max(1) as f32;
    let mut g = Matrix::zeros(logits.rows(), logits.cols());
    for r in 0..logits.rows() {
        let lp = log_softmax(logits.row(r));
        let tgt = one_hot.row(r);
        for ((gv, lpv), &t) in g.row_mut(r).iter_mut().zip(&lp).zip(tgt) {
            *gv = ((lpv.exp() as f32) - t) / batch;
        }
    }
    g
}

/// Numerically stable log-softmax of one row, computed in f64.
pub fn log_softmax(row: &[f32]) -> Vec<f64> {
    let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let mut sum = 0f64;
    for &v in row {
        sum += (v as f64 - max).exp();
    }
    let log_z = max + sum.ln();
    row.iter().map(|&v| v as f64 - log_z).collect()
}

pub fn loss_value(kind: LossKind, pred: &Matrix, target: &Matrix) -> f32 {
    match kind {
        LossKind::Mse => mse(pred, target),
        LossKind::CrossEntropy => cross_entropy(pred, target),
    }
}

pub fn loss_grad(kind: LossKind, pred: &Matrix, target: &Matrix) -> Matrix {
    match kind {
        LossKind::Mse => mse_grad(pred, target),
        LossKind::CrossEntropy => cross_entropy_grad(pred, target),
    }
}

/// One-hot encode class ids into a `len x n_classes` matrix.
pub fn one_hot(labels: &[usize], n_classes: usize) -> Matrix {
    let mut m = Matrix::zeros(labels.len(), n_classes);
    for (r, &c) in labels.iter().enumerate() {
        m.set(r, c, 1.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_of_constant_gap() {
        let p = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let t = Matrix::from_rows(&[vec![0.0, 2.0]]).unwrap();
        assert_eq!(mse(&p, &t), 1.0);
    }

    #[test]
    fn cross_entropy_of_uniform_logits_is_log_k() {
        let logits = Matrix::zeros(4, 3);
        let targets = one_hot(&[0, 1, 2, 0], 3);
        let ce = cross_entropy(&logits, &targets);
        assert!((ce - (3.0f32).ln()).abs() < 1e-6);
    }

    #[test]
    fn cross_entropy_grad_sums_to_zero_per_row() {
        let logits = Matrix::from_rows(&[vec![0.3, -1.2, 2.0]]).unwrap();
        let targets = one_hot(&[2], 3);
        let g = cross_entropy_grad(&logits, &targets);
        let s: f32 = g.row(0).iter().sum();
        assert!(s.abs() < 1e-6);
    }
}
