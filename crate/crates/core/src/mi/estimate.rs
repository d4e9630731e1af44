//! Predictive-loss mutual information: `I(X;Y) ≈ loss(f(∅),Y) − loss(f(X),Y)`.

use super::probe::{Probe, ProbeConfig};
use super::standardize::Standardizer;
use crate::error::{MippError, Result};
use crate::tensor::{
    derive_seed, eval_loss, one_hot, train_dense, LossKind, Matrix,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const FOLD_TAG: u64 = 0x666f6c64;
const REPLICA_TAG: u64 = 0x7265706c;

/// Minimum eval-fold rows for a meaningful loss estimate.
pub const MIN_EVAL_ROWS: usize = 10;

/// MSE of the best constant predictor: the mean per-column population
/// variance of `y`.
pub fn null_loss(y: &Matrix) -> f32 {
    if y.cols() == 0 {
        return 0.0;
    }
    let vars = y.col_variances();
    (vars.iter().sum::<f64>() / vars.len() as f64) as f32
}

/// Repeated predictive-loss measurements for one (X, Y) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiEstimate {
    /// Eval-fold loss of each trained replica.
    pub repeats: Vec<f32>,
    pub mean: f32,
    pub std: f32,
    /// Eval-fold loss of the constant predictor fitted on the train fold.
    pub null_loss: f32,
}

impl MiEstimate {
    pub fn from_repeats(repeats: Vec<f32>, null_loss: f32) -> Self {
        let n = repeats.len().max(1) as f64;
        let mean = repeats.iter().map(|&v| v as f64).sum::<f64>() / n;
        let std = if repeats.len() < 2 {
            0.0
        } else {
            let ss: f64 = repeats
                .iter()
                .map(|&v| {
                    let d = v as f64 - mean;
                    d * d
                })
                .sum();
            (ss / (repeats.len() - 1) as f64).sqrt()
        };
        MiEstimate {
            repeats,
            mean: mean as f32,
            std: std as f32,
            null_loss,
        }
    }

    /// `null_loss − mean`, floored at zero for reporting.
    pub fn mi_value(&self) -> f32 {
        (self.null_loss - self.mean).max(0.0)
    }
}

/// Deterministic 80/20-style row split.
#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub train_idx: Vec<usize>,
    pub eval_idx: Vec<usize>,
}

impl FoldSplit {
    pub fn new(rows: usize, eval_fraction: f64, seed: u64) -> Result<Self> {
        let mut order: Vec<usize> = (0..rows).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[FOLD_TAG]));
        order.shuffle(&mut rng);
        let n_eval = ((rows as f64) * eval_fraction).round() as usize;
        let n_eval = n_eval.clamp(1, rows.saturating_sub(1).max(1));
        if n_eval < MIN_EVAL_ROWS {
            return Err(MippError::InsufficientSamples {
                op: "FoldSplit",
                needed: MIN_EVAL_ROWS,
                got: n_eval,
            });
        }
        let (eval_idx, train_idx) = order.split_at(n_eval);
        Ok(FoldSplit {
            train_idx: train_idx.to_vec(),
            eval_idx: eval_idx.to_vec(),
        })
    }
}

/// Estimate the MI between column set `x` and targets `y` as the reduction in
/// eval-fold MSE relative to the constant predictor.
///
/// Trains `cfg.repeats` fresh probes on the standardized train fold and
/// evaluates each on the standardized eval fold; both activations and targets
/// are z-scored with train-fold statistics.
pub fn estimate_mi(x: &Matrix, y: &Matrix, cfg: &ProbeConfig) -> Result<MiEstimate> {
    cfg.validate()?;
    if x.rows() != y.rows() {
        return Err(MippError::Shape {
            op: "estimate_mi",
            expected: format!("{} target rows", x.rows()),
            got: format!("{}", y.rows()),
        });
    }
    let split = FoldSplit::new(x.rows(), cfg.eval_fraction, cfg.sgd.seed)?;
    let y_std = Standardizer::fit(&y.gather_rows(&split.train_idx));
    let y_train = y_std.apply(&y.gather_rows(&split.train_idx));
    let y_eval = y_std.apply(&y.gather_rows(&split.eval_idx));
    // In standardized space the train-fold constant predictor is zero.
    let null = mean_square(&y_eval);

    if x.cols() == 0 {
        // f(∅): nothing to train on, the estimate is the null loss itself.
        return Ok(MiEstimate::from_repeats(vec![null; cfg.repeats], null));
    }

    let x_stdizer = Standardizer::fit(&x.gather_rows(&split.train_idx));
    let x_train = x_stdizer.apply(&x.gather_rows(&split.train_idx));
    let x_eval = x_stdizer.apply(&x.gather_rows(&split.eval_idx));

    let mut repeats = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let seed = derive_seed(cfg.sgd.seed, &[REPLICA_TAG, r as u64]);
        let mut probe = Probe::new(x.cols(), y.cols(), cfg, seed);
        train_dense(
            &mut probe.net,
            &x_train,
            &y_train,
            cfg.initial_iters,
            &cfg.sgd_with_seed(seed),
            LossKind::Mse,
        )?;
        repeats.push(eval_loss(&probe.net, &x_eval, &y_eval, LossKind::Mse)?);
    }
    Ok(MiEstimate::from_repeats(repeats, null))
}

/// Estimate the MI between `x` and a discrete target, in nats, with a
/// softmax cross-entropy head. The null predictor is the train-fold class
/// marginal, so `mi_value` approaches `H(Y) − H(Y|X)`.
pub fn estimate_mi_categorical(
    x: &Matrix,
    labels: &[usize],
    n_classes: usize,
    cfg: &ProbeConfig,
) -> Result<MiEstimate> {
    cfg.validate()?;
    if x.rows() != labels.len() {
        return Err(MippError::Shape {
            op: "estimate_mi_categorical",
            expected: format!("{} labels", x.rows()),
            got: format!("{}", labels.len()),
        });
    }
    let split = FoldSplit::new(x.rows(), cfg.eval_fraction, cfg.sgd.seed)?;
    let gather = |idx: &[usize]| -> Vec<usize> { idx.iter().map(|&i| labels[i]).collect() };
    let train_labels = gather(&split.train_idx);
    let eval_labels = gather(&split.eval_idx);

    // Laplace-smoothed train-fold marginal as the constant predictor.
    let mut counts = vec![1f64; n_classes];
    for &c in &train_labels {
        counts[c] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    let null = -(eval_labels
        .iter()
        .map(|&c| (counts[c] / total).ln())
        .sum::<f64>()
        / eval_labels.len().max(1) as f64) as f32;

    if x.cols() == 0 {
        return Ok(MiEstimate::from_repeats(vec![null; cfg.repeats], null));
    }

    let x_stdizer = Standardizer::fit(&x.gather_rows(&split.train_idx));
    let x_train = x_stdizer.apply(&x.gather_rows(&split.train_idx));
    let x_eval = x_stdizer.apply(&x.gather_rows(&split.eval_idx));
    let y_train = one_hot(&train_labels, n_classes);
    let y_eval = one_hot(&eval_labels, n_classes);

    let mut repeats = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let seed = derive_seed(cfg.sgd.seed, &[REPLICA_TAG, r as u64]);
        let mut probe = Probe::new(x.cols(), n_classes, cfg, seed);
        train_dense(
            &mut probe.net,
            &x_train,
            &y_train,
            cfg.initial_iters,
            &cfg.sgd_with_seed(seed),
            LossKind::CrossEntropy,
        )?;
        repeats.push(eval_loss(&probe.net, &x_eval, &y_eval, LossKind::CrossEntropy)?);
    }
    Ok(MiEstimate::from_repeats(repeats, null))
}

pub(crate) fn mean_square(m: &Matrix) -> f32 {
    if m.data().is_empty() {
        return 0.0;
    }
    let acc: f64 = m.data().iter().map(|&v| (v as f64) * (v as f64)).sum();
    (acc / m.data().len() as f64) as f32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_loss_of_constant_is_zero() {
        let y = Matrix::from_vec(4, 2, vec![3.0; 8]).unwrap();
        assert_eq!(null_loss(&y), 0.0);
    }

    #[test]
    fn null_loss_of_two_point_column() {
        let y = Matrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(null_loss(&y), 1.0);
    }

    #[test]
    fn fold_split_is_deterministic_and_disjoint() {
        let a = FoldSplit::new(100, 0.2, 7).unwrap();
        let b = FoldSplit::new(100, 0.2, 7).unwrap();
        assert_eq!(a.train_idx, b.train_idx);
        assert_eq!(a.eval_idx.len(), 20);
        let mut all: Vec<usize> = a.train_idx.iter().chain(&a.eval_idx).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn too_few_eval_rows_is_an_error() {
        assert!(FoldSplit::new(20, 0.2, 0).is_err());
    }
}
