//! Minibatch training loop for dense nets.

use super::loss::{loss_grad, loss_value, LossKind};
use super::matrix::Matrix;
use super::net::DenseNet;
use super::sgd::{SgdConfig, SgdState};
use crate::error::{MippError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-iteration loss trace of one training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub losses: Vec<f32>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f32 {
        *self.losses.last().unwrap_or(&f32::NAN)
    }

    /// Mean loss over the last `frac` of iterations (at least one).
    pub fn tail_mean(&self, frac: f64) -> f32 {
        let n = self.losses.len();
        let k = ((n as f64 * frac).ceil() as usize).clamp(1, n.max(1));
        let tail = &self.losses[n - k..];
        (tail.iter().map(|&v| v as f64).sum::<f64>() / k as f64) as f32
    }
}

/// Train `net` on `(x, y)` for `iters` steps with the given loss head.
///
/// Datasets of up to [`super::sgd::FULL_BATCH_THRESHOLD`] rows are trained
/// full-batch; larger ones sample `cfg.batch_size` rows per step with a
/// ChaCha RNG seeded from `cfg.seed`, so runs are reproducible bit for bit.
pub fn train_dense(
    net: &mut DenseNet,
    x: &Matrix,
    y: &Matrix,
    iters: usize,
    cfg: &SgdConfig,
    loss: LossKind,
) -> Result<TrainReport> {
    cfg.validate()?;
    if x.rows() != y.rows() {
        return Err(MippError::Shape {
            op: "train_dense",
            expected: format!("targets with {} rows", x.rows()),
            got: format!("{} rows", y.rows()),
        });
    }
    if iters == 0 {
        return Err(MippError::Config("iters must be >= 1".into()));
    }
    let n = x.rows();
    if n == 0 {
        return Err(MippError::InsufficientSamples {
            op: "train_dense",
            needed: 1,
            got: 0,
        });
    }
    let batch = cfg.effective_batch(n);
    let full_batch = batch == n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = SgdState::new(net);
    let mut losses = Vec::with_capacity(iters);
    let mut indices = vec![0usize; batch];

    for it in 0..iters {
        let (bx, by);
        let (xb, yb) = if full_batch {
            (x, y)
        } else {
            for slot in indices.iter_mut() {
                *slot = rng.gen_range(0..n);
            }
            bx = x.gather_rows(&indices);
            by = y.gather_rows(&indices);
            (&bx, &by)
        };
        let outs = net.forward_cached(xb)?;
        let pred = outs.last().expect("net has layers");
        let l = loss_value(loss, pred, yb);
        if !l.is_finite() {
            return Err(MippError::Divergence {
                iteration: it,
                loss: l,
            });
        }
        losses.push(l);
        let d_out = loss_grad(loss, pred, yb);
        let grads = net.backward(xb, &outs, d_out);
        state.step(net, &grads, cfg);
    }
    Ok(TrainReport { losses })
}

/// MSE regression fit; the probe-training entry point.
pub fn train_regressor(
    net: &mut DenseNet,
    x: &Matrix,
    y: &Matrix,
    iters: usize,
    cfg: &SgdConfig,
) -> Result<TrainReport> {
    train_dense(net, x, y, iters, cfg, LossKind::Mse)
}

/// Evaluate a loss head on held-out data without touching the net.
pub fn eval_loss(net: &DenseNet, x: &Matrix, y: &Matrix, loss: LossKind) -> Result<f32> {
    let pred = net.forward(x)?;
    Ok(loss_value(loss, &pred, y))
}
