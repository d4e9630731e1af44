//! Stochastic gradient descent with momentum and weight decay.

use super::matrix::Matrix;
use super::net::{DenseNet, NetGrads};
use crate::error::{MippError, Result};
use serde::{Deserialize, Serialize};

/// Datasets at or below this row count are trained full-batch; larger ones
/// are minibatched with `SgdConfig::batch_size`.
pub const FULL_BATCH_THRESHOLD: usize = 1024;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f32,
    pub momentum: f32,
    pub weight_decay: f32,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 1e-2,
            momentum: 0.9,
            weight_decay: 1e-4,
            batch_size: 100,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(MippError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(MippError::Config(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.weight_decay < 0.0 {
            return Err(MippError::Config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.batch_size == 0 {
            return Err(MippError::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn effective_batch(&self, n_rows: usize) -> usize {
        if n_rows <= FULL_BATCH_THRESHOLD {
            n_rows
        } else {
            self.batch_size.min(n_rows)
        }
    }
}

/// Momentum buffers, one per parameter tensor.
#[derive(Debug, Clone)]
pub struct SgdState {
    vel_w: Vec<Matrix>,
    vel_b: Vec<Vec<f32>>,
}

impl SgdState {
    pub fn new(net: &DenseNet) -> Self {
        SgdState {
            vel_w: net
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.w.rows(), l.w.cols()))
                .collect(),
            vel_b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        }
    }

    /// `v = momentum*v + (g + wd*w); w -= lr*v`
    pub fn step(&mut self, net: &mut DenseNet, grads: &NetGrads, cfg: &SgdConfig) {
        let lr = cfg.learning_rate;
        let mu = cfg.momentum;
        let wd = cfg.weight_decay;
        for ((layer, g), (vw, vb)) in net
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.vel_w.iter_mut().zip(self.vel_b.iter_mut()))
        {
            for ((w, &gw), v) in layer
                .w
                .data_mut()
                .iter_mut()
                .zip(g.dw.data())
                .zip(vw.data_mut())
            {
                *v = mu * *v + gw + wd * *w;
                *w -= lr * *v;
            }
            for ((b, &gb), v) in layer.b.iter_mut().zip(&g.db).zip(vb.iter_mut()) {
                *v = mu * *v + gb;
                *b -= lr * *v;
            }
        }
    }
}
