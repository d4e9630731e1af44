//! Probe nets and their training configuration.

use crate::error::{MippError, Result};
use crate::tensor::{derive_seed, Activation, DenseNet, SgdConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Downstream layers at least this wide use `wide_refit_iters` per node test.
pub const WIDE_LAYER_THRESHOLD: usize = 256;

/// Configuration for MI probes and the per-node refit procedure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Number of independently trained probe replicas per estimate.
    pub repeats: usize,
    /// Iterations for the initial full fit.
    pub initial_iters: usize,
    /// Iterations when refitting after masking a node.
    pub refit_iters: usize,
    /// Refit iterations used when the downstream layer is wide.
    pub wide_refit_iters: usize,
    /// Iterations for the cheap single-node ordering probes.
    pub ordering_iters: usize,
    /// Width of the two hidden layers.
    pub hidden_width: usize,
    /// Fraction of rows held out for loss evaluation.
    pub eval_fraction: f64,
    pub sgd: SgdConfig,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            repeats: 3,
            initial_iters: 1500,
            refit_iters: 150,
            wide_refit_iters: 20,
            ordering_iters: 35,
            hidden_width: 256,
            eval_fraction: 0.2,
            sgd: SgdConfig {
                learning_rate: 2e-2,
                momentum: 0.9,
                weight_decay: 0.0,
                batch_size: 100,
                seed: 0,
            },
        }
    }
}

impl ProbeConfig {
    /// Smaller probes for desk-scale experiments and tests.
    pub fn desk_scale() -> Self {
        ProbeConfig {
            initial_iters: 400,
            refit_iters: 80,
            ordering_iters: 25,
            hidden_width: 64,
            ..ProbeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("repeats", self.repeats),
            ("initial_iters", self.initial_iters),
            ("refit_iters", self.refit_iters),
            ("wide_refit_iters", self.wide_refit_iters),
            ("ordering_iters", self.ordering_iters),
            ("hidden_width", self.hidden_width),
        ] {
            if v == 0 {
                return Err(MippError::Config(format!("{name} must be >= 1")));
            }
        }
        if !(0.0 < self.eval_fraction && self.eval_fraction < 1.0) {
            return Err(MippError::Config(format!(
                "eval_fraction must be in (0, 1), got {}",
                self.eval_fraction
            )));
        }
        self.sgd.validate()
    }

    /// Refit budget for a given downstream width.
    pub fn refit_iters_for(&self, downstream_cols: usize) -> usize {
        if downstream_cols >= WIDE_LAYER_THRESHOLD {
            self.wide_refit_iters
        } else {
            self.refit_iters
        }
    }

    pub fn sgd_with_seed(&self, seed: u64) -> SgdConfig {
        self.sgd.with_seed(seed)
    }
}

/// A probe: dense net `input -> hidden -> hidden -> output` with relu hidden
/// layers and an identity output head.
#[derive(Debug, Clone)]
pub struct Probe {
    pub net: DenseNet,
}

impl Probe {
    pub fn new(input_width: usize, output_width: usize, cfg: &ProbeConfig, seed: u64) -> Probe {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x70726f6265]));
        let dims = [input_width, cfg.hidden_width, cfg.hidden_width, output_width];
        Probe {
            net: DenseNet::init(&dims, Activation::Relu, Activation::Identity, &mut rng),
        }
    }
}
