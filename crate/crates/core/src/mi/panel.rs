//! Replica probes with masked refitting for per-node entropy tests.

use super::confidence::LossDelta;
use super::estimate::{mean_square, FoldSplit};
use super::probe::{Probe, ProbeConfig};
use super::standardize::Standardizer;
use crate::error::{MippError, Result};
use crate::tensor::{derive_seed, eval_loss, train_dense, LossKind, Matrix};

const PANEL_TAG: u64 = 0x70616e65;
const REFIT_TAG: u64 = 0x72666974;

/// A set of probe replicas trained to reconstruct a downstream activation
/// matrix from an upstream one, supporting incremental masked refits.
///
/// All replicas share the same standardized train/eval folds; each replica
/// has its own init and batch stream. Refits continue from the current
/// replica weights rather than retraining from scratch, so each accepted
/// drop conditions every later test.
#[derive(Debug, Clone)]
pub struct ProbePanel {
    replicas: Vec<Probe>,
    baseline_losses: Vec<f32>,
    x_train: Matrix,
    x_eval: Matrix,
    y_train: Matrix,
    y_eval: Matrix,
    dropped: Vec<usize>,
    refit_iters: usize,
    cfg: ProbeConfig,
    base_seed: u64,
}

/// Outcome of one tentative drop: the loss deltas plus the refit replica
/// state, which the caller adopts if it accepts the drop.
#[derive(Debug, Clone)]
pub struct DropTrial {
    pub deltas: LossDelta,
    pub drop_set: Vec<usize>,
    refit_replicas: Vec<Probe>,
    refit_losses: Vec<f32>,
}

impl ProbePanel {
    /// Standardize both matrices on the train fold and fit `cfg.repeats`
    /// replicas for `cfg.initial_iters` each.
    pub fn fit(x: &Matrix, y: &Matrix, cfg: &ProbeConfig, seed: u64) -> Result<ProbePanel> {
        cfg.validate()?;
        if x.rows() != y.rows() {
            return Err(MippError::Shape {
                op: "ProbePanel::fit",
                expected: format!("{} downstream rows", x.rows()),
                got: format!("{}", y.rows()),
            });
        }
        if x.cols() == 0 {
            return Err(MippError::Config("upstream has no columns".into()));
        }
        let split = FoldSplit::new(x.rows(), cfg.eval_fraction, seed)?;
        let x_stdizer = Standardizer::fit(&x.gather_rows(&split.train_idx));
        let y_stdizer = Standardizer::fit(&y.gather_rows(&split.train_idx));
        let x_train = x_stdizer.apply(&x.gather_rows(&split.train_idx));
        let x_eval = x_stdizer.apply(&x.gather_rows(&split.eval_idx));
        let y_train = y_stdizer.apply(&y.gather_rows(&split.train_idx));
        let y_eval = y_stdizer.apply(&y.gather_rows(&split.eval_idx));

        let refit_iters = cfg.refit_iters_for(y.cols());
        let mut replicas = Vec::with_capacity(cfg.repeats);
        let mut baseline_losses = Vec::with_capacity(cfg.repeats);
        for r in 0..cfg.repeats {
            let rseed = derive_seed(seed, &[PANEL_TAG, r as u64]);
            let mut probe = Probe::new(x.cols(), y.cols(), cfg, rseed);
            train_dense(
                &mut probe.net,
                &x_train,
                &y_train,
                cfg.initial_iters,
                &cfg.sgd_with_seed(rseed),
                LossKind::Mse,
            )?;
            baseline_losses.push(eval_loss(&probe.net, &x_eval, &y_eval, LossKind::Mse)?);
            replicas.push(probe);
        }
        Ok(ProbePanel {
            replicas,
            baseline_losses,
            x_train,
            x_eval,
            y_train,
            y_eval,
            dropped: Vec::new(),
            refit_iters,
            cfg: cfg.clone(),
            base_seed: seed,
        })
    }

    pub fn baseline_losses(&self) -> &[f32] {
        &self.baseline_losses
    }

    /// Loss of the constant predictor on the eval fold (standardized space).
    pub fn null_loss(&self) -> f32 {
        mean_square(&self.y_eval)
    }

    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn upstream_width(&self) -> usize {
        self.x_train.cols()
    }

    /// Tentatively drop `extra` on top of the already-dropped set: mask the
    /// columns, refit each replica for the panel's refit budget, and report
    /// per-replica `refit_loss − baseline_loss`. Panel state is unchanged.
    ///
    /// `salt` keys the refit batch stream; callers pass something unique per
    /// tested node so repeated trials do not share batches.
    pub fn trial_drop(&self, extra: &[usize], salt: u64) -> Result<DropTrial> {
        let mut drop_set: Vec<usize> = self.dropped.clone();
        for &c in extra {
            if c >= self.x_train.cols() {
                return Err(MippError::Shape {
                    op: "ProbePanel::trial_drop",
                    expected: format!("column < {}", self.x_train.cols()),
                    got: format!("{c}"),
                });
            }
            if !drop_set.contains(&c) {
                drop_set.push(c);
            }
        }
        drop_set.sort_unstable();
        if drop_set.len() >= self.x_train.cols() {
            return Err(MippError::DegenerateDrop {
                total: self.x_train.cols(),
            });
        }
        let mut x_train = self.x_train.clone();
        let mut x_eval = self.x_eval.clone();
        x_train.zero_cols(&drop_set);
        x_eval.zero_cols(&drop_set);

        let mut refit_replicas = Vec::with_capacity(self.replicas.len());
        let mut refit_losses = Vec::with_capacity(self.replicas.len());
        let mut deltas = Vec::with_capacity(self.replicas.len());
        for (r, probe) in self.replicas.iter().enumerate() {
            let mut refit = probe.clone();
            let seed = derive_seed(self.base_seed, &[REFIT_TAG, r as u64, salt]);
            train_dense(
                &mut refit.net,
                &x_train,
                &self.y_train,
                self.refit_iters,
                &self.cfg.sgd_with_seed(seed),
                LossKind::Mse,
            )?;
            let loss = eval_loss(&refit.net, &x_eval, &self.y_eval, LossKind::Mse)?;
            deltas.push(loss - self.baseline_losses[r]);
            refit_losses.push(loss);
            refit_replicas.push(refit);
        }
        Ok(DropTrial {
            deltas: LossDelta::new(deltas),
            drop_set,
            refit_replicas,
            refit_losses,
        })
    }

    /// Accept a trial: the refit replicas become the panel state and their
    /// losses the new baselines.
    pub fn adopt(&mut self, trial: DropTrial) {
        self.replicas = trial.refit_replicas;
        self.baseline_losses = trial.refit_losses;
        self.dropped = trial.drop_set;
    }

    /// Record columns as dropped without refitting. Meant for columns that
    /// standardization already pinned at zero (constant activations), where
    /// masking changes nothing about the probe inputs.
    pub fn pre_drop(&mut self, cols: &[usize]) {
        for &c in cols {
            if c < self.x_train.cols() && !self.dropped.contains(&c) {
                self.dropped.push(c);
            }
        }
        self.dropped.sort_unstable();
    }
}

/// Loss deltas from masking `drop_set` and refitting: one delta per replica.
/// Positive deltas mean the dropped columns carried unrecoverable information.
pub fn masked_refit_delta(panel: &ProbePanel, drop_set: &[usize]) -> Result<LossDelta> {
    let mut salt = 0xdead5eedu64;
    for &c in drop_set {
        salt = derive_seed(salt, &[c as u64]);
    }
    Ok(panel.trial_drop(drop_set, salt)?.deltas)
}
