//! Transfer-entropy redundancy criterion over one layer pair.
//!
//! Starting from "keep everything", nodes are visited least-informative
//! first. Each node is tentatively masked on top of everything already
//! dropped and the reconstruction probes are refit; if the eval loss fails
//! to recover, the node transfers entropy and stays, otherwise it is
//! dropped and the refit probes become the new baseline. Because each
//! accepted drop conditions all later tests, the ranking is never static.

use crate::error::{MippError, Result};
use crate::mi::{
    keep_confidence, FoldSplit, LossDelta, Probe, ProbeConfig, ProbePanel, Standardizer,
    CONST_COLUMN_VAR_EPS,
};
use crate::tensor::{derive_seed, eval_loss, train_dense, LossKind, Matrix};
use serde::{Deserialize, Serialize};

const ORDER_TAG: u64 = 0x6f726465;
const PANEL_SEED_TAG: u64 = 0x74657263;

/// One upstream/downstream activation pair to prune.
#[derive(Debug)]
pub struct LayerPairJob<'a> {
    /// Upstream activations, samples x nodes; the candidates for pruning.
    pub upstream: &'a Matrix,
    /// Downstream activations, already restricted to their kept columns.
    pub downstream: &'a Matrix,
    /// Keep threshold `x`: a node is dropped unless we are more than `x`
    /// sure it transfers entropy. Higher values prune more aggressively.
    pub confidence: f32,
    pub probe_cfg: ProbeConfig,
    pub seed: u64,
}

/// Why a node ended up kept or dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    /// Loss failed to recover after masking: the node transfers entropy.
    Kept,
    /// Masking was recoverable; the node is redundant.
    Dropped,
    /// Constant activation column, dropped without a probe test.
    DroppedConstant,
    /// Kept to guarantee the layer retains at least one node.
    KeptFloor,
}

/// Diagnostics for a single node test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NodeDecision {
    pub delta_mean: f32,
    pub delta_std: f32,
    pub confidence: f32,
    pub decision: Decision,
}

/// Output of [`terc_layer`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TercResult {
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    /// One entry per upstream node, indexed by node.
    pub per_node: Vec<NodeDecision>,
    /// The order in which probe-tested nodes were visited.
    pub visit_order: Vec<usize>,
    /// Set when the downstream matrix was entirely constant and the result
    /// degenerated to keeping the single highest-variance upstream node.
    pub degenerate_target: bool,
}

/// Rank nodes by how much a single-node probe can reconstruct `y`.
///
/// Trains one probe per column for `cfg.ordering_iters` and returns node
/// indices sorted worst-loss-first, so the least informative nodes are
/// visited (and thus possibly dropped) before the informative ones. All
/// per-node probes share one seed: identical columns produce identical
/// losses and fall back to the ascending-index tie-break.
pub fn mi_order(x: &Matrix, y: &Matrix, cfg: &ProbeConfig, seed: u64) -> Result<Vec<usize>> {
    cfg.validate()?;
    if x.cols() == 0 {
        return Ok(Vec::new());
    }
    if x.cols() == 1 {
        return Ok(vec![0]);
    }
    let split = FoldSplit::new(x.rows(), cfg.eval_fraction, seed)?;
    let x_stdizer = Standardizer::fit(&x.gather_rows(&split.train_idx));
    let y_stdizer = Standardizer::fit(&y.gather_rows(&split.train_idx));
    let x_train = x_stdizer.apply(&x.gather_rows(&split.train_idx));
    let x_eval = x_stdizer.apply(&x.gather_rows(&split.eval_idx));
    let y_train = y_stdizer.apply(&y.gather_rows(&split.train_idx));
    let y_eval = y_stdizer.apply(&y.gather_rows(&split.eval_idx));

    let probe_seed = derive_seed(seed, &[ORDER_TAG]);
    let mut losses = Vec::with_capacity(x.cols());
    for col in 0..x.cols() {
        let xc_train = x_train.gather_cols(&[col]);
        let xc_eval = x_eval.gather_cols(&[col]);
        let mut probe = Probe::new(1, y.cols(), cfg, probe_seed);
        train_dense(
            &mut probe.net,
            &xc_train,
            &y_train,
            cfg.ordering_iters,
            &cfg.sgd_with_seed(probe_seed),
            LossKind::Mse,
        )?;
        losses.push(eval_loss(&probe.net, &xc_eval, &y_eval, LossKind::Mse)?);
    }
    let mut order: Vec<usize> = (0..x.cols()).collect();
    order.sort_by(|&a, &b| losses[b].total_cmp(&losses[a]).then(a.cmp(&b)));
    Ok(order)
}

/// Run the redundancy criterion over one layer pair.
pub fn terc_layer(job: &LayerPairJob) -> Result<TercResult> {
    let x = job.upstream;
    let y = job.downstream;
    if x.rows() != y.rows() {
        return Err(MippError::Shape {
            op: "terc_layer",
            expected: format!("{} downstream rows", x.rows()),
            got: format!("{}", y.rows()),
        });
    }
    if x.cols() == 0 || y.cols() == 0 {
        return Err(MippError::Config(
            "terc_layer needs at least one upstream and one downstream column".into(),
        ));
    }
    if !(0.5..1.0).contains(&job.confidence) {
        return Err(MippError::Config(format!(
            "confidence must be in [0.5, 1), got {}",
            job.confidence
        )));
    }

    let n = x.cols();
    let x_vars = x.col_variances();
    let mut per_node = vec![
        NodeDecision {
            delta_mean: 0.0,
            delta_std: 0.0,
            confidence: 0.0,
            decision: Decision::DroppedConstant,
        };
        n
    ];

    // A constant target carries no entropy at all; keep the single liveliest
    // upstream node so the layer survives, and warn through the result.
    let y_vars = y.col_variances();
    if y_vars.iter().all(|&v| v <= CONST_COLUMN_VAR_EPS) {
        let keep = x_vars
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        per_node[keep] = NodeDecision {
            delta_mean: 0.0,
            delta_std: 0.0,
            confidence: 1.0,
            decision: Decision::KeptFloor,
        };
        return Ok(TercResult {
            kept: vec![keep],
            dropped: (0..n).filter(|&i| i != keep).collect(),
            per_node,
            visit_order: Vec::new(),
            degenerate_target: true,
        });
    }

    // Constant upstream columns are information-theoretically null: standard-
    // ization pins them at zero, so no probe test is needed to drop them.
    let candidates: Vec<usize> = (0..n)
        .filter(|&i| x_vars[i] > CONST_COLUMN_VAR_EPS)
        .collect();

    if candidates.is_empty() {
        per_node[0].decision = Decision::KeptFloor;
        per_node[0].confidence = 1.0;
        return Ok(TercResult {
            kept: vec![0],
            dropped: (1..n).collect(),
            per_node,
            visit_order: Vec::new(),
            degenerate_target: false,
        });
    }

    let full_order = mi_order(x, y, &job.probe_cfg, job.seed)?;
    let visit_order: Vec<usize> = full_order
        .into_iter()
        .filter(|i| candidates.contains(i))
        .collect();

    let panel_seed = derive_seed(job.seed, &[PANEL_SEED_TAG]);
    let mut panel = ProbePanel::fit(x, y, &job.probe_cfg, panel_seed)?;
    let constant_cols: Vec<usize> = (0..n).filter(|i| !candidates.contains(i)).collect();
    panel.pre_drop(&constant_cols);

    let mut kept_left = candidates.len();
    for &node in &visit_order {
        if kept_left == 1 {
            per_node[node] = NodeDecision {
                delta_mean: 0.0,
                delta_std: 0.0,
                confidence: 1.0,
                decision: Decision::KeptFloor,
            };
            continue;
        }
        let trial = panel.trial_drop(&[node], node as u64)?;
        let conf = keep_confidence(&trial.deltas);
        let (mean, std) = (trial.deltas.mean(), trial.deltas.std());
        let decision = if conf <= job.confidence {
            panel.adopt(trial);
            kept_left -= 1;
            Decision::Dropped
        } else {
            Decision::Kept
        };
        per_node[node] = NodeDecision {
            delta_mean: mean,
            delta_std: std,
            confidence: conf,
            decision,
        };
    }

    let kept: Vec<usize> = (0..n)
        .filter(|&i| {
            matches!(
                per_node[i].decision,
                Decision::Kept | Decision::KeptFloor
            )
        })
        .collect();
    let dropped: Vec<usize> = (0..n).filter(|i| !kept.contains(i)).collect();
    debug_assert!(!kept.is_empty());
    Ok(TercResult {
        kept,
        dropped,
        per_node,
        visit_order,
        degenerate_target: false,
    })
}

/// Convenience: deltas of dropping `drop_set` on a freshly fitted panel.
pub fn layer_drop_delta(
    x: &Matrix,
    y: &Matrix,
    drop_set: &[usize],
    cfg: &ProbeConfig,
    seed: u64,
) -> Result<LossDelta> {
    let panel = ProbePanel::fit(x, y, cfg, derive_seed(seed, &[PANEL_SEED_TAG]))?;
    crate::mi::masked_refit_delta(&panel, drop_set)
}
