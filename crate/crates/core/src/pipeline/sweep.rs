//! The whole-network sweep: prune each layer against its already-pruned
//! successor, from outputs back to inputs.

use super::collapse::{collapse_layer, CollapseFn};
use super::schedule::confidence_schedule;
use crate::error::{MippError, Result};
use crate::mi::ProbeConfig;
use crate::models::{detect_layer_collapse, ActivationCapture, CollapseReport, PruneMask};
use crate::tensor::{derive_seed, Matrix};
use crate::terc::{terc_layer, LayerPairJob, TercResult};
use serde::{Deserialize, Serialize};

const LAYER_TAG: u64 = 0x6c617965;
const FEATURE_TAG: u64 = 0x66656174;

/// Parameters of the keep-confidence schedule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub x0: f64,
    pub r: f64,
    pub steps: usize,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams {
            x0: 0.5,
            r: 0.5,
            steps: 20,
        }
    }
}

impl ScheduleParams {
    pub fn values(&self) -> Result<Vec<f64>> {
        confidence_schedule(self.x0, self.r, self.steps)
    }
}

/// Configuration of one pruning sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MippConfig {
    /// Keep threshold x on the [0, 1] scale.
    pub confidence: f64,
    pub schedule: ScheduleParams,
    pub collapse: CollapseFn,
    pub probe_cfg: ProbeConfig,
    pub capture_samples: usize,
    pub seed: u64,
}

impl Default for MippConfig {
    fn default() -> Self {
        MippConfig {
            confidence: 0.5,
            schedule: ScheduleParams::default(),
            collapse: CollapseFn::L1,
            probe_cfg: ProbeConfig::default(),
            capture_samples: 2048,
            seed: 0,
        }
    }
}

impl MippConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..1.0).contains(&self.confidence) {
            return Err(MippError::Config(format!(
                "confidence must be in [0.5, 1), got {}",
                self.confidence
            )));
        }
        self.schedule.values()?;
        self.probe_cfg.validate()
    }

    pub fn with_confidence(mut self, x: f64) -> Self {
        self.confidence = x;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Diagnostics of one layer-pair job.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerReport {
    /// Index of the pruned layer in `ToyModel::layers`.
    pub layer_index: usize,
    pub width: usize,
    /// Column count of the (already pruned) downstream target, recording
    /// that the sweep ran outputs-to-inputs.
    pub downstream_width: usize,
    pub terc: TercResult,
}

/// Outcome of a sweep: masks plus pruning-ratio bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MippReport {
    pub masks: Vec<PruneMask>,
    /// Fraction pruned per prunable layer, in network order.
    pub per_layer_pr: Vec<f64>,
    /// Per-layer PR divided by the mean PR (all ones when nothing pruned).
    pub normalized_pr: Vec<f64>,
    /// Width-weighted global fraction pruned.
    pub global_pr: f64,
    pub collapse: CollapseReport,
    /// Per-layer diagnostics in sweep order (outputs first).
    pub layers: Vec<LayerReport>,
}

/// Prune every captured layer against its already-pruned successor.
///
/// The capture's last entry (the output layer) is never pruned and anchors
/// the first job; each result then becomes the next job's target, so by the
/// time the first hidden layer is pruned it only has to support entropy
/// that itself survived all downstream pruning.
pub fn mipp(capture: &ActivationCapture, cfg: &MippConfig) -> Result<MippReport> {
    cfg.validate()?;
    let n = capture.layers.len();
    if n < 2 {
        return Err(MippError::Config(
            "capture needs at least one prunable layer plus the output layer".into(),
        ));
    }
    let collapsed: Vec<Matrix> = capture
        .layers
        .iter()
        .map(|cl| collapse_layer(&cl.acts, cfg.collapse))
        .collect::<Result<_>>()?;
    for m in &collapsed {
        if m.rows() != capture.sample_count {
            return Err(MippError::Shape {
                op: "mipp",
                expected: format!("{} captured rows per layer", capture.sample_count),
                got: format!("{}", m.rows()),
            });
        }
    }

    let mut kept_cols: Vec<usize> = (0..collapsed[n - 1].cols()).collect();
    let mut sweep = Vec::with_capacity(n - 1);
    for l in (0..n - 1).rev() {
        let downstream = if kept_cols.len() == collapsed[l + 1].cols() {
            collapsed[l + 1].clone()
        } else {
            collapsed[l + 1].gather_cols(&kept_cols)
        };
        let job = LayerPairJob {
            upstream: &collapsed[l],
            downstream: &downstream,
            confidence: cfg.confidence as f32,
            probe_cfg: cfg.probe_cfg.clone(),
            seed: derive_seed(cfg.seed, &[LAYER_TAG, l as u64]),
        };
        let terc = terc_layer(&job)?;
        kept_cols = terc.kept.clone();
        sweep.push(LayerReport {
            layer_index: capture.layers[l].layer_index,
            width: collapsed[l].cols(),
            downstream_width: downstream.cols(),
            terc,
        });
    }

    let mut masks: Vec<PruneMask> = sweep
        .iter()
        .map(|lr| PruneMask::from_kept(lr.layer_index, lr.width, &lr.terc.kept))
        .collect();
    masks.sort_by_key(|m| m.layer_index);

    let per_layer_pr: Vec<f64> = masks.iter().map(PruneMask::pruned_fraction).collect();
    let total_units: usize = masks.iter().map(|m| m.keep.len()).sum();
    let total_dropped: usize = masks.iter().map(|m| m.dropped_units().len()).sum();
    let global_pr = if total_units == 0 {
        0.0
    } else {
        total_dropped as f64 / total_units as f64
    };
    let mean_pr = per_layer_pr.iter().sum::<f64>() / per_layer_pr.len().max(1) as f64;
    let normalized_pr = if mean_pr > 0.0 {
        per_layer_pr.iter().map(|p| p / mean_pr).collect()
    } else {
        vec![1.0; per_layer_pr.len()]
    };
    let collapse = detect_layer_collapse(&masks);

    Ok(MippReport {
        masks,
        per_layer_pr,
        normalized_pr,
        global_pr,
        collapse,
        layers: sweep,
    })
}

/// Decide which raw input features transfer entropy to the pruned first
/// layer. Runs the same criterion with the inputs as the upstream set, so
/// feature and node selection stay consistent with each other.
pub fn feature_select(
    capture: &ActivationCapture,
    masks: &[PruneMask],
    cfg: &MippConfig,
) -> Result<TercResult> {
    cfg.validate()?;
    let first = capture.layers.first().ok_or_else(|| {
        MippError::Config("capture has no layers to select features against".into())
    })?;
    let acts = collapse_layer(&first.acts, cfg.collapse)?;
    let kept: Vec<usize> = masks
        .iter()
        .find(|m| m.layer_index == first.layer_index)
        .map(|m| m.kept_units())
        .unwrap_or_else(|| (0..acts.cols()).collect());
    if kept.is_empty() {
        return Err(MippError::Config(
            "first-layer mask keeps no units; cannot select features".into(),
        ));
    }
    let downstream = acts.gather_cols(&kept);
    let job = LayerPairJob {
        upstream: &capture.inputs,
        downstream: &downstream,
        confidence: cfg.confidence as f32,
        probe_cfg: cfg.probe_cfg.clone(),
        seed: derive_seed(cfg.seed, &[FEATURE_TAG]),
    };
    terc_layer(&job)
}
