//! Train → prune → re-train experiment runner with CSV/JSON emission.
//!
//! `results.csv` schema (stable, one row per seed/method/x):
//!
//! ```text
//! seed,method,x,global_pr,per_layer_pr,pre_accuracy,post_prune_accuracy,
//! post_retrain_accuracy,collapsed
//! ```
//!
//! `per_layer_pr` is `;`-joined. Rows are byte-for-byte reproducible from
//! (spec, seed); wall-clock times go to `timings.csv` instead so the result
//! rows stay deterministic.

use crate::datasets::{load_dataset, LoadedData};
use crate::recipes::{build_model, duplicate_hidden_nodes};
use anyhow::{Context, Result};
use mipp::models::{
    accuracy, apply_masks, capture_activations, detect_layer_collapse, train_classifier,
    ActivationCapture, Dataset, PruneMask, ToyModel,
};
use mipp::pipeline::{baseline_l1_magnitude, baseline_random, mipp, MaskFile, MippConfig, MippReport};
use mipp::tensor::{derive_seed, SgdConfig};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

const MODEL_TAG: u64 = 0x6d6f6465;
const SWEEP_TAG: u64 = 0x73776565;
const RETRAIN_TAG: u64 = 0x72657472;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Random,
    L1,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::L1 => "l1",
        }
    }
}

impl FromStr for BaselineKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(BaselineKind::Random),
            "l1" => Ok(BaselineKind::L1),
            other => anyhow::bail!("unknown baseline '{other}' (expected random | l1)"),
        }
    }
}

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model: String,
    pub dataset: String,
    /// Train the model before pruning (otherwise prune at initialization).
    pub pretrained: bool,
    /// Widen hidden layers into exact twin pairs before pruning.
    pub duplicate_nodes: bool,
    pub mipp: MippConfig,
    pub baselines: Vec<BaselineKind>,
    pub train_epochs: usize,
    pub retrain_epochs: usize,
    pub train_sgd: SgdConfig,
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(model: &str, dataset: &str) -> Self {
        ExperimentSpec {
            model: model.to_string(),
            dataset: dataset.to_string(),
            pretrained: true,
            duplicate_nodes: false,
            mipp: MippConfig::default(),
            baselines: vec![],
            train_epochs: 20,
            retrain_epochs: 20,
            train_sgd: SgdConfig::default(),
            seeds: vec![0],
            out_dir: None,
        }
    }
}

/// One seed/method/x outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub method: String,
    pub x: f64,
    pub global_pr: f64,
    pub per_layer_pr: Vec<f64>,
    pub pre_accuracy: f32,
    pub post_prune_accuracy: f32,
    pub post_retrain_accuracy: f32,
    pub collapsed: bool,
    pub wall_clock_ms: u128,
}

/// A record plus the masks that produced it.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub record: RunRecord,
    pub masks: Vec<PruneMask>,
    pub report: Option<MippReport>,
}

/// Model, data and capture shared by every method at one seed.
pub struct PreparedRun {
    pub model: ToyModel,
    pub train: Dataset,
    pub test: Dataset,
    pub capture: ActivationCapture,
    pub pre_accuracy: f32,
}

/// Build (and optionally train) the model for one seed, then capture.
pub fn prepare_run(spec: &ExperimentSpec, seed: u64) -> Result<PreparedRun> {
    let LoadedData {
        train,
        test,
        input_shape,
    } = load_dataset(&spec.dataset, seed)?;
    let mut model = build_model(
        &spec.model,
        input_shape,
        train.n_classes,
        derive_seed(seed, &[MODEL_TAG]),
    )?;
    if spec.pretrained && spec.train_epochs > 0 {
        let cfg = spec.train_sgd.with_seed(derive_seed(seed, &[MODEL_TAG, 1]));
        train_classifier(&mut model, &train, &test, spec.train_epochs, &cfg)
            .context("pre-training")?;
    }
    if spec.duplicate_nodes {
        model = duplicate_hidden_nodes(&model)?;
    }
    let n_capture = spec.mipp.capture_samples.min(train.len());
    let capture = capture_activations(&model, &train.x, n_capture)?;
    let pre_accuracy = accuracy(&model, &test)?;
    Ok(PreparedRun {
        model,
        train,
        test,
        capture,
        pre_accuracy,
    })
}

fn prune_eval_retrain(
    spec: &ExperimentSpec,
    seed: u64,
    prepared: &PreparedRun,
    method: &str,
    x: f64,
    masks: Vec<PruneMask>,
    report: Option<MippReport>,
    started: Instant,
) -> Result<MethodOutcome> {
    let masked = apply_masks(&prepared.model, &masks)?;
    let post_prune_accuracy = accuracy(&masked, &prepared.test)?;
    let post_retrain_accuracy = if spec.retrain_epochs > 0 {
        let mut retrained = masked;
        let cfg = spec
            .train_sgd
            .with_seed(derive_seed(seed, &[RETRAIN_TAG, hash_method(method)]));
        train_classifier(
            &mut retrained,
            &prepared.train,
            &prepared.test,
            spec.retrain_epochs,
            &cfg,
        )
        .context("re-training")?;
        accuracy(&retrained, &prepared.test)?
    } else {
        post_prune_accuracy
    };

    let collapse = detect_layer_collapse(&masks);
    let (total, dropped) = mipp::models::mask_totals(&masks);
    let global_pr = if total == 0 {
        0.0
    } else {
        dropped as f64 / total as f64
    };
    let per_layer_pr = masks.iter().map(PruneMask::pruned_fraction).collect();
    Ok(MethodOutcome {
        record: RunRecord {
            seed,
            method: method.to_string(),
            x,
            global_pr,
            per_layer_pr,
            pre_accuracy: prepared.pre_accuracy,
            post_prune_accuracy,
            post_retrain_accuracy,
            collapsed: collapse.collapsed,
            wall_clock_ms: started.elapsed().as_millis(),
        },
        masks,
        report,
    })
}

fn hash_method(method: &str) -> u64 {
    method.bytes().fold(0u64, |acc, b| acc.wrapping_mul(31).wrapping_add(b as u64))
}

/// Run the sweep plus matched-PR baselines at one confidence value.
///
/// Baselines are handed the global PR that the sweep realized, mirroring a
/// matched-sparsity comparison.
pub fn execute_at(
    spec: &ExperimentSpec,
    seed: u64,
    prepared: &PreparedRun,
    x: f64,
) -> Result<Vec<MethodOutcome>> {
    let mut outcomes = Vec::new();
    let started = Instant::now();
    let cfg = spec
        .mipp
        .clone()
        .with_confidence(x)
        .with_seed(derive_seed(seed, &[SWEEP_TAG]));
    let report = mipp(&prepared.capture, &cfg)?;
    let matched_pr = report.global_pr;
    outcomes.push(prune_eval_retrain(
        spec,
        seed,
        prepared,
        "mipp",
        x,
        report.masks.clone(),
        Some(report),
        started,
    )?);

    for baseline in &spec.baselines {
        let started = Instant::now();
        let masks = match baseline {
            BaselineKind::Random => baseline_random(
                &prepared.model,
                matched_pr,
                derive_seed(seed, &[SWEEP_TAG, 0x72616e64]),
            )?,
            BaselineKind::L1 => baseline_l1_magnitude(&prepared.model, matched_pr)?,
        };
        outcomes.push(prune_eval_retrain(
            spec,
            seed,
            prepared,
            baseline.name(),
            x,
            masks,
            None,
            started,
        )?);
    }
    Ok(outcomes)
}

/// Per seed and method: (optionally) train, capture, prune, re-train.
/// Writes `results.csv`, `timings.csv`, per-run mask files and a config
/// echo when the spec names an output directory.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<MethodOutcome>> {
    let mut outcomes = Vec::new();
    for &seed in &spec.seeds {
        let prepared = prepare_run(spec, seed)?;
        outcomes.extend(execute_at(spec, seed, &prepared, spec.mipp.confidence)?);
    }
    if let Some(dir) = &spec.out_dir {
        write_outputs(spec, dir, &outcomes, "results.csv", true)?;
    }
    Ok(outcomes)
}

/// Run the experiment at every confidence value of the schedule. The model,
/// its training and the capture are shared across schedule points; only the
/// keep threshold changes.
pub fn sweep_schedule(spec: &ExperimentSpec) -> Result<Vec<MethodOutcome>> {
    let xs = spec.mipp.schedule.values()?;
    let mut outcomes = Vec::new();
    for &seed in &spec.seeds {
        let prepared = prepare_run(spec, seed)?;
        for &x in &xs {
            outcomes.extend(execute_at(spec, seed, &prepared, x)?);
        }
    }
    if let Some(dir) = &spec.out_dir {
        write_outputs(spec, dir, &outcomes, "sweep.csv", false)?;
    }
    Ok(outcomes)
}

pub fn results_csv(outcomes: &[MethodOutcome]) -> String {
    let mut s = String::from(
        "seed,method,x,global_pr,per_layer_pr,pre_accuracy,post_prune_accuracy,post_retrain_accuracy,collapsed\n",
    );
    for o in outcomes {
        let r = &o.record;
        let per_layer = r
            .per_layer_pr
            .iter()
            .map(|p| format!("{p:.6}"))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            s,
            "{},{},{:.8},{:.6},{},{:.6},{:.6},{:.6},{}",
            r.seed,
            r.method,
            r.x,
            r.global_pr,
            per_layer,
            r.pre_accuracy,
            r.post_prune_accuracy,
            r.post_retrain_accuracy,
            r.collapsed
        )
        .expect("string writes cannot fail");
    }
    s
}

fn timings_csv(outcomes: &[MethodOutcome]) -> String {
    let mut s = String::from("seed,method,x,wall_clock_ms\n");
    for o in outcomes {
        let r = &o.record;
        writeln!(s, "{},{},{:.8},{}", r.seed, r.method, r.x, r.wall_clock_ms)
            .expect("string writes cannot fail");
    }
    s
}

fn write_outputs(
    spec: &ExperimentSpec,
    dir: &Path,
    outcomes: &[MethodOutcome],
    csv_name: &str,
    with_masks: bool,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(csv_name), results_csv(outcomes))?;
    std::fs::write(dir.join("timings.csv"), timings_csv(outcomes))?;
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(spec)?)?;
    if with_masks {
        for o in outcomes {
            let name = format!("masks-{}-seed{}.json", o.record.method, o.record.seed);
            let file = MaskFile {
                model_id: spec.model.clone(),
                config: serde_json::to_value(&spec.mipp)?,
                masks: o.masks.clone(),
                per_layer_pr: o.record.per_layer_pr.clone(),
                global_pr: o.record.global_pr,
                collapse: detect_layer_collapse(&o.masks),
            };
            mipp::pipeline::write_masks_json(&file, &dir.join(name))?;
        }
    }
    Ok(())
}
