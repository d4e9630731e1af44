//! Command-line front end: train, prune, re-train and sweep toy models.

mod datasets;
mod experiment;
mod recipes;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use experiment::{BaselineKind, ExperimentSpec};
use mipp::mi::ProbeConfig;
use mipp::models::{
    accuracy, apply_masks, capture_activations, load_model, save_model, train_classifier,
    ToyModel,
};
use mipp::pipeline::{
    feature_select, mipp as run_mipp, read_activation_dump, read_masks_json,
    write_activation_dump, write_masks_json, CollapseFn, MaskFile, MippConfig, ScheduleParams,
};
use mipp::tensor::{derive_seed, SgdConfig};
use std::path::PathBuf;

/// Exit code when `--fail-on-collapse` is set and a layer collapsed.
const EXIT_COLLAPSE: i32 = 2;

#[derive(Parser)]
#[command(name = "mipp", about = "Mutual-information preserving structured pruning", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ProbeFlags {
    /// Probe replicas per estimate (paper default 3; 5 also common).
    #[arg(long)]
    repeats: Option<usize>,
    /// Hidden width of the two probe layers.
    #[arg(long)]
    probe_hidden: Option<usize>,
    /// Initial probe fit iterations.
    #[arg(long)]
    probe_iters: Option<usize>,
    /// Refit iterations per node test.
    #[arg(long)]
    refit_iters: Option<usize>,
    /// Iterations for the single-node ordering probes.
    #[arg(long)]
    ordering_iters: Option<usize>,
    /// Probe learning rate.
    #[arg(long)]
    probe_lr: Option<f32>,
    /// Start from the small fast preset instead of the full-size probes.
    #[arg(long)]
    desk_probes: bool,
}

impl ProbeFlags {
    fn to_config(&self) -> ProbeConfig {
        let mut cfg = if self.desk_probes {
            ProbeConfig::desk_scale()
        } else {
            ProbeConfig::default()
        };
        if let Some(v) = self.repeats {
            cfg.repeats = v;
        }
        if let Some(v) = self.probe_hidden {
            cfg.hidden_width = v;
        }
        if let Some(v) = self.probe_iters {
            cfg.initial_iters = v;
        }
        if let Some(v) = self.refit_iters {
            cfg.refit_iters = v;
        }
        if let Some(v) = self.ordering_iters {
            cfg.ordering_iters = v;
        }
        if let Some(v) = self.probe_lr {
            cfg.sgd.learning_rate = v;
        }
        cfg
    }
}

#[derive(Args, Debug)]
struct ModelSource {
    /// Model id: dense-mnist | dense-digits | conv-mnist | dense:<h1-h2-...>.
    #[arg(long)]
    model: Option<String>,
    /// Load the model from a checkpoint instead of building it.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

impl ModelSource {
    fn resolve(&self, dataset: &str, seed: u64) -> Result<ToyModel> {
        if let Some(path) = &self.checkpoint {
            return Ok(load_model(path)?);
        }
        let Some(id) = &self.model else {
            bail!("pass either --model or --checkpoint");
        };
        let data = datasets::load_dataset(dataset, seed)?;
        recipes::build_model(
            id,
            data.input_shape,
            data.train.n_classes,
            derive_seed(seed, &[0x6d6f6465]),
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write a checkpoint.
    Train {
        #[arg(long)]
        model: String,
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-2)]
        lr: f32,
        #[arg(long, default_value_t = 100)]
        batch: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Capture activations and compute prune masks.
    Prune {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long)]
        dataset: Option<String>,
        /// Prune from a binary activation dump instead of a model.
        #[arg(long)]
        activations: Option<PathBuf>,
        /// Keep confidence x in [0.5, 1).
        #[arg(long, default_value_t = 0.9)]
        x: f64,
        #[arg(long, default_value = "l1")]
        collapse_fn: String,
        #[arg(long, default_value_t = 2048)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        probe: ProbeFlags,
        #[arg(long)]
        fail_on_collapse: bool,
        /// Output masks JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply masks to a checkpoint and re-train.
    Retrain {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        masks: PathBuf,
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-2)]
        lr: f32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment: prune at a fixed x, with baselines, and re-train.
    Run {
        #[arg(long)]
        model: String,
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 0.9)]
        x: f64,
        /// Comma-separated seed list.
        #[arg(long, default_value = "0", value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Baselines to run at the matched PR (random, l1).
        #[arg(long, value_delimiter = ',')]
        baselines: Vec<String>,
        #[arg(long)]
        pretrained: bool,
        /// Duplicate hidden nodes into exact twins before pruning.
        #[arg(long)]
        duplicate_nodes: bool,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 20)]
        retrain_epochs: usize,
        #[arg(long, default_value_t = 2048)]
        samples: usize,
        #[arg(long, default_value = "l1")]
        collapse_fn: String,
        #[command(flatten)]
        probe: ProbeFlags,
        #[arg(long)]
        fail_on_collapse: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the experiment across the whole confidence schedule.
    Sweep {
        #[arg(long)]
        model: String,
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 20)]
        schedule_steps: usize,
        #[arg(long, default_value_t = 0.5)]
        x0: f64,
        #[arg(long, default_value_t = 0.5)]
        rate: f64,
        #[arg(long, default_value = "0", value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        baselines: Vec<String>,
        #[arg(long)]
        pretrained: bool,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        retrain_epochs: usize,
        #[arg(long, default_value_t = 2048)]
        samples: usize,
        #[arg(long, default_value = "l1")]
        collapse_fn: String,
        #[command(flatten)]
        probe: ProbeFlags,
        #[arg(long)]
        fail_on_collapse: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decide which raw input features transfer entropy to the pruned
    /// first layer.
    FeatureSelect {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 0.9)]
        x: f64,
        #[arg(long, default_value_t = 2048)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "l1")]
        collapse_fn: String,
        #[command(flatten)]
        probe: ProbeFlags,
        /// Output JSON path for the kept feature indices.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a binary activation dump for external tooling.
    ExportActivations {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 2048)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a masks JSON file to a checkpoint.
    ImportMasks {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        masks: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_baselines(raw: &[String]) -> Result<Vec<BaselineKind>> {
    raw.iter().map(|s| s.parse()).collect()
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train {
            model,
            dataset,
            epochs,
            seed,
            lr,
            batch,
            out,
        } => {
            let data = datasets::load_dataset(&dataset, seed)?;
            let mut m = recipes::build_model(
                &model,
                data.input_shape,
                data.train.n_classes,
                derive_seed(seed, &[0x6d6f6465]),
            )?;
            let cfg = SgdConfig {
                learning_rate: lr,
                batch_size: batch,
                seed: derive_seed(seed, &[0x74726169]),
                ..SgdConfig::default()
            };
            let trace = train_classifier(&mut m, &data.train, &data.test, epochs, &cfg)?;
            save_model(&m, &out)?;
            println!(
                "trained {model} on {dataset}: train acc {:.4}, test acc {:.4} -> {}",
                trace.train.last().copied().unwrap_or(0.0),
                trace.final_test(),
                out.display()
            );
        }

        Command::Prune {
            source,
            dataset,
            activations,
            x,
            collapse_fn,
            samples,
            seed,
            probe,
            fail_on_collapse,
            out,
        } => {
            let cfg = MippConfig {
                confidence: x,
                collapse: collapse_fn.parse::<CollapseFn>()?,
                probe_cfg: probe.to_config(),
                capture_samples: samples,
                seed: derive_seed(seed, &[0x7072756e]),
                schedule: ScheduleParams::default(),
            };
            let (capture, model_id) = if let Some(path) = &activations {
                (read_activation_dump(path)?, "external".to_string())
            } else {
                let Some(dataset) = &dataset else {
                    bail!("--dataset is required unless pruning from --activations");
                };
                let model = source.resolve(dataset, seed)?;
                let data = datasets::load_dataset(dataset, seed)?;
                let n = samples.min(data.train.len());
                (
                    capture_activations(&model, &data.train.x, n)?,
                    source
                        .model
                        .clone()
                        .unwrap_or_else(|| "checkpoint".to_string()),
                )
            };
            let report = run_mipp(&capture, &cfg)?;
            let file = MaskFile::from_report(&model_id, serde_json::to_value(&cfg)?, &report);
            write_masks_json(&file, &out)?;
            println!(
                "pruned {model_id}: global PR {:.4}, per-layer {:?} -> {}",
                report.global_pr,
                report
                    .per_layer_pr
                    .iter()
                    .map(|p| (p * 1000.0).round() / 1000.0)
                    .collect::<Vec<_>>(),
                out.display()
            );
            if report.collapse.collapsed {
                eprintln!("layer collapse in layers {:?}", report.collapse.layers);
                if fail_on_collapse {
                    std::process::exit(EXIT_COLLAPSE);
                }
            }
        }

        Command::Retrain {
            checkpoint,
            masks,
            dataset,
            epochs,
            seed,
            lr,
            out,
        } => {
            let model = load_model(&checkpoint)?;
            let mask_file = read_masks_json(&masks)?;
            let data = datasets::load_dataset(&dataset, seed)?;
            let mut masked = apply_masks(&model, &mask_file.masks)?;
            let before = accuracy(&masked, &data.test)?;
            let cfg = SgdConfig {
                learning_rate: lr,
                seed: derive_seed(seed, &[0x72657472]),
                ..SgdConfig::default()
            };
            let trace = train_classifier(&mut masked, &data.train, &data.test, epochs, &cfg)?;
            save_model(&masked, &out)?;
            println!(
                "retrained: test acc {before:.4} -> {:.4} ({epochs} epochs) -> {}",
                trace.final_test(),
                out.display()
            );
        }

        Command::Run {
            model,
            dataset,
            x,
            seeds,
            baselines,
            pretrained,
            duplicate_nodes,
            epochs,
            retrain_epochs,
            samples,
            collapse_fn,
            probe,
            fail_on_collapse,
            out,
        } => {
            let spec = ExperimentSpec {
                model,
                dataset,
                pretrained,
                duplicate_nodes,
                mipp: MippConfig {
                    confidence: x,
                    collapse: collapse_fn.parse::<CollapseFn>()?,
                    probe_cfg: probe.to_config(),
                    capture_samples: samples,
                    ..MippConfig::default()
                },
                baselines: parse_baselines(&baselines)?,
                train_epochs: epochs,
                retrain_epochs,
                train_sgd: SgdConfig::default(),
                seeds,
                out_dir: Some(out.clone()),
            };
            let outcomes = experiment::run_experiment(&spec)?;
            for o in &outcomes {
                let r = &o.record;
                println!(
                    "seed {} {:>6}: pr {:.3} acc {:.4} -> {:.4} -> {:.4}{}",
                    r.seed,
                    r.method,
                    r.global_pr,
                    r.pre_accuracy,
                    r.post_prune_accuracy,
                    r.post_retrain_accuracy,
                    if r.collapsed { "  [collapsed]" } else { "" }
                );
            }
            println!("wrote {}", out.display());
            if fail_on_collapse && outcomes.iter().any(|o| o.record.collapsed) {
                std::process::exit(EXIT_COLLAPSE);
            }
        }

        Command::Sweep {
            model,
            dataset,
            schedule_steps,
            x0,
            rate,
            seeds,
            baselines,
            pretrained,
            epochs,
            retrain_epochs,
            samples,
            collapse_fn,
            probe,
            fail_on_collapse,
            out,
        } => {
            let spec = ExperimentSpec {
                model,
                dataset,
                pretrained,
                duplicate_nodes: false,
                mipp: MippConfig {
                    confidence: x0,
                    schedule: ScheduleParams {
                        x0,
                        r: rate,
                        steps: schedule_steps,
                    },
                    collapse: collapse_fn.parse::<CollapseFn>()?,
                    probe_cfg: probe.to_config(),
                    capture_samples: samples,
                    ..MippConfig::default()
                },
                baselines: parse_baselines(&baselines)?,
                train_epochs: epochs,
                retrain_epochs,
                train_sgd: SgdConfig::default(),
                seeds,
                out_dir: Some(out.clone()),
            };
            let outcomes = experiment::sweep_schedule(&spec)?;
            for o in &outcomes {
                let r = &o.record;
                println!(
                    "seed {} x={:.6} {:>6}: pr {:.3} retrain acc {:.4}{}",
                    r.seed,
                    r.x,
                    r.method,
                    r.global_pr,
                    r.post_retrain_accuracy,
                    if r.collapsed { "  [collapsed]" } else { "" }
                );
            }
            println!("wrote {}", out.display());
            if fail_on_collapse && outcomes.iter().any(|o| o.record.collapsed) {
                std::process::exit(EXIT_COLLAPSE);
            }
        }

        Command::FeatureSelect {
            source,
            dataset,
            x,
            samples,
            seed,
            collapse_fn,
            probe,
            out,
        } => {
            let model = source.resolve(&dataset, seed)?;
            let data = datasets::load_dataset(&dataset, seed)?;
            let n = samples.min(data.train.len());
            let capture = capture_activations(&model, &data.train.x, n)?;
            let cfg = MippConfig {
                confidence: x,
                collapse: collapse_fn.parse::<CollapseFn>()?,
                probe_cfg: probe.to_config(),
                capture_samples: n,
                seed: derive_seed(seed, &[0x66736c63]),
                schedule: ScheduleParams::default(),
            };
            let report = run_mipp(&capture, &cfg)?;
            let selected = feature_select(&capture, &report.masks, &cfg)?;
            let payload = serde_json::json!({
                "dataset": dataset,
                "x": x,
                "kept_features": selected.kept,
                "dropped_features": selected.dropped,
                "masks": report.masks,
            });
            std::fs::write(&out, serde_json::to_string_pretty(&payload)?)?;
            println!(
                "kept {} of {} input features -> {}",
                selected.kept.len(),
                selected.kept.len() + selected.dropped.len(),
                out.display()
            );
        }

        Command::ExportActivations {
            source,
            dataset,
            samples,
            seed,
            out,
        } => {
            let model = source.resolve(&dataset, seed)?;
            let data = datasets::load_dataset(&dataset, seed)?;
            let n = samples.min(data.train.len());
            let capture = capture_activations(&model, &data.train.x, n)?;
            write_activation_dump(&capture, &out)?;
            println!(
                "exported {} samples x {} layers -> {}",
                capture.sample_count,
                capture.layers.len(),
                out.display()
            );
        }

        Command::ImportMasks {
            checkpoint,
            masks,
            out,
        } => {
            let model = load_model(&checkpoint)?;
            let mask_file = read_masks_json(&masks)?;
            let masked = apply_masks(&model, &mask_file.masks)?;
            save_model(&masked, &out)?;
            let report = mipp::models::detect_layer_collapse(&mask_file.masks);
            println!(
                "applied {} masks (global PR {:.4}){} -> {}",
                mask_file.masks.len(),
                mask_file.global_pr,
                if report.collapsed { ", collapsed!" } else { "" },
                out.display()
            );
        }
    }
    Ok(())
}
