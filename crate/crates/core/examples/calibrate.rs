// Scratch harness for probe calibration runs. Not part of the test suite.

use mipp::mi::{estimate_mi, keep_confidence, null_loss, ProbeConfig, ProbePanel};
use mipp::tensor::Matrix;
use mipp::terc::{mi_order, terc_layer, LayerPairJob};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn gaussian(rng: &mut ChaCha8Rng) -> f32 {
    let u1: f32 = rng.gen_range(1e-7..1.0);
    let u2: f32 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f32::consts::PI * u2).cos()
}

fn gauss_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| gaussian(&mut rng)).collect()).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("all");

    if which == "identity" || which == "all" {
        // Identity map: Y = X, expect MSE << Var.
        for iters in [200, 500] {
            for lr in [0.01f32, 0.02, 0.05] {
                let x = gauss_matrix(2048, 8, 1);
                let mut cfg = ProbeConfig::desk_scale();
                cfg.sgd.learning_rate = lr;
                cfg.initial_iters = iters;
                let t = Instant::now();
                let est = estimate_mi(&x, &x, &cfg).unwrap();
                println!(
                    "identity iters={iters} lr={lr}: null={:.4} mean={:.4} mi={:.4} ratio={:.4} ({:?})",
                    est.null_loss,
                    est.mean,
                    est.mi_value(),
                    est.mi_value() / est.null_loss,
                    t.elapsed()
                );
            }
        }
    }

    if which == "noise" || which == "all" {
        // Independent noise: expect mi ≈ 0.
        let x = gauss_matrix(2048, 8, 2);
        let y = gauss_matrix(2048, 4, 3);
        let cfg = ProbeConfig::desk_scale();
        let est = estimate_mi(&x, &y, &cfg).unwrap();
        println!(
            "noise: null={:.4} mean={:.4} mi={:.4} ratio={:.4}",
            est.null_loss,
            est.mean,
            est.mi_value(),
            est.mi_value() / est.null_loss
        );
        println!("raw null_loss(y) = {:.4}", null_loss(&y));
    }

    if which == "order" || which == "all" {
        // mi_order: col 0 = noise, col 1 = generator of Y.
        for ordering_iters in [15, 25, 35] {
            let mut ok = 0;
            for seed in 0..10u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
                let n = 2048;
                let gen: Vec<f32> = (0..n).map(|_| gaussian(&mut rng)).collect();
                let noise: Vec<f32> = (0..n).map(|_| gaussian(&mut rng)).collect();
                let mut x = Matrix::zeros(n, 2);
                let mut y = Matrix::zeros(n, 2);
                for i in 0..n {
                    x.set(i, 0, noise[i]);
                    x.set(i, 1, gen[i]);
                    y.set(i, 0, (gen[i]).tanh());
                    y.set(i, 1, 0.5 * gen[i] - 1.0);
                }
                let mut cfg = ProbeConfig::desk_scale();
                cfg.ordering_iters = ordering_iters;
                let order = mi_order(&x, &y, &cfg, seed).unwrap();
                if order == vec![0, 1] {
                    ok += 1;
                }
            }
            println!("order iters={ordering_iters}: correct {ok}/10");
        }
    }

    if which == "terc" || which == "all" {
        // upstream {A, A, noise}, downstream f(A): expect one twin + noise dropped.
        for refit in [40, 80, 150] {
            let t = Instant::now();
            let mut n_ok = 0;
            for seed in 0..5u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
                let n = 2048;
                let mut x = Matrix::zeros(n, 3);
                let mut y = Matrix::zeros(n, 2);
                for i in 0..n {
                    let a = gaussian(&mut rng);
                    let noise = gaussian(&mut rng);
                    x.set(i, 0, a);
                    x.set(i, 1, a);
                    x.set(i, 2, noise);
                    y.set(i, 0, a.tanh());
                    y.set(i, 1, (2.0 * a).sin());
                }
                let mut cfg = ProbeConfig::desk_scale();
                cfg.refit_iters = refit;
                let job = LayerPairJob {
                    upstream: &x,
                    downstream: &y,
                    confidence: 0.9,
                    probe_cfg: cfg,
                    seed,
                };
                let res = terc_layer(&job).unwrap();
                let twins_kept = res.kept.iter().filter(|&&i| i < 2).count();
                let noise_kept = res.kept.contains(&2);
                if twins_kept == 1 && !noise_kept {
                    n_ok += 1;
                }
                println!(
                    "  terc refit={refit} seed={seed}: kept={:?} per-node conf={:?}",
                    res.kept,
                    res.per_node
                        .iter()
                        .map(|d| (d.confidence * 1000.0).round() / 1000.0)
                        .collect::<Vec<_>>()
                );
            }
            println!("terc refit={refit}: {n_ok}/5 exact ({:?})", t.elapsed());
        }
    }

    if which == "panel" || which == "all" {
        // Informative-drop deltas: single informative column for Y.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 2048;
        let mut x = Matrix::zeros(n, 4);
        let mut y = Matrix::zeros(n, 1);
        for i in 0..n {
            let a = gaussian(&mut rng);
            x.set(i, 0, a);
            for c in 1..4 {
                x.set(i, c, gaussian(&mut rng));
            }
            y.set(i, 0, a.tanh() + 0.1 * gaussian(&mut rng));
        }
        let cfg = ProbeConfig::desk_scale();
        let panel = ProbePanel::fit(&x, &y, &cfg, 7).unwrap();
        println!(
            "panel baselines={:?} null={:.4}",
            panel.baseline_losses(),
            panel.null_loss()
        );
        for drop in [vec![], vec![1], vec![0]] {
            let trial = panel.trial_drop(&drop, 99).unwrap();
            println!(
                "  drop {:?}: deltas={:?} conf={:.4}",
                drop,
                trial.deltas.repeats,
                keep_confidence(&trial.deltas)
            );
        }
    }

    if which == "timing" || which == "all" {
        for (hidden, iters) in [(64usize, 400usize), (256, 1500)] {
            let x = gauss_matrix(2048, 64, 5);
            let y = gauss_matrix(2048, 32, 6);
            let mut cfg = ProbeConfig::desk_scale();
            cfg.hidden_width = hidden;
            cfg.initial_iters = iters;
            let t = Instant::now();
            let panel = ProbePanel::fit(&x, &y, &cfg, 1).unwrap();
            let fit_time = t.elapsed();
            let t = Instant::now();
            let _ = panel.trial_drop(&[0], 0).unwrap();
            println!(
                "hidden={hidden} init={iters}: panel fit {fit_time:?}, one node trial {:?}",
                t.elapsed()
            );
        }
    }
}
