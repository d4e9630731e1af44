//! Magnitude and random baselines at a target global pruning ratio.

use crate::error::{MippError, Result};
use crate::models::{Layer, PruneMask, ToyModel};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit_scores_l1(model: &ToyModel) -> Vec<(usize, usize, f64)> {
    let mut scores = Vec::new();
    for li in model.prunable_layers() {
        match &model.layers[li] {
            Layer::Dense { w, .. } => {
                for unit in 0..w.rows() {
                    let s: f64 = w.row(unit).iter().map(|v| v.abs() as f64).sum();
                    scores.push((li, unit, s));
                }
            }
            Layer::Conv2d {
                w,
                out_ch,
                in_ch,
                kh,
                kw,
                ..
            } => {
                let span = in_ch * kh * kw;
                for unit in 0..*out_ch {
                    let s: f64 = w[unit * span..(unit + 1) * span]
                        .iter()
                        .map(|v| v.abs() as f64)
                        .sum();
                    scores.push((li, unit, s));
                }
            }
            _ => {}
        }
    }
    scores
}

fn masks_dropping(model: &ToyModel, drops: &[(usize, usize)]) -> Vec<PruneMask> {
    let mut masks: Vec<PruneMask> = model
        .prunable_layers()
        .into_iter()
        .map(|li| PruneMask::all_ones(li, model.layers[li].unit_count()))
        .collect();
    for &(li, unit) in drops {
        if let Some(mask) = masks.iter_mut().find(|m| m.layer_index == li) {
            mask.keep[unit] = 0;
        }
    }
    masks
}

fn check_pr(global_pr: f64) -> Result<()> {
    if !(0.0..1.0).contains(&global_pr) {
        return Err(MippError::Config(format!(
            "global_pr must be in [0, 1), got {global_pr}"
        )));
    }
    Ok(())
}

/// Rank every prunable unit network-wide by the L1 norm of its incoming
/// weights and drop the weakest `global_pr` fraction. Ties break by
/// (layer, unit) so the result is deterministic.
pub fn baseline_l1_magnitude(model: &ToyModel, global_pr: f64) -> Result<Vec<PruneMask>> {
    check_pr(global_pr)?;
    let mut scores = unit_scores_l1(model);
    scores.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let n_drop = (global_pr * scores.len() as f64).floor() as usize;
    let drops: Vec<(usize, usize)> = scores[..n_drop].iter().map(|&(l, u, _)| (l, u)).collect();
    Ok(masks_dropping(model, &drops))
}

/// Drop a uniformly random `global_pr` fraction of all prunable units.
pub fn baseline_random(model: &ToyModel, global_pr: f64, seed: u64) -> Result<Vec<PruneMask>> {
    check_pr(global_pr)?;
    let mut units: Vec<(usize, usize)> = model
        .prunable_layers()
        .into_iter()
        .flat_map(|li| (0..model.layers[li].unit_count()).map(move |u| (li, u)))
        .collect();
    let n_drop = (global_pr * units.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    units.shuffle(&mut rng);
    Ok(masks_dropping(model, &units[..n_drop]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{mask_totals, zoo, Layer};

    #[test]
    fn zero_pr_keeps_everything() {
        let model = zoo::dense_from_dims(&[6, 5, 4, 3], 1);
        for masks in [
            baseline_l1_magnitude(&model, 0.0).unwrap(),
            baseline_random(&model, 0.0, 7).unwrap(),
        ] {
            let (_, dropped) = mask_totals(&masks);
            assert_eq!(dropped, 0);
        }
    }

    #[test]
    fn zero_weight_node_is_dropped_first() {
        let mut model = zoo::dense_from_dims(&[6, 5, 4, 3], 1);
        if let Layer::Dense { w, .. } = &mut model.layers[1] {
            for v in w.row_mut(2) {
                *v = 0.0;
            }
        }
        let masks = baseline_l1_magnitude(&model, 0.12).unwrap();
        // 9 prunable units, floor(0.12*9) = 1 drop: the zeroed node.
        let (_, dropped) = mask_totals(&masks);
        assert_eq!(dropped, 1);
        let m1 = masks.iter().find(|m| m.layer_index == 1).unwrap();
        assert_eq!(m1.keep[2], 0);
    }

    #[test]
    fn uniform_magnitudes_drop_by_index_order() {
        let mut model = zoo::dense_from_dims(&[4, 3, 3, 2], 1);
        for li in model.prunable_layers() {
            if let Layer::Dense { w, b, .. } = &mut model.layers[li] {
                for v in w.data_mut() {
                    *v = 0.5;
                }
                for v in b.iter_mut() {
                    *v = 0.0;
                }
            }
        }
        // First hidden layer has fan-in 4 (score 2.0), second fan-in 3
        // (score 1.5): the second layer's nodes rank lower and drop first.
        let masks = baseline_l1_magnitude(&model, 0.5).unwrap();
        let (total, dropped) = mask_totals(&masks);
        assert_eq!(total, 6);
        assert_eq!(dropped, 3);
        let m1 = masks.iter().find(|m| m.layer_index == 1).unwrap();
        assert_eq!(m1.keep, vec![0, 0, 0]);
    }

    #[test]
    fn random_baseline_is_seeded_and_counts_exactly() {
        let model = zoo::dense_from_dims(&[10, 60, 40, 5], 1);
        let a = baseline_random(&model, 0.5, 42).unwrap();
        let b = baseline_random(&model, 0.5, 42).unwrap();
        assert_eq!(a, b);
        let (total, dropped) = mask_totals(&a);
        assert_eq!(total, 100);
        assert_eq!(dropped, 50);
        let c = baseline_random(&model, 0.5, 43).unwrap();
        assert_ne!(a, c);
    }
}
