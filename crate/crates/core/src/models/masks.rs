//! Binary keep/drop masks and their application to model weights.
//!
//! Dropping a unit zeroes its incoming weight row and bias, and zeroes the
//! matching input slice of the next parameterized layer. The pruned model
//! therefore computes exactly what a structurally smaller network would,
//! and re-training never resurrects a dropped unit because the gradient is
//! suppressed at the same positions.

use super::toy::{Layer, Shape, ToyModel};
use crate::error::{MippError, Result};
use serde::{Deserialize, Serialize};

/// Keep (1) / drop (0) decisions for one layer's output units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneMask {
    /// Index into `ToyModel::layers`.
    pub layer_index: usize,
    pub keep: Vec<u8>,
}

impl PruneMask {
    pub fn all_ones(layer_index: usize, width: usize) -> Self {
        PruneMask {
            layer_index,
            keep: vec![1; width],
        }
    }

    pub fn from_kept(layer_index: usize, width: usize, kept: &[usize]) -> Self {
        let mut keep = vec![0u8; width];
        for &i in kept {
            keep[i] = 1;
        }
        PruneMask { layer_index, keep }
    }

    pub fn dropped_units(&self) -> Vec<usize> {
        self.keep
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| (k == 0).then_some(i))
            .collect()
    }

    pub fn kept_units(&self) -> Vec<usize> {
        self.keep
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| (k != 0).then_some(i))
            .collect()
    }

    pub fn pruned_fraction(&self) -> f64 {
        if self.keep.is_empty() {
            return 0.0;
        }
        self.dropped_units().len() as f64 / self.keep.len() as f64
    }
}

/// Layer collapse report: any layer whose mask keeps nothing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollapseReport {
    pub collapsed: bool,
    pub layers: Vec<usize>,
}

/// A collapse is a layer with every unit dropped, which no amount of
/// re-training can recover from.
pub fn detect_layer_collapse(masks: &[PruneMask]) -> CollapseReport {
    let layers: Vec<usize> = masks
        .iter()
        .filter(|m| !m.keep.is_empty() && m.keep.iter().all(|&k| k == 0))
        .map(|m| m.layer_index)
        .collect();
    CollapseReport {
        collapsed: !layers.is_empty(),
        layers,
    }
}

/// Parameter regions (flat indices into a layer's weight/bias buffers) that
/// belong to one dropped unit, including the fan-out into the next layer.
#[derive(Debug)]
pub(crate) enum ParamRegion {
    Weights(Vec<usize>),
    Bias(usize),
}

pub(crate) fn dropped_unit_regions(
    model: &ToyModel,
    layer_idx: usize,
    unit: usize,
) -> Result<Vec<(usize, ParamRegion)>> {
    let mut regions = Vec::new();
    match &model.layers[layer_idx] {
        Layer::Dense { w, .. } => {
            let (out, inn) = (w.rows(), w.cols());
            if unit >= out {
                return Err(MippError::Shape {
                    op: "dropped_unit_regions",
                    expected: format!("unit < {out}"),
                    got: format!("{unit}"),
                });
            }
            regions.push((
                layer_idx,
                ParamRegion::Weights((unit * inn..(unit + 1) * inn).collect()),
            ));
            regions.push((layer_idx, ParamRegion::Bias(unit)));
        }
        Layer::Conv2d { in_ch, kh, kw, out_ch, .. } => {
            if unit >= *out_ch {
                return Err(MippError::Shape {
                    op: "dropped_unit_regions",
                    expected: format!("filter < {out_ch}"),
                    got: format!("{unit}"),
                });
            }
            let span = in_ch * kh * kw;
            regions.push((
                layer_idx,
                ParamRegion::Weights((unit * span..(unit + 1) * span).collect()),
            ));
            regions.push((layer_idx, ParamRegion::Bias(unit)));
        }
        _ => {
            return Err(MippError::Config(format!(
                "layer {layer_idx} has no prunable units"
            )))
        }
    }

    if let Some(np) = model.next_param_layer(layer_idx) {
        let fan_out = match (&model.layers[layer_idx], &model.layers[np]) {
            (Layer::Dense { .. }, Layer::Dense { w, .. }) => {
                (0..w.rows()).map(|j| j * w.cols() + unit).collect()
            }
            (Layer::Conv2d { out_ch, .. }, Layer::Dense { w, .. }) => {
                // Channel-major flatten: each filter owns a contiguous block
                // of the dense input.
                let block = w.cols() / out_ch;
                let mut idx = Vec::with_capacity(w.rows() * block);
                for j in 0..w.rows() {
                    idx.extend(j * w.cols() + unit * block..j * w.cols() + (unit + 1) * block);
                }
                idx
            }
            (Layer::Conv2d { .. }, Layer::Conv2d { in_ch, kh, kw, out_ch, .. }) => {
                let span = kh * kw;
                let per_oc = in_ch * span;
                let mut idx = Vec::with_capacity(out_ch * span);
                for oc in 0..*out_ch {
                    idx.extend(oc * per_oc + unit * span..oc * per_oc + (unit + 1) * span);
                }
                idx
            }
            _ => {
                return Err(MippError::Config(format!(
                    "unsupported layer pair for masking: {layer_idx} -> {np}"
                )))
            }
        };
        regions.push((np, ParamRegion::Weights(fan_out)));
    }
    Ok(regions)
}

fn zero_region(layers: &mut [Layer], layer_idx: usize, region: &ParamRegion) {
    match (&mut layers[layer_idx], region) {
        (Layer::Dense { w, .. }, ParamRegion::Weights(idx)) => {
            let data = w.data_mut();
            for &i in idx {
                data[i] = 0.0;
            }
        }
        (Layer::Dense { b, .. }, ParamRegion::Bias(i)) => b[*i] = 0.0,
        (Layer::Conv2d { w, .. }, ParamRegion::Weights(idx)) => {
            for &i in idx {
                w[i] = 0.0;
            }
        }
        (Layer::Conv2d { b, .. }, ParamRegion::Bias(i)) => b[*i] = 0.0,
        _ => unreachable!("regions only point at parameterized layers"),
    }
}

/// Apply masks to a model, returning the masked copy.
///
/// Accepts one mask per prunable layer or any subset; unmasked layers keep
/// all units. Masks merge with any already attached (logical AND), and
/// application is idempotent.
pub fn apply_masks(model: &ToyModel, masks: &[PruneMask]) -> Result<ToyModel> {
    let mut out = model.clone();
    let prunable = model.prunable_layers();
    for mask in masks {
        if !prunable.contains(&mask.layer_index) {
            return Err(MippError::Config(format!(
                "layer {} is not prunable (output layers are never pruned)",
                mask.layer_index
            )));
        }
        let width = model.layers[mask.layer_index].unit_count();
        if mask.keep.len() != width {
            return Err(MippError::Shape {
                op: "apply_masks",
                expected: format!("mask of length {width} for layer {}", mask.layer_index),
                got: format!("length {}", mask.keep.len()),
            });
        }
        for unit in mask.dropped_units() {
            for (li, region) in dropped_unit_regions(model, mask.layer_index, unit)? {
                zero_region(&mut out.layers, li, &region);
            }
        }
        merge_mask(&mut out.masks, mask);
    }
    Ok(out)
}

fn merge_mask(existing: &mut Vec<PruneMask>, new: &PruneMask) {
    if let Some(cur) = existing
        .iter_mut()
        .find(|m| m.layer_index == new.layer_index)
    {
        for (a, &b) in cur.keep.iter_mut().zip(&new.keep) {
            *a &= b;
        }
    } else {
        existing.push(new.clone());
        existing.sort_by_key(|m| m.layer_index);
    }
}

/// All-ones masks for every prunable layer.
pub fn identity_masks(model: &ToyModel) -> Vec<PruneMask> {
    model
        .prunable_layers()
        .into_iter()
        .map(|li| PruneMask::all_ones(li, model.layers[li].unit_count()))
        .collect()
}

/// Total prunable units and the number dropped by `masks`.
pub fn mask_totals(masks: &[PruneMask]) -> (usize, usize) {
    let total = masks.iter().map(|m| m.keep.len()).sum();
    let dropped = masks.iter().map(|m| m.dropped_units().len()).sum();
    (total, dropped)
}

/// Check that a model's masked-out activations are exactly zero on a batch.
pub fn masked_columns_are_zero(
    model: &ToyModel,
    inputs: &crate::tensor::Matrix,
) -> Result<bool> {
    let outs = model.forward_all(inputs)?;
    let shapes = model.layer_shapes()?;
    for mask in &model.masks {
        let acts = &outs[mask.layer_index];
        match shapes[mask.layer_index] {
            Shape::Flat(_) => {
                for unit in mask.dropped_units() {
                    for r in 0..acts.rows() {
                        if acts.get(r, unit) != 0.0 {
                            return Ok(false);
                        }
                    }
                }
            }
            Shape::Image { c, h, w } => {
                debug_assert_eq!(c, mask.keep.len());
                for unit in mask.dropped_units() {
                    for r in 0..acts.rows() {
                        let row = acts.row(r);
                        if row[unit * h * w..(unit + 1) * h * w]
                            .iter()
                            .any(|&v| v != 0.0)
                        {
                            return Ok(false);
                        }
                    }
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::zoo;
    use crate::tensor::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_inputs(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_vec(
            rows,
            cols,
            (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn collapse_detection() {
        let ok = vec![PruneMask::all_ones(0, 4), PruneMask::all_ones(2, 3)];
        assert!(!detect_layer_collapse(&ok).collapsed);

        let mut bad = ok.clone();
        bad[1].keep = vec![0, 0, 0];
        let report = detect_layer_collapse(&bad);
        assert!(report.collapsed);
        assert_eq!(report.layers, vec![2]);

        let mixed = vec![
            PruneMask {
                layer_index: 0,
                keep: vec![1, 0, 0, 0],
            },
            PruneMask {
                layer_index: 2,
                keep: vec![0, 1, 0],
            },
        ];
        assert!(!detect_layer_collapse(&mixed).collapsed);
    }

    #[test]
    fn all_ones_masks_change_nothing() {
        let model = zoo::dense_from_dims(&[6, 5, 4, 3], 11);
        let masked = apply_masks(&model, &identity_masks(&model)).unwrap();
        let x = random_inputs(8, 6, 0);
        assert_eq!(
            model.logits(&x).unwrap().data(),
            masked.logits(&x).unwrap().data()
        );
    }

    #[test]
    fn mask_application_is_idempotent() {
        let model = zoo::dense_from_dims(&[6, 5, 4, 3], 11);
        let mask = PruneMask {
            layer_index: 1,
            keep: vec![1, 0, 1, 0],
        };
        let once = apply_masks(&model, &[mask.clone()]).unwrap();
        let twice = apply_masks(&once, &[mask]).unwrap();
        for (a, b) in once.layers.iter().zip(&twice.layers) {
            match (a, b) {
                (Layer::Dense { w: wa, b: ba, .. }, Layer::Dense { w: wb, b: bb, .. }) => {
                    assert_eq!(wa.data(), wb.data());
                    assert_eq!(ba, bb);
                }
                _ => {}
            }
        }
    }

    #[test]
    fn dropped_units_produce_zero_activations() {
        let model = zoo::dense_from_dims(&[6, 5, 4, 3], 11);
        let mask = PruneMask {
            layer_index: 0,
            keep: vec![1, 0, 1, 0, 1],
        };
        let masked = apply_masks(&model, &[mask]).unwrap();
        let x = random_inputs(16, 6, 3);
        assert!(masked_columns_are_zero(&masked, &x).unwrap());
    }

    #[test]
    fn mask_length_mismatch_is_error() {
        let model = zoo::dense_from_dims(&[6, 5, 4, 3], 11);
        let mask = PruneMask {
            layer_index: 0,
            keep: vec![1, 1],
        };
        assert!(apply_masks(&model, &[mask]).is_err());
    }

    #[test]
    fn output_layer_cannot_be_masked() {
        let model = zoo::dense_from_dims(&[6, 5, 3], 11);
        let mask = PruneMask {
            layer_index: 2,
            keep: vec![1, 1, 0],
        };
        assert!(apply_masks(&model, &[mask]).is_err());
    }
}
