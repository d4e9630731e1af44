//! Jointly sampled activation capture for every prunable layer.

use super::toy::{Shape, ToyModel};
use crate::error::{MippError, Result};
use crate::tensor::Matrix;

/// Activations of one captured layer.
#[derive(Debug, Clone)]
pub enum LayerActs {
    /// samples x nodes.
    Dense(Matrix),
    /// samples x (filters*h*w), channel-major rows; collapsed later.
    Conv {
        data: Matrix,
        filters: usize,
        h: usize,
        w: usize,
    },
}

impl LayerActs {
    pub fn sample_count(&self) -> usize {
        match self {
            LayerActs::Dense(m) => m.rows(),
            LayerActs::Conv { data, .. } => data.rows(),
        }
    }

    /// Number of prunable units (nodes or filters).
    pub fn unit_count(&self) -> usize {
        match self {
            LayerActs::Dense(m) => m.cols(),
            LayerActs::Conv { filters, .. } => *filters,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CapturedLayer {
    /// Index into `ToyModel::layers`.
    pub layer_index: usize,
    pub acts: LayerActs,
}

/// Per-layer activations captured from one forward pass over a shared
/// sample batch. `layers` holds every parameterized layer in network order;
/// the last entry is the (never pruned) output layer. The raw inputs ride
/// along for feature selection.
#[derive(Debug, Clone)]
pub struct ActivationCapture {
    pub inputs: Matrix,
    pub layers: Vec<CapturedLayer>,
    pub sample_count: usize,
}

impl ActivationCapture {
    /// Captured prunable layers, in network order.
    pub fn prunable(&self) -> &[CapturedLayer] {
        &self.layers[..self.layers.len() - 1]
    }

    pub fn output(&self) -> &CapturedLayer {
        self.layers.last().expect("capture includes the output layer")
    }
}

/// Run `model` on the first `n_samples` rows of `inputs` and record the
/// post-activation values of every parameterized layer plus the inputs.
pub fn capture_activations(
    model: &ToyModel,
    inputs: &Matrix,
    n_samples: usize,
) -> Result<ActivationCapture> {
    if n_samples < 2 {
        return Err(MippError::InsufficientSamples {
            op: "capture_activations",
            needed: 2,
            got: n_samples,
        });
    }
    if n_samples > inputs.rows() {
        return Err(MippError::InsufficientSamples {
            op: "capture_activations",
            needed: n_samples,
            got: inputs.rows(),
        });
    }
    let batch = inputs.gather_rows(&(0..n_samples).collect::<Vec<_>>());
    let outs = model.forward_all(&batch)?;
    let shapes = model.layer_shapes()?;

    let mut captured = Vec::new();
    let output_layer = model
        .output_layer()
        .ok_or_else(|| MippError::Config("model has no parameterized layers".into()))?;
    for li in model.prunable_layers().into_iter().chain([output_layer]) {
        let acts = match shapes[li] {
            Shape::Flat(_) => LayerActs::Dense(outs[li].clone()),
            Shape::Image { c, h, w } => LayerActs::Conv {
                data: outs[li].clone(),
                filters: c,
                h,
                w,
            },
        };
        captured.push(CapturedLayer {
            layer_index: li,
            acts,
        });
    }
    Ok(ActivationCapture {
        inputs: batch,
        layers: captured,
        sample_count: n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::masks::{apply_masks, PruneMask};
    use crate::models::zoo;
    use crate::tensor::{forward_dense, Matrix};
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
    fn single_layer_capture_matches_direct_forward() {
        let model = zoo::dense_from_dims(&[4, 3, 2], 5);
        let x = random_inputs(8, 4, 1);
        let cap = capture_activations(&model, &x, 8).unwrap();
        let crate::models::toy::Layer::Dense { w, b, act } = &model.layers[0] else {
            panic!()
        };
        let direct = forward_dense(w, b, &x, *act).unwrap();
        let LayerActs::Dense(first) = &cap.layers[0].acts else {
            panic!()
        };
        assert_eq!(first.data(), direct.data());
        assert_eq!(cap.layers.len(), 2);
    }

    #[test]
    fn masked_units_capture_zero_columns() {
        let model = zoo::dense_from_dims(&[6, 5, 4, 3], 9);
        let mask = PruneMask {
            layer_index: 1,
            keep: vec![1, 0, 1, 1],
        };
        let masked = apply_masks(&model, &[mask]).unwrap();
        let x = random_inputs(12, 6, 2);
        let cap = capture_activations(&masked, &x, 12).unwrap();
        let LayerActs::Dense(acts) = &cap.layers[1].acts else {
            panic!()
        };
        for r in 0..acts.rows() {
            assert_eq!(acts.get(r, 1), 0.0);
        }
    }

    #[test]
    fn capture_is_deterministic() {
        let model = zoo::dense_from_dims(&[4, 3, 2], 5);
        let x = random_inputs(8, 4, 1);
        let a = capture_activations(&model, &x, 8).unwrap();
        let b = capture_activations(&model, &x, 8).unwrap();
        let (LayerActs::Dense(ma), LayerActs::Dense(mb)) = (&a.layers[0].acts, &b.layers[0].acts)
        else {
            panic!()
        };
        assert_eq!(ma.data(), mb.data());
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let model = zoo::dense_from_dims(&[4, 3, 2], 5);
        let x = random_inputs(8, 4, 1);
        assert!(capture_activations(&model, &x, 1).is_err());
        assert!(capture_activations(&model, &x, 9).is_err());
    }
}
