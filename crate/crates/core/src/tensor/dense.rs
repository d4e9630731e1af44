//! Dense layer forward/backward passes.

use super::matrix::{axpy, dot, Matrix};
use crate::error::{MippError, Result};
use rand::Rng;

/// Activation applied element-wise after the affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f32) -> f32 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the post-activation value.
    #[inline]
    pub fn grad_from_output(self, y: f32) -> f32 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One dense layer: `y = act(x W^T + b)` with `W` stored as `out x in`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub w: Matrix,
    pub b: Vec<f32>,
    pub act: Activation,
}

impl DenseLayer {
    /// Uniform init in `[-sqrt(1/fan_in), +sqrt(1/fan_in)]`, biases included.
    pub fn init<R: Rng>(out_dim: usize, in_dim: usize, act: Activation, rng: &mut R) -> Self {
        let scale = (1.0 / in_dim.max(1) as f32).sqrt();
        DenseLayer {
            w: Matrix::random_uniform(out_dim, in_dim, scale, rng),
            b: (0..out_dim).map(|_| rng.gen_range(-scale..=scale)).collect(),
            act,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }
}

/// Batched dense forward: `act(x W^T + b)` per sample row.
pub fn forward_dense(w: &Matrix, b: &[f32], x: &Matrix, act: Activation) -> Result<Matrix> {
    if x.cols() != w.cols() {
        return Err(MippError::Shape {
            op: "forward_dense",
            expected: format!("input with {} columns", w.cols()),
            got: format!("{} columns", x.cols()),
        });
    }
    if b.len() != w.rows() {
        return Err(MippError::Shape {
            op: "forward_dense",
            expected: format!("bias of length {}", w.rows()),
            got: format!("length {}", b.len()),
        });
    }
    let mut out = Matrix::zeros(x.rows(), w.rows());
    for r in 0..x.rows() {
        let xr = x.row(r);
        let or = out.row_mut(r);
        for (j, o) in or.iter_mut().enumerate() {
            *o = act.apply(dot(xr, w.row(j)) + b[j]);
        }
    }
    Ok(out)
}

/// Gradients of a dense layer for one batch.
#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub dw: Matrix,
    pub db: Vec<f32>,
}

impl DenseGrads {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        DenseGrads {
            dw: Matrix::zeros(layer.w.rows(), layer.w.cols()),
            db: vec![0.0; layer.b.len()],
        }
    }
}

/// Backward through `y = act(x W^T + b)`.
///
/// `d_out` is dL/dy; `y` the cached post-activation; `x` the cached input.
/// Returns dL/dx and accumulates parameter gradients into `grads`.
pub fn backward_dense(
    w: &Matrix,
    act: Activation,
    x: &Matrix,
    y: &Matrix,
    d_out: &Matrix,
    grads: &mut DenseGrads,
) -> Matrix {
    let batch = x.rows();
    let mut dx = Matrix::zeros(batch, w.cols());
    // dz = d_out ⊙ act'(z), realized row by row to avoid a temporary.
    let mut dz_row = vec![0.0f32; w.rows()];
    for r in 0..batch {
        let yr = y.row(r);
        let dr = d_out.row(r);
        for ((dz, &g), &yv) in dz_row.iter_mut().zip(dr).zip(yr) {
            *dz = g * act.grad_from_output(yv);
        }
        let xr = x.row(r);
        for (j, &dzj) in dz_row.iter().enumerate() {
            if dzj != 0.0 {
                axpy(grads.dw.row_mut(j), dzj, xr);
                grads.db[j] += dzj;
                axpy(dx.row_mut(r), dzj, w.row(j));
            }
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights_relu_clamps() {
        let w = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let x = Matrix::from_rows(&[vec![2.0, -3.0]]).unwrap();
        let y = forward_dense(&w, &[0.0, 0.0], &x, Activation::Relu).unwrap();
        assert_eq!(y.row(0), &[2.0, 0.0]);
    }

    #[test]
    fn sum_plus_bias() {
        let w = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let y = forward_dense(&w, &[1.0], &x, Activation::Identity).unwrap();
        assert_eq!(y.row(0), &[3.0]);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let w = Matrix::zeros(2, 3);
        let x = Matrix::zeros(1, 2);
        assert!(forward_dense(&w, &[0.0, 0.0], &x, Activation::Identity).is_err());
        let x = Matrix::zeros(1, 3);
        assert!(forward_dense(&w, &[0.0], &x, Activation::Identity).is_err());
    }
}
