//! Finite-difference validation of the reverse-mode gradients.

use super::dense::Activation;
use super::loss::mse_grad;
use super::matrix::Matrix;
use super::net::DenseNet;
use crate::error::Result;

const FD_STEP: f64 = 1e-3;

/// Compare reverse-mode gradients against central finite differences of an
/// f64 re-evaluation of the same MSE objective. Returns the maximum relative
/// error over all parameters.
///
/// Intended for small nets; cost is two forward passes per parameter.
pub fn grad_check(net: &DenseNet, x: &Matrix, y: &Matrix) -> Result<f32> {
    let outs = net.forward_cached(x)?;
    let d_out = mse_grad(outs.last().expect("net has layers"), y);
    let grads = net.backward(x, &outs, d_out);

    let mut mirror = Mirror::new(net, x, y);
    let mut max_rel = 0f32;
    for (li, layer) in net.layers.iter().enumerate() {
        for wi in 0..layer.w.data().len() {
            let analytic = grads.layers[li].dw.data()[wi] as f64;
            let fd = mirror.fd_weight(li, wi);
            max_rel = max_rel.max(rel_err(analytic, fd));
        }
        for bi in 0..layer.b.len() {
            let analytic = grads.layers[li].db[bi] as f64;
            let fd = mirror.fd_bias(li, bi);
            max_rel = max_rel.max(rel_err(analytic, fd));
        }
    }
    Ok(max_rel)
}

fn rel_err(a: f64, b: f64) -> f32 {
    ((a - b).abs() / a.abs().max(b.abs()).max(1.0)) as f32
}

/// f64 copy of the net and data for noise-free finite differences.
struct Mirror {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    shapes: Vec<(usize, usize)>,
    acts: Vec<Activation>,
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

impl Mirror {
    fn new(net: &DenseNet, x: &Matrix, y: &Matrix) -> Self {
        Mirror {
            weights: net
                .layers
                .iter()
                .map(|l| l.w.data().iter().map(|&v| v as f64).collect())
                .collect(),
            biases: net
                .layers
                .iter()
                .map(|l| l.b.iter().map(|&v| v as f64).collect())
                .collect(),
            shapes: net.layers.iter().map(|l| (l.w.rows(), l.w.cols())).collect(),
            acts: net.layers.iter().map(|l| l.act).collect(),
            x: rows64(x),
            y: rows64(y),
        }
    }

    fn fd_weight(&mut self, layer: usize, idx: usize) -> f64 {
        let orig = self.weights[layer][idx];
        self.weights[layer][idx] = orig + FD_STEP;
        let plus = self.loss();
        self.weights[layer][idx] = orig - FD_STEP;
        let minus = self.loss();
        self.weights[layer][idx] = orig;
        (plus - minus) / (2.0 * FD_STEP)
    }

    fn fd_bias(&mut self, layer: usize, idx: usize) -> f64 {
        let orig = self.biases[layer][idx];
        self.biases[layer][idx] = orig + FD_STEP;
        let plus = self.loss();
        self.biases[layer][idx] = orig - FD_STEP;
        let minus = self.loss();
        self.biases[layer][idx] = orig;
        (plus - minus) / (2.0 * FD_STEP)
    }

    fn loss(&self) -> f64 {
        let mut acc = 0f64;
        let mut count = 0usize;
        for (xr, yr) in self.x.iter().zip(&self.y) {
            let mut cur = xr.clone();
            for li in 0..self.shapes.len() {
                let (out_dim, in_dim) = self.shapes[li];
                let mut next = vec![0f64; out_dim];
                for j in 0..out_dim {
                    let row = &self.weights[li][j * in_dim..(j + 1) * in_dim];
                    let mut z = self.biases[li][j];
                    for (w, v) in row.iter().zip(&cur) {
                        z += w * v;
                    }
                    next[j] = match self.acts[li] {
                        Activation::Relu => z.max(0.0),
                        Activation::Identity => z,
                    };
                }
                cur = next;
            }
            for (p, t) in cur.iter().zip(yr) {
                let d = p - t;
                acc += d * d;
            }
            count += cur.len();
        }
        acc / count.max(1) as f64
    }
}

fn rows64(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|&v| v as f64).collect())
        .collect()
}
