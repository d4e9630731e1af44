//! A plain feed-forward stack of dense layers.

use super::dense::{backward_dense, forward_dense, Activation, DenseGrads, DenseLayer};
use super::matrix::Matrix;
use crate::error::Result;
use rand::Rng;

/// Multi-layer perceptron over [`DenseLayer`]s.
#[derive(Debug, Clone)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
}

impl DenseNet {
    /// Build from a dimension chain `[in, h1, ..., out]`; hidden layers get
    /// `hidden_act`, the last layer `out_act`.
    pub fn init<R: Rng>(
        dims: &[usize],
        hidden_act: Activation,
        out_act: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, pair)| {
                let act = if i + 2 == dims.len() { out_act } else { hidden_act };
                DenseLayer::init(pair[1], pair[0], act, rng)
            })
            .collect();
        DenseNet { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, DenseLayer::in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::out_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.w.rows() * l.w.cols() + l.b.len())
            .sum()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut cur = None;
        for layer in &self.layers {
            let input = cur.as_ref().unwrap_or(x);
            cur = Some(forward_dense(&layer.w, &layer.b, input, layer.act)?);
        }
        Ok(cur.unwrap_or_else(|| x.clone()))
    }

    /// Forward keeping every layer output for the backward pass.
    pub fn forward_cached(&self, x: &Matrix) -> Result<Vec<Matrix>> {
        let mut outs = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = outs.last().unwrap_or(x);
            outs.push(forward_dense(&layer.w, &layer.b, input, layer.act)?);
        }
        Ok(outs)
    }

    /// Backward from dL/d(output); `outs` comes from [`Self::forward_cached`].
    pub fn backward(&self, x: &Matrix, outs: &[Matrix], d_out: Matrix) -> NetGrads {
        let mut grads: Vec<DenseGrads> = self.layers.iter().map(DenseGrads::zeros_like).collect();
        let mut upstream = d_out;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = if i == 0 { x } else { &outs[i - 1] };
            upstream =
                backward_dense(&layer.w, layer.act, input, &outs[i], &upstream, &mut grads[i]);
        }
        NetGrads { layers: grads }
    }
}

/// Per-layer gradients matching a [`DenseNet`].
#[derive(Debug, Clone)]
pub struct NetGrads {
    pub layers: Vec<DenseGrads>,
}
