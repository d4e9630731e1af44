//! Small dense/convolutional classifiers with mask-aware surgery hooks.

use crate::error::{MippError, Result};
use crate::tensor::{forward_dense, Activation, Matrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Logical shape of the data flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Flat(usize),
    Image { c: usize, h: usize, w: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Flat(n) => n,
            Shape::Image { c, h, w } => c * h * w,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One model layer. Rows of the batch matrix hold the flattened
/// channel-major `(c, h, w)` data for image shapes.
#[derive(Debug, Clone)]
pub enum Layer {
    Dense {
        /// `out x in`, row-major.
        w: Matrix,
        b: Vec<f32>,
        act: Activation,
    },
    Conv2d {
        /// `(out_ch, in_ch, kh, kw)` flattened row-major; valid padding, stride 1.
        w: Vec<f32>,
        b: Vec<f32>,
        out_ch: usize,
        in_ch: usize,
        kh: usize,
        kw: usize,
        act: Activation,
    },
    /// 2x2 max pooling with stride 2 (odd trailing rows/cols are dropped).
    MaxPool2,
    /// Reinterpret an image shape as a flat vector; data is untouched.
    Flatten,
}

impl Layer {
    pub fn dense<R: Rng>(out_dim: usize, in_dim: usize, act: Activation, rng: &mut R) -> Layer {
        let scale = (1.0 / in_dim.max(1) as f32).sqrt();
        Layer::Dense {
            w: Matrix::random_uniform(out_dim, in_dim, scale, rng),
            b: (0..out_dim).map(|_| rng.gen_range(-scale..=scale)).collect(),
            act,
        }
    }

    pub fn conv2d<R: Rng>(
        out_ch: usize,
        in_ch: usize,
        kh: usize,
        kw: usize,
        act: Activation,
        rng: &mut R,
    ) -> Layer {
        let fan_in = in_ch * kh * kw;
        let scale = (1.0 / fan_in.max(1) as f32).sqrt();
        Layer::Conv2d {
            w: (0..out_ch * fan_in)
                .map(|_| rng.gen_range(-scale..=scale))
                .collect(),
            b: (0..out_ch).map(|_| rng.gen_range(-scale..=scale)).collect(),
            out_ch,
            in_ch,
            kh,
            kw,
            act,
        }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, Layer::Dense { .. } | Layer::Conv2d { .. })
    }

    /// Number of prunable output units (nodes or filters).
    pub fn unit_count(&self) -> usize {
        match self {
            Layer::Dense { w, .. } => w.rows(),
            Layer::Conv2d { out_ch, .. } => *out_ch,
            _ => 0,
        }
    }

    pub fn out_shape(&self, input: Shape) -> Result<Shape> {
        match self {
            Layer::Dense { w, .. } => match input {
                Shape::Flat(n) if n == w.cols() => Ok(Shape::Flat(w.rows())),
                other => Err(MippError::Shape {
                    op: "Layer::Dense",
                    expected: format!("Flat({})", w.cols()),
                    got: format!("{other:?}"),
                }),
            },
            Layer::Conv2d {
                out_ch,
                in_ch,
                kh,
                kw,
                ..
            } => match input {
                Shape::Image { c, h, w } if c == *in_ch && h >= *kh && w >= *kw => {
                    Ok(Shape::Image {
                        c: *out_ch,
                        h: h - kh + 1,
                        w: w - kw + 1,
                    })
                }
                other => Err(MippError::Shape {
                    op: "Layer::Conv2d",
                    expected: format!("Image with {in_ch} channels and size >= {kh}x{kw}"),
                    got: format!("{other:?}"),
                }),
            },
            Layer::MaxPool2 => match input {
                Shape::Image { c, h, w } if h >= 2 && w >= 2 => Ok(Shape::Image {
                    c,
                    h: h / 2,
                    w: w / 2,
                }),
                other => Err(MippError::Shape {
                    op: "Layer::MaxPool2",
                    expected: "Image at least 2x2".into(),
                    got: format!("{other:?}"),
                }),
            },
            Layer::Flatten => match input {
                Shape::Image { .. } => Ok(Shape::Flat(input.len())),
                other => Err(MippError::Shape {
                    op: "Layer::Flatten",
                    expected: "Image".into(),
                    got: format!("{other:?}"),
                }),
            },
        }
    }
}

/// A toy classifier: an ordered layer stack plus any attached prune masks.
#[derive(Debug, Clone)]
pub struct ToyModel {
    pub layers: Vec<Layer>,
    pub input_shape: Shape,
    /// Keep vectors attached by mask application, one per masked layer,
    /// sorted by layer index.
    pub masks: Vec<crate::models::masks::PruneMask>,
}

impl ToyModel {
    pub fn new(layers: Vec<Layer>, input_shape: Shape) -> Result<ToyModel> {
        let model = ToyModel {
            layers,
            input_shape,
            masks: Vec::new(),
        };
        model.layer_shapes()?;
        Ok(model)
    }

    /// Output shape of every layer, starting after the input.
    pub fn layer_shapes(&self) -> Result<Vec<Shape>> {
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut cur = self.input_shape;
        for layer in &self.layers {
            cur = layer.out_shape(cur)?;
            shapes.push(cur);
        }
        Ok(shapes)
    }

    /// Indices of layers whose output units may be pruned: every
    /// parameterized layer except the final (output) one.
    pub fn prunable_layers(&self) -> Vec<usize> {
        let param: Vec<usize> = (0..self.layers.len())
            .filter(|&i| self.layers[i].has_params())
            .collect();
        param[..param.len().saturating_sub(1)].to_vec()
    }

    /// Index of the final parameterized (output) layer.
    pub fn output_layer(&self) -> Option<usize> {
        (0..self.layers.len()).rev().find(|&i| self.layers[i].has_params())
    }

    /// Next parameterized layer strictly after `idx`, if any.
    pub fn next_param_layer(&self, idx: usize) -> Option<usize> {
        ((idx + 1)..self.layers.len()).find(|&i| self.layers[i].has_params())
    }

    pub fn n_classes(&self) -> usize {
        self.output_layer()
            .map(|i| self.layers[i].unit_count())
            .unwrap_or(0)
    }

    /// Forward pass keeping each layer's output (rows are flattened data).
    pub fn forward_all(&self, inputs: &Matrix) -> Result<Vec<Matrix>> {
        if inputs.cols() != self.input_shape.len() {
            return Err(MippError::Shape {
                op: "ToyModel::forward_all",
                expected: format!("{} input columns", self.input_shape.len()),
                got: format!("{}", inputs.cols()),
            });
        }
        let shapes = self.layer_shapes()?;
        let mut outs: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        let mut shape = self.input_shape;
        for (li, layer) in self.layers.iter().enumerate() {
            let x = outs.last().unwrap_or(inputs);
            let out = match layer {
                Layer::Dense { w, b, act } => forward_dense(w, b, x, *act)?,
                Layer::Conv2d { .. } => conv_forward(layer, x, shape)?,
                Layer::MaxPool2 => maxpool_forward(x, shape)?,
                Layer::Flatten => x.clone(),
            };
            shape = shapes[li];
            outs.push(out);
        }
        Ok(outs)
    }

    /// Class logits for a batch.
    pub fn logits(&self, inputs: &Matrix) -> Result<Matrix> {
        Ok(self.forward_all(inputs)?.pop().expect("model has layers"))
    }

    pub fn predict(&self, inputs: &Matrix) -> Result<Vec<usize>> {
        let logits = self.logits(inputs)?;
        Ok((0..logits.rows()).map(|r| argmax(logits.row(r))).collect())
    }
}

pub(crate) fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn conv_forward(layer: &Layer, x: &Matrix, in_shape: Shape) -> Result<Matrix> {
    let Layer::Conv2d {
        w,
        b,
        out_ch,
        in_ch,
        kh,
        kw,
        act,
    } = layer
    else {
        unreachable!()
    };
    let Shape::Image { c, h, w: iw } = in_shape else {
        return Err(MippError::Shape {
            op: "conv_forward",
            expected: "Image".into(),
            got: format!("{in_shape:?}"),
        });
    };
    debug_assert_eq!(c, *in_ch);
    let (oh, ow) = (h - kh + 1, iw - kw + 1);
    let mut out = Matrix::zeros(x.rows(), out_ch * oh * ow);
    for s in 0..x.rows() {
        let xin = x.row(s);
        let xout = out.row_mut(s);
        for oc in 0..*out_ch {
            let w_oc = &w[oc * in_ch * kh * kw..(oc + 1) * in_ch * kh * kw];
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = b[oc];
                    for ic in 0..*in_ch {
                        let plane = &xin[ic * h * iw..(ic + 1) * h * iw];
                        let kern = &w_oc[ic * kh * kw..(ic + 1) * kh * kw];
                        for ky in 0..*kh {
                            let row = &plane[(oy + ky) * iw + ox..(oy + ky) * iw + ox + kw];
                            let krow = &kern[ky * kw..(ky + 1) * kw];
                            for (xv, kv) in row.iter().zip(krow) {
                                acc += xv * kv;
                            }
                        }
                    }
                    xout[oc * oh * ow + oy * ow + ox] = act.apply(acc);
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn maxpool_forward(x: &Matrix, in_shape: Shape) -> Result<Matrix> {
    let Shape::Image { c, h, w } = in_shape else {
        return Err(MippError::Shape {
            op: "maxpool_forward",
            expected: "Image".into(),
            got: format!("{in_shape:?}"),
        });
    };
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Matrix::zeros(x.rows(), c * oh * ow);
    for s in 0..x.rows() {
        let xin = x.row(s);
        let xout = out.row_mut(s);
        for ch in 0..c {
            let plane = &xin[ch * h * w..(ch + 1) * h * w];
            for oy in 0..oh {
                for ox in 0..ow {
                    let (y0, x0) = (oy * 2, ox * 2);
                    let m = plane[y0 * w + x0]
                        .max(plane[y0 * w + x0 + 1])
                        .max(plane[(y0 + 1) * w + x0])
                        .max(plane[(y0 + 1) * w + x0 + 1]);
                    xout[ch * oh * ow + oy * ow + ox] = m;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shape_propagation_conv_stack() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let model = ToyModel::new(
            vec![
                Layer::conv2d(8, 1, 3, 3, Activation::Relu, &mut rng),
                Layer::MaxPool2,
                Layer::conv2d(16, 8, 3, 3, Activation::Relu, &mut rng),
                Layer::MaxPool2,
                Layer::Flatten,
                Layer::dense(32, 16 * 5 * 5, Activation::Relu, &mut rng),
                Layer::dense(10, 32, Activation::Identity, &mut rng),
            ],
            Shape::Image { c: 1, h: 28, w: 28 },
        )
        .unwrap();
        let shapes = model.layer_shapes().unwrap();
        assert_eq!(shapes[0], Shape::Image { c: 8, h: 26, w: 26 });
        assert_eq!(shapes[3], Shape::Image { c: 16, h: 5, w: 5 });
        assert_eq!(shapes[6], Shape::Flat(10));
        assert_eq!(model.prunable_layers(), vec![0, 2, 5]);
        assert_eq!(model.output_layer(), Some(6));
    }

    #[test]
    fn maxpool_picks_block_maxima() {
        let x = Matrix::from_rows(&[vec![
            1.0, 2.0, 0.0, 0.0, //
            3.0, 4.0, 0.0, 5.0, //
            -1.0, -2.0, 9.0, 8.0, //
            -3.0, -4.0, 7.0, 6.0,
        ]])
        .unwrap();
        let out = maxpool_forward(&x, Shape::Image { c: 1, h: 4, w: 4 }).unwrap();
        assert_eq!(out.row(0), &[4.0, 5.0, -1.0, 9.0]);
    }

    #[test]
    fn conv_identity_kernel_shifts_nothing() {
        // Single 1x1 kernel with weight 1 and bias 0 is the identity.
        let layer = Layer::Conv2d {
            w: vec![1.0],
            b: vec![0.0],
            out_ch: 1,
            in_ch: 1,
            kh: 1,
            kw: 1,
            act: Activation::Identity,
        };
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 3.0, 0.5]]).unwrap();
        let out = conv_forward(&layer, &x, Shape::Image { c: 1, h: 2, w: 2 }).unwrap();
        assert_eq!(out.row(0), x.row(0));
    }
}
