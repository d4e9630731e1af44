//! Cross-entropy training harness for toy models, with mask-aware updates.

use super::masks::{dropped_unit_regions, ParamRegion};
use super::toy::{Layer, Shape, ToyModel};
use crate::error::{MippError, Result};
use crate::tensor::{
    backward_dense, cross_entropy, loss_grad, one_hot, DenseGrads, LossKind, Matrix, SgdConfig,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Labeled classification data; rows of `x` are flattened samples.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Matrix,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(x: Matrix, labels: Vec<usize>, n_classes: usize) -> Result<Dataset> {
        if x.rows() != labels.len() {
            return Err(MippError::Shape {
                op: "Dataset::new",
                expected: format!("{} labels", x.rows()),
                got: format!("{}", labels.len()),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(MippError::Config(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        Ok(Dataset {
            x,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Per-epoch train/test accuracy of one training run.
#[derive(Debug, Clone, Default)]
pub struct AccuracyTrace {
    pub train: Vec<f32>,
    pub test: Vec<f32>,
}

impl AccuracyTrace {
    pub fn final_test(&self) -> f32 {
        *self.test.last().unwrap_or(&0.0)
    }
}

/// Fraction of correctly classified samples.
pub fn accuracy(model: &ToyModel, data: &Dataset) -> Result<f32> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let preds = model.predict(&data.x)?;
    let correct = preds
        .iter()
        .zip(&data.labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(correct as f32 / data.len() as f32)
}

enum GradBuf {
    Dense(DenseGrads),
    Conv { dw: Vec<f32>, db: Vec<f32> },
    None,
}

/// Train with minibatch SGD and softmax cross-entropy.
///
/// If the model carries masks, gradients at every masked parameter position
/// are zeroed before each update, so dropped units stay exactly zero through
/// re-training. Epoch shuffling is seeded from `cfg.seed`; identical configs
/// reproduce identical models.
pub fn train_classifier(
    model: &mut ToyModel,
    train: &Dataset,
    test: &Dataset,
    epochs: usize,
    cfg: &SgdConfig,
) -> Result<AccuracyTrace> {
    cfg.validate()?;
    let mut trace = AccuracyTrace::default();
    if epochs == 0 {
        return Ok(trace);
    }
    if train.is_empty() {
        return Err(MippError::InsufficientSamples {
            op: "train_classifier",
            needed: 1,
            got: 0,
        });
    }

    let frozen = frozen_regions(model)?;
    let shapes = model.layer_shapes()?;
    let mut velocity = init_grads(model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut step = 0usize;

    for _epoch in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let xb = train.x.gather_rows(chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| train.labels[i]).collect();
            let targets = one_hot(&yb, train.n_classes);

            let outs = model.forward_all(&xb)?;
            let logits = outs.last().expect("model has layers");
            let loss = cross_entropy(logits, &targets);
            if !loss.is_finite() {
                return Err(MippError::Divergence {
                    iteration: step,
                    loss,
                });
            }
            let d_out = loss_grad(LossKind::CrossEntropy, logits, &targets);
            let mut grads = backward_model(model, &shapes, &xb, &outs, d_out)?;
            for (li, region) in &frozen {
                zero_grad_region(&mut grads[*li], region);
            }
            sgd_step(model, &grads, &mut velocity, cfg);
            step += 1;
        }
        trace.train.push(accuracy(model, train)?);
        trace.test.push(accuracy(model, test)?);
    }
    Ok(trace)
}

fn frozen_regions(model: &ToyModel) -> Result<Vec<(usize, ParamRegion)>> {
    let mut regions = Vec::new();
    for mask in model.masks.clone() {
        for unit in mask.dropped_units() {
            regions.extend(dropped_unit_regions(model, mask.layer_index, unit)?);
        }
    }
    Ok(regions)
}

fn zero_grad_region(grad: &mut GradBuf, region: &ParamRegion) {
    match (grad, region) {
        (GradBuf::Dense(g), ParamRegion::Weights(idx)) => {
            let data = g.dw.data_mut();
            for &i in idx {
                data[i] = 0.0;
            }
        }
        (GradBuf::Dense(g), ParamRegion::Bias(i)) => g.db[*i] = 0.0,
        (GradBuf::Conv { dw, .. }, ParamRegion::Weights(idx)) => {
            for &i in idx {
                dw[i] = 0.0;
            }
        }
        (GradBuf::Conv { db, .. }, ParamRegion::Bias(i)) => db[*i] = 0.0,
        (GradBuf::None, _) => {}
    }
}

fn init_grads(model: &ToyModel) -> Vec<GradBuf> {
    model
        .layers
        .iter()
        .map(|layer| match layer {
            Layer::Dense { w, b, .. } => GradBuf::Dense(DenseGrads {
                dw: Matrix::zeros(w.rows(), w.cols()),
                db: vec![0.0; b.len()],
            }),
            Layer::Conv2d { w, b, .. } => GradBuf::Conv {
                dw: vec![0.0; w.len()],
                db: vec![0.0; b.len()],
            },
            _ => GradBuf::None,
        })
        .collect()
}

fn backward_model(
    model: &ToyModel,
    shapes: &[Shape],
    x: &Matrix,
    outs: &[Matrix],
    d_out: Matrix,
) -> Result<Vec<GradBuf>> {
    let mut grads = init_grads(model);
    let mut upstream = d_out;
    for (li, layer) in model.layers.iter().enumerate().rev() {
        let input = if li == 0 { x } else { &outs[li - 1] };
        let in_shape = if li == 0 {
            model.input_shape
        } else {
            shapes[li - 1]
        };
        upstream = match layer {
            Layer::Dense { w, act, .. } => {
                let GradBuf::Dense(g) = &mut grads[li] else {
                    unreachable!()
                };
                backward_dense(w, *act, input, &outs[li], &upstream, g)
            }
            Layer::Conv2d { .. } => {
                let (dw, db, dx) = conv_backward(layer, input, &outs[li], &upstream, in_shape);
                grads[li] = GradBuf::Conv { dw, db };
                dx
            }
            Layer::MaxPool2 => maxpool_backward(input, &upstream, in_shape),
            Layer::Flatten => upstream,
        };
    }
    Ok(grads)
}

fn conv_backward(
    layer: &Layer,
    x: &Matrix,
    y: &Matrix,
    d_out: &Matrix,
    in_shape: Shape,
) -> (Vec<f32>, Vec<f32>, Matrix) {
    let Layer::Conv2d {
        w,
        out_ch,
        in_ch,
        kh,
        kw,
        act,
        ..
    } = layer
    else {
        unreachable!()
    };
    let Shape::Image { h, w: iw, .. } = in_shape else {
        unreachable!()
    };
    let (oh, ow) = (h - kh + 1, iw - kw + 1);
    let mut dw = vec![0.0f32; w.len()];
    let mut db = vec![0.0f32; *out_ch];
    let mut dx = Matrix::zeros(x.rows(), x.cols());

    for s in 0..x.rows() {
        let xin = x.row(s);
        let yrow = y.row(s);
        let drow = d_out.row(s);
        let dxrow = dx.row_mut(s);
        for oc in 0..*out_ch {
            let w_oc = &w[oc * in_ch * kh * kw..(oc + 1) * in_ch * kh * kw];
            let dw_oc = &mut dw[oc * in_ch * kh * kw..(oc + 1) * in_ch * kh * kw];
            for oy in 0..oh {
                for ox in 0..ow {
                    let oi = oc * oh * ow + oy * ow + ox;
                    let dz = drow[oi] * act.grad_from_output(yrow[oi]);
                    if dz == 0.0 {
                        continue;
                    }
                    db[oc] += dz;
                    for ic in 0..*in_ch {
                        let plane = &xin[ic * h * iw..(ic + 1) * h * iw];
                        let dplane = &mut dxrow[ic * h * iw..(ic + 1) * h * iw];
                        let kern = &w_oc[ic * kh * kw..(ic + 1) * kh * kw];
                        let dkern = &mut dw_oc[ic * kh * kw..(ic + 1) * kh * kw];
                        for ky in 0..*kh {
                            for kx in 0..*kw {
                                let pi = (oy + ky) * iw + ox + kx;
                                dkern[ky * kw + kx] += dz * plane[pi];
                                dplane[pi] += dz * kern[ky * kw + kx];
                            }
                        }
                    }
                }
            }
        }
    }
    (dw, db, dx)
}

fn maxpool_backward(x: &Matrix, d_out: &Matrix, in_shape: Shape) -> Matrix {
    let Shape::Image { c, h, w } = in_shape else {
        unreachable!()
    };
    let (oh, ow) = (h / 2, w / 2);
    let mut dx = Matrix::zeros(x.rows(), x.cols());
    for s in 0..x.rows() {
        let xin = x.row(s);
        let drow = d_out.row(s);
        let dxrow = dx.row_mut(s);
        for ch in 0..c {
            let plane = &xin[ch * h * w..(ch + 1) * h * w];
            for oy in 0..oh {
                for ox in 0..ow {
                    let (y0, x0) = (oy * 2, ox * 2);
                    // First position attaining the block max gets the gradient.
                    let cands = [
                        y0 * w + x0,
                        y0 * w + x0 + 1,
                        (y0 + 1) * w + x0,
                        (y0 + 1) * w + x0 + 1,
                    ];
                    let mut best = cands[0];
                    for &p in &cands[1..] {
                        if plane[p] > plane[best] {
                            best = p;
                        }
                    }
                    dxrow[ch * h * w + best] += drow[ch * oh * ow + oy * ow + ox];
                }
            }
        }
    }
    dx
}

fn sgd_step(model: &mut ToyModel, grads: &[GradBuf], velocity: &mut [GradBuf], cfg: &SgdConfig) {
    let (lr, mu, wd) = (cfg.learning_rate, cfg.momentum, cfg.weight_decay);
    for ((layer, g), v) in model.layers.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        match (layer, g, v) {
            (Layer::Dense { w, b, .. }, GradBuf::Dense(g), GradBuf::Dense(v)) => {
                for ((wv, &gv), vel) in w.data_mut().iter_mut().zip(g.dw.data()).zip(v.dw.data_mut())
                {
                    *vel = mu * *vel + gv + wd * *wv;
                    *wv -= lr * *vel;
                }
                for ((bv, &gv), vel) in b.iter_mut().zip(&g.db).zip(v.db.iter_mut()) {
                    *vel = mu * *vel + gv;
                    *bv -= lr * *vel;
                }
            }
            (Layer::Conv2d { w, b, .. }, GradBuf::Conv { dw, db }, GradBuf::Conv { dw: vw, db: vb }) => {
                for ((wv, &gv), vel) in w.iter_mut().zip(dw.iter()).zip(vw.iter_mut()) {
                    *vel = mu * *vel + gv + wd * *wv;
                    *wv -= lr * *vel;
                }
                for ((bv, &gv), vel) in b.iter_mut().zip(db.iter()).zip(vb.iter_mut()) {
                    *vel = mu * *vel + gv;
                    *bv -= lr * *vel;
                }
            }
            _ => {}
        }
    }
}

/// Copy of every parameter tensor, for update-suppression checks.
pub fn snapshot_params(model: &ToyModel) -> Vec<(Vec<f32>, Vec<f32>)> {
    model
        .layers
        .iter()
        .filter_map(|l| match l {
            Layer::Dense { w, b, .. } => Some((w.data().to_vec(), b.clone())),
            Layer::Conv2d { w, b, .. } => Some((w.clone(), b.clone())),
            _ => None,
        })
        .collect()
}
