//! Synthetic data recipes and model builders.
//!
//! Everything here is generated from a seed, so experiments (and the whole
//! acceptance suite) run without downloading anything.

use anyhow::{bail, Result};
use mipp::models::{Dataset, Layer, Shape, ToyModel};
use mipp::tensor::{derive_seed, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct SyntheticData {
    pub train: Dataset,
    pub test: Dataset,
    pub input_shape: Shape,
}

/// Generate a synthetic dataset by recipe name.
///
/// - `separable2`: two linearly separable 8-d classes.
/// - `quadrants16`: four classes keyed by the signs of two random
///   projections of 16-d inputs; the duplicated-node experiments use this.
/// - `informative-subset`: binary labels that depend on features 0 and 3
///   of eight independent inputs, and on nothing else.
/// - `constant-border`: 8x8 images whose one-pixel border is constant zero
///   while the interior carries four class templates.
/// - `blobs28`: ten smooth random 28x28 class templates plus pixel noise,
///   shaped like MNIST for the larger zoo models.
pub fn generate(recipe: &str, seed: u64) -> Result<SyntheticData> {
    match recipe {
        "separable2" => Ok(separable2(seed)),
        "quadrants16" => Ok(quadrants16(seed)),
        "informative-subset" => Ok(informative_subset(seed)),
        "constant-border" => Ok(constant_border(seed)),
        "blobs28" => Ok(blobs28(seed)),
        other => bail!("unknown synthetic recipe '{other}'"),
    }
}

fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x72656369, tag]))
}

fn normal(rng: &mut ChaCha8Rng) -> f32 {
    rng.sample(StandardNormal)
}

fn to_dataset(
    x: Vec<Vec<f32>>,
    labels: Vec<usize>,
    n_classes: usize,
    n_test: usize,
    input_shape: Shape,
) -> SyntheticData {
    let n = labels.len();
    let train_rows = &x[..n - n_test];
    let test_rows = &x[n - n_test..];
    let train = Dataset::new(
        Matrix::from_rows(train_rows).expect("rows compose"),
        labels[..n - n_test].to_vec(),
        n_classes,
    )
    .expect("labels in range");
    let test = Dataset::new(
        Matrix::from_rows(test_rows).expect("rows compose"),
        labels[n - n_test..].to_vec(),
        n_classes,
    )
    .expect("labels in range");
    SyntheticData {
        train,
        test,
        input_shape,
    }
}

fn separable2(seed: u64) -> SyntheticData {
    let mut rng = rng_for(seed, 1);
    let dim = 8;
    let n = 2500;
    let mut x = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    // Two unit-gaussian clouds 4 sigma apart along a random direction.
    let dir: Vec<f32> = (0..dim).map(|_| normal(&mut rng)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f32>().sqrt();
    for _ in 0..n {
        let class = rng.gen_range(0..2usize);
        let offset = if class == 0 { -2.0 } else { 2.0 };
        let row: Vec<f32> = dir
            .iter()
            .map(|&d| offset * d / norm + normal(&mut rng))
            .collect();
        x.push(row);
        labels.push(class);
    }
    to_dataset(x, labels, 2, 500, Shape::Flat(dim))
}

fn quadrants16(seed: u64) -> SyntheticData {
    let mut rng = rng_for(seed, 2);
    let dim = 16;
    let n = 5120;
    let w1: Vec<f32> = (0..dim).map(|_| normal(&mut rng)).collect();
    let w2: Vec<f32> = (0..dim).map(|_| normal(&mut rng)).collect();
    let mut x = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f32> = (0..dim).map(|_| normal(&mut rng)).collect();
        let p1 = row.iter().zip(&w1).map(|(a, b)| a * b).sum::<f32>();
        let p2 = row.iter().zip(&w2).map(|(a, b)| a * b).sum::<f32>();
        labels.push(2 * usize::from(p1 > 0.0) + usize::from(p2 > 0.0));
        x.push(row);
    }
    to_dataset(x, labels, 4, 1024, Shape::Flat(dim))
}

fn informative_subset(seed: u64) -> SyntheticData {
    let mut rng = rng_for(seed, 3);
    let dim = 8;
    let n = 5120;
    let mut x = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f32> = (0..dim).map(|_| normal(&mut rng)).collect();
        labels.push(usize::from((row[0] > 0.0) != (row[3] > 0.0)));
        x.push(row);
    }
    to_dataset(x, labels, 2, 1024, Shape::Flat(dim))
}

fn constant_border(seed: u64) -> SyntheticData {
    let mut rng = rng_for(seed, 4);
    let (h, w) = (8usize, 8usize);
    let n_classes = 4;
    let n = 2560;
    // Interior templates in [0.2, 1]; the border ring stays exactly zero.
    let templates: Vec<Vec<f32>> = (0..n_classes)
        .map(|_| (0..h * w).map(|_| rng.gen_range(0.2..1.0)).collect())
        .collect();
    let mut x = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let class = rng.gen_range(0..n_classes);
        let mut img = vec![0.0f32; h * w];
        for y in 1..h - 1 {
            for xx in 1..w - 1 {
                let i = y * w + xx;
                img[i] = templates[class][i] + 0.25 * normal(&mut rng);
            }
        }
        x.push(img);
        labels.push(class);
    }
    to_dataset(x, labels, n_classes, 512, Shape::Flat(h * w))
}

fn blobs28(seed: u64) -> SyntheticData {
    let mut rng = rng_for(seed, 5);
    let (h, w) = (28usize, 28usize);
    let n_classes = 10;
    let n = 2560;
    let templates: Vec<Vec<f32>> = (0..n_classes)
        .map(|_| {
            let mut img: Vec<f32> = (0..h * w).map(|_| rng.gen_range(0.0..1.0)).collect();
            // A few box blurs make smooth blobs out of pixel noise.
            for _ in 0..3 {
                let src = img.clone();
                for y in 0..h {
                    for x in 0..w {
                        let mut acc = 0.0;
                        let mut cnt = 0.0;
                        for dy in -1i64..=1 {
                            for dx in -1i64..=1 {
                                let (ny, nx) = (y as i64 + dy, x as i64 + dx);
                                if (0..h as i64).contains(&ny) && (0..w as i64).contains(&nx) {
                                    acc += src[ny as usize * w + nx as usize];
                                    cnt += 1.0;
                                }
                            }
                        }
                        img[y * w + x] = acc / cnt;
                    }
                }
            }
            let max = img.iter().cloned().fold(f32::MIN, f32::max);
            let min = img.iter().cloned().fold(f32::MAX, f32::min);
            img.iter().map(|v| (v - min) / (max - min + 1e-6)).collect()
        })
        .collect();
    let mut x = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let class = rng.gen_range(0..n_classes);
        let img: Vec<f32> = templates[class]
            .iter()
            .map(|&t| 0.75 * t + 0.25 * rng.gen_range(0.0..1.0))
            .collect();
        x.push(img);
        labels.push(class);
    }
    to_dataset(x, labels, n_classes, 512, Shape::Image { c: 1, h, w })
}

/// Build a model by id against a dataset's input shape and class count.
///
/// Ids: `dense-mnist`, `dense-digits`, `conv-mnist`, or `dense:<h1-h2-...>`
/// for an arbitrary relu stack on flat inputs.
pub fn build_model(id: &str, input_shape: Shape, n_classes: usize, seed: u64) -> Result<ToyModel> {
    use mipp::models::zoo;
    match id {
        "dense-mnist" => Ok(zoo::dense_mnist(seed)),
        "dense-digits" => Ok(zoo::dense_digits(seed)),
        "conv-mnist" => Ok(zoo::conv_mnist(seed)),
        other => {
            if let Some(hidden) = other.strip_prefix("dense:") {
                let mut dims = vec![input_shape.len()];
                for part in hidden.split('-') {
                    dims.push(part.parse::<usize>().map_err(|_| {
                        anyhow::anyhow!("bad hidden dim '{part}' in model id '{other}'")
                    })?);
                }
                dims.push(n_classes);
                Ok(zoo::dense_from_dims(&dims, seed))
            } else {
                bail!("unknown model '{other}'")
            }
        }
    }
}

/// Widen every hidden dense layer to exact twin pairs. Unit `j` and unit
/// `j + old_width` compute identical activations; the fan-out of each twin
/// is halved so the network function is unchanged.
pub fn duplicate_hidden_nodes(model: &ToyModel) -> Result<ToyModel> {
    let mut layers = model.layers.clone();
    let hidden = model.prunable_layers();
    for &li in &hidden {
        let Layer::Dense { w, b, act } = &layers[li] else {
            bail!("duplicate_hidden_nodes supports dense stacks only");
        };
        let (out, inn) = (w.rows(), w.cols());
        let mut new_w = Matrix::zeros(2 * out, inn);
        let mut new_b = vec![0.0f32; 2 * out];
        for j in 0..out {
            new_w.row_mut(j).copy_from_slice(w.row(j));
            new_w.row_mut(j + out).copy_from_slice(w.row(j));
            new_b[j] = b[j];
            new_b[j + out] = b[j];
        }
        let act = *act;
        layers[li] = Layer::Dense {
            w: new_w,
            b: new_b,
            act,
        };

        let np = model.next_param_layer(li).expect("hidden layer has a successor");
        let Layer::Dense { w: wn, b: bn, act: actn } = &layers[np] else {
            bail!("duplicate_hidden_nodes supports dense stacks only");
        };
        let (nout, nin) = (wn.rows(), wn.cols());
        debug_assert_eq!(nin, out);
        let mut new_wn = Matrix::zeros(nout, 2 * out);
        for j in 0..nout {
            let src = wn.row(j);
            let dst = new_wn.row_mut(j);
            for k in 0..out {
                dst[k] = src[k] / 2.0;
                dst[k + out] = src[k] / 2.0;
            }
        }
        let (bn, actn) = (bn.clone(), *actn);
        layers[np] = Layer::Dense {
            w: new_wn,
            b: bn,
            act: actn,
        };
    }
    Ok(ToyModel::new(layers, model.input_shape)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipes_are_deterministic() {
        for recipe in [
            "separable2",
            "quadrants16",
            "informative-subset",
            "constant-border",
        ] {
            let a = generate(recipe, 9).unwrap();
            let b = generate(recipe, 9).unwrap();
            assert_eq!(a.train.x.data(), b.train.x.data(), "{recipe}");
            assert_eq!(a.train.labels, b.train.labels, "{recipe}");
        }
    }

    #[test]
    fn constant_border_pixels_have_zero_variance() {
        let data = generate("constant-border", 1).unwrap();
        let vars = data.train.x.col_variances();
        for y in 0..8 {
            for x in 0..8 {
                let border = y == 0 || y == 7 || x == 0 || x == 7;
                if border {
                    assert_eq!(vars[y * 8 + x], 0.0);
                } else {
                    assert!(vars[y * 8 + x] > 1e-3);
                }
            }
        }
    }

    #[test]
    fn duplicated_model_preserves_the_function() {
        use mipp::models::zoo;
        let base = zoo::dense_from_dims(&[6, 5, 4, 3], 3);
        let dup = duplicate_hidden_nodes(&base).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Matrix::from_vec(
            10,
            6,
            (0..60).map(|_| rng.gen_range(-1.0f32..1.0)).collect(),
        )
        .unwrap();
        let a = base.logits(&x).unwrap();
        let b = dup.logits(&x).unwrap();
        for (va, vb) in a.data().iter().zip(b.data()) {
            assert!((va - vb).abs() < 1e-5);
        }
        assert_eq!(dup.layers[0].unit_count(), 10);
    }
}
