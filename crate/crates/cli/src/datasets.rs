//! Dataset ingestion: bundled 8x8 digits, optional MNIST from disk, and
//! the synthetic recipes.

use crate::recipes::{self, SyntheticData};
use anyhow::{bail, Context, Result};
use mipp::models::{parse_idx_images, parse_idx_labels, read_idx_images, read_idx_labels};
use mipp::models::{Dataset, Shape};
use mipp::tensor::{derive_seed, Matrix};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

/// Environment variable pointing at the directory with MNIST IDX files.
pub const DATA_ROOT_ENV: &str = "MIPP_DATA_DIR";

const DIGITS_IMAGES: &[u8] = include_bytes!("../data/digits8x8-images-idx3-ubyte");
const DIGITS_LABELS: &[u8] = include_bytes!("../data/digits8x8-labels-idx1-ubyte");

/// A loaded train/test pair plus the logical input shape.
pub struct LoadedData {
    pub train: Dataset,
    pub test: Dataset,
    pub input_shape: Shape,
}

impl From<SyntheticData> for LoadedData {
    fn from(s: SyntheticData) -> Self {
        LoadedData {
            train: s.train,
            test: s.test,
            input_shape: s.input_shape,
        }
    }
}

/// Load a dataset by id: `mnist`, `digits8x8` or `synthetic:<recipe>`.
///
/// The split shuffle and synthetic generation are keyed on `seed`, so the
/// same id and seed always produce the same data.
pub fn load_dataset(id: &str, seed: u64) -> Result<LoadedData> {
    match id {
        "digits8x8" => load_digits(seed),
        "mnist" => load_mnist(seed),
        other => {
            if let Some(recipe) = other.strip_prefix("synthetic:") {
                Ok(recipes::generate(recipe, seed)?.into())
            } else {
                bail!("unknown dataset '{other}' (expected mnist | digits8x8 | synthetic:<recipe>)")
            }
        }
    }
}

fn load_digits(seed: u64) -> Result<LoadedData> {
    let images = parse_idx_images(DIGITS_IMAGES).context("bundled digits images")?;
    let labels = parse_idx_labels(DIGITS_LABELS).context("bundled digits labels")?;
    let (train, test) = split(images.data, labels, 10, 0.2, seed)?;
    Ok(LoadedData {
        train,
        test,
        input_shape: Shape::Flat(64),
    })
}

fn load_mnist(seed: u64) -> Result<LoadedData> {
    let root = std::env::var(DATA_ROOT_ENV)
        .map(PathBuf::from)
        .with_context(|| format!("set {DATA_ROOT_ENV} to the directory holding MNIST IDX files"))?;
    let images = read_idx_images(&root.join("train-images-idx3-ubyte"))?;
    let labels = read_idx_labels(&root.join("train-labels-idx1-ubyte"))?;
    let (train, test) = split(images.data, labels, 10, 0.2, seed)?;
    Ok(LoadedData {
        train,
        test,
        input_shape: Shape::Image { c: 1, h: 28, w: 28 },
    })
}

/// Seeded shuffle then an (1 - eval_fraction)/eval_fraction row split.
pub fn split(
    x: Matrix,
    labels: Vec<usize>,
    n_classes: usize,
    eval_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x73706c69]));
    order.shuffle(&mut rng);
    let n_test = ((x.rows() as f64) * eval_fraction).round() as usize;
    let (test_idx, train_idx) = order.split_at(n_test);
    let gather = |idx: &[usize]| -> Result<Dataset> {
        Ok(Dataset::new(
            x.gather_rows(idx),
            idx.iter().map(|&i| labels[i]).collect(),
            n_classes,
        )?)
    };
    Ok((gather(train_idx)?, gather(test_idx)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_digits_load_and_split() {
        let data = load_dataset("digits8x8", 0).unwrap();
        assert_eq!(data.train.len() + data.test.len(), 1797);
        assert_eq!(data.train.x.cols(), 64);
        assert_eq!(data.train.n_classes, 10);
        // Pixel values are scaled into [0, 1].
        assert!(data.train.x.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn dataset_loading_is_deterministic() {
        let a = load_dataset("digits8x8", 3).unwrap();
        let b = load_dataset("digits8x8", 3).unwrap();
        assert_eq!(a.train.labels, b.train.labels);
        assert_eq!(a.train.x.data(), b.train.x.data());
    }

    #[test]
    fn unknown_dataset_is_an_error() {
        assert!(load_dataset("cifar10", 0).is_err());
    }
}
