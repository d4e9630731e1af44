//! Collapse a filter's HxW activation map to one scalar random variable.

use crate::error::{MippError, Result};
use crate::models::LayerActs;
use crate::tensor::Matrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Map from a filter activation map to a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollapseFn {
    /// Sum of absolute activations.
    L1,
    /// Root of the summed squares.
    L2,
    /// Mean absolute activation.
    Mean,
    /// Standard deviation of the absolute activations (population).
    Std,
}

impl fmt::Display for CollapseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CollapseFn::L1 => "l1",
            CollapseFn::L2 => "l2",
            CollapseFn::Mean => "mean",
            CollapseFn::Std => "std",
        };
        write!(f, "{s}")
    }
}

impl FromStr for CollapseFn {
    type Err = MippError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(CollapseFn::L1),
            "l2" => Ok(CollapseFn::L2),
            "mean" => Ok(CollapseFn::Mean),
            "std" => Ok(CollapseFn::Std),
            other => Err(MippError::Config(format!(
                "unknown collapse function '{other}' (expected l1|l2|mean|std)"
            ))),
        }
    }
}

/// Collapse per-sample filter maps (rows are channel-major `filters*h*w`)
/// into a samples x filters matrix.
pub fn collapse_filters(
    data: &Matrix,
    filters: usize,
    h: usize,
    w: usize,
    method: CollapseFn,
) -> Result<Matrix> {
    if h == 0 || w == 0 || data.cols() != filters * h * w {
        return Err(MippError::Shape {
            op: "collapse_filters",
            expected: format!("rows of {filters}x{h}x{w}"),
            got: format!("{} columns", data.cols()),
        });
    }
    let hw = h * w;
    let mut out = Matrix::zeros(data.rows(), filters);
    for s in 0..data.rows() {
        let row = data.row(s);
        let dst = out.row_mut(s);
        for f in 0..filters {
            let map = &row[f * hw..(f + 1) * hw];
            dst[f] = match method {
                CollapseFn::L1 => map.iter().map(|v| v.abs() as f64).sum::<f64>() as f32,
                CollapseFn::L2 => {
                    (map.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>()).sqrt() as f32
                }
                CollapseFn::Mean => {
                    (map.iter().map(|v| v.abs() as f64).sum::<f64>() / hw as f64) as f32
                }
                CollapseFn::Std => {
                    let mean = map.iter().map(|v| v.abs() as f64).sum::<f64>() / hw as f64;
                    let ss = map
                        .iter()
                        .map(|v| {
                            let d = v.abs() as f64 - mean;
                            d * d
                        })
                        .sum::<f64>();
                    (ss / hw as f64).sqrt() as f32
                }
            };
        }
    }
    Ok(out)
}

/// Collapse a captured layer to samples x units; dense layers pass through.
pub fn collapse_layer(acts: &LayerActs, method: CollapseFn) -> Result<Matrix> {
    match acts {
        LayerActs::Dense(m) => Ok(m.clone()),
        LayerActs::Conv {
            data,
            filters,
            h,
            w,
        } => collapse_filters(data, *filters, *h, *w, method),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_map() -> Matrix {
        // 2x2 map [[1,-2],[3,0]] for a single sample and filter.
        Matrix::from_rows(&[vec![1.0, -2.0, 3.0, 0.0]]).unwrap()
    }

    #[test]
    fn l1_sums_absolutes() {
        let out = collapse_filters(&one_map(), 1, 2, 2, CollapseFn::L1).unwrap();
        assert_eq!(out.get(0, 0), 6.0);
    }

    #[test]
    fn l2_roots_sum_of_squares() {
        let out = collapse_filters(&one_map(), 1, 2, 2, CollapseFn::L2).unwrap();
        assert!((out.get(0, 0) - 14f32.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn mean_averages_absolutes() {
        let out = collapse_filters(&one_map(), 1, 2, 2, CollapseFn::Mean).unwrap();
        assert_eq!(out.get(0, 0), 1.5);
    }

    #[test]
    fn std_of_constant_map_is_zero() {
        let data = Matrix::from_rows(&[vec![4.0; 9]]).unwrap();
        let out = collapse_filters(&data, 1, 3, 3, CollapseFn::Std).unwrap();
        assert_eq!(out.get(0, 0), 0.0);
    }

    #[test]
    fn std_of_mixed_map() {
        let out = collapse_filters(&one_map(), 1, 2, 2, CollapseFn::Std).unwrap();
        // abs values {1,2,3,0}, mean 1.5, population variance 1.25
        assert!((out.get(0, 0) - 1.25f32.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn unknown_method_string_is_config_error() {
        assert!("huber".parse::<CollapseFn>().is_err());
        assert_eq!("L1".parse::<CollapseFn>().unwrap(), CollapseFn::L1);
    }
}
