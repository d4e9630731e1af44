//! Per-column z-scoring of activation matrices.
//!
//! Probes train on standardized activations so that no column dominates the
//! MSE through sheer scale. Constant columns map to zero, which also makes
//! "masked" and "carries no entropy" coincide: masking a column means
//! zeroing it, i.e. pinning it at the column mean.

use crate::tensor::Matrix;

/// Epsilon below which a column's variance counts as zero.
pub const CONST_COLUMN_VAR_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Standardizer {
    means: Vec<f64>,
    inv_stds: Vec<f64>,
}

impl Standardizer {
    /// Fit means and standard deviations on `m` (population variance).
    pub fn fit(m: &Matrix) -> Self {
        let means = m.col_means();
        let inv_stds = m
            .col_variances()
            .iter()
            .map(|&v| if v > CONST_COLUMN_VAR_EPS { 1.0 / v.sqrt() } else { 0.0 })
            .collect();
        Standardizer { means, inv_stds }
    }

    pub fn apply(&self, m: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for r in 0..m.rows() {
            let src = m.row(r);
            let dst = out.row_mut(r);
            for ((d, &v), (&mean, &inv)) in dst
                .iter_mut()
                .zip(src)
                .zip(self.means.iter().zip(&self.inv_stds))
            {
                *d = ((v as f64 - mean) * inv) as f32;
            }
        }
        out
    }

    /// Indices of columns that were constant in the fitted data.
    pub fn constant_cols(&self) -> Vec<usize> {
        self.inv_stds
            .iter()
            .enumerate()
            .filter_map(|(i, &inv)| (inv == 0.0).then_some(i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zscore_and_constant_columns() {
        let m = Matrix::from_rows(&[vec![0.0, 5.0], vec![2.0, 5.0]]).unwrap();
        let s = Standardizer::fit(&m);
        let z = s.apply(&m);
        assert_eq!(z.row(0), &[-1.0, 0.0]);
        assert_eq!(z.row(1), &[1.0, 0.0]);
        assert_eq!(s.constant_cols(), vec![1]);
    }
}
