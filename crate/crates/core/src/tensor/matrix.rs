//! Row-major `f32` matrix used for activations, weights and gradients.

use crate::error::{MippError, Result};
use rand::Rng;

/// Dense row-major matrix of 32-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from a flat row-major buffer. Length must equal `rows * cols`
    /// and every entry must be finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(MippError::Shape {
                op: "Matrix::from_vec",
                expected: format!("{} values ({rows}x{cols})", rows * cols),
                got: format!("{} values", data.len()),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(MippError::Config(format!(
                "non-finite entry {bad} in {rows}x{cols} matrix"
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(MippError::Shape {
                    op: "Matrix::from_rows",
                    expected: format!("{cols} columns"),
                    got: format!("{} columns", r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    /// Entries drawn uniformly from `[-scale, scale]`.
    pub fn random_uniform<R: Rng>(rows: usize, cols: usize, scale: f32, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(-scale..=scale))
            .collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f32) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy the given rows into a new matrix (gather).
    pub fn gather_rows(&self, indices: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(indices.len(), self.cols);
        for (dst, &src) in indices.iter().enumerate() {
            out.row_mut(dst).copy_from_slice(self.row(src));
        }
        out
    }

    /// Copy the given columns into a new matrix (gather).
    pub fn gather_cols(&self, indices: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, indices.len());
        for r in 0..self.rows {
            let src = self.row(r);
            let dst = out.row_mut(r);
            for (j, &c) in indices.iter().enumerate() {
                dst[j] = src[c];
            }
        }
        out
    }

    /// Zero the listed columns in place.
    pub fn zero_cols(&mut self, cols: &[usize]) {
        for r in 0..self.rows {
            let row = self.row_mut(r);
            for &c in cols {
                row[c] = 0.0;
            }
        }
    }

    pub fn column(&self, c: usize) -> Vec<f32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Per-column mean, accumulated in f64.
    pub fn col_means(&self) -> Vec<f64> {
        let mut sums = vec![0f64; self.cols];
        for r in 0..self.rows {
            for (s, &v) in sums.iter_mut().zip(self.row(r)) {
                *s += v as f64;
            }
        }
        let n = self.rows.max(1) as f64;
        sums.iter_mut().for_each(|s| *s /= n);
        sums
    }

    /// Per-column population variance (divides by n), accumulated in f64.
    pub fn col_variances(&self) -> Vec<f64> {
        let means = self.col_means();
        let mut sums = vec![0f64; self.cols];
        for r in 0..self.rows {
            for ((s, &m), &v) in sums.iter_mut().zip(&means).zip(self.row(r)) {
                let d = v as f64 - m;
                *s += d * d;
            }
        }
        let n = self.rows.max(1) as f64;
        sums.iter_mut().for_each(|s| *s /= n);
        sums
    }
}

/// Dot product with eight independent accumulator lanes so the loop
/// vectorizes without float reassociation.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0f32; 8];
    let n8 = a.len() / 8 * 8;
    let (ha, ta) = a.split_at(n8);
    let (hb, tb) = b.split_at(n8);
    for (ca, cb) in ha.chunks_exact(8).zip(hb.chunks_exact(8)) {
        for l in 0..8 {
            acc[l] += ca[l] * cb[l];
        }
    }
    let mut s = (acc[0] + acc[4]) + (acc[1] + acc[5]) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ta.iter().zip(tb) {
        s += x * y;
    }
    s
}

/// `out += a * v` over contiguous slices.
#[inline]
pub fn axpy(out: &mut [f32], a: f32, v: &[f32]) {
    debug_assert_eq!(out.len(), v.len());
    for (o, &x) in out.iter_mut().zip(v) {
        *o += a * x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        assert!(Matrix::from_vec(1, 2, vec![1.0, f32::NAN]).is_err());
        assert!(Matrix::from_vec(1, 2, vec![1.0, f32::INFINITY]).is_err());
    }

    #[test]
    fn gather_and_zero_cols() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let g = m.gather_cols(&[2, 0]);
        assert_eq!(g.row(0), &[3.0, 1.0]);
        assert_eq!(g.row(1), &[6.0, 4.0]);

        let mut z = m.clone();
        z.zero_cols(&[1]);
        assert_eq!(z.row(0), &[1.0, 0.0, 3.0]);
    }

    #[test]
    fn col_stats() {
        let m = Matrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(m.col_means(), vec![1.0]);
        assert_eq!(m.col_variances(), vec![1.0]);
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f32> = (0..37).map(|i| (i as f32 * 0.37).sin()).collect();
        let b: Vec<f32> = (0..37).map(|i| (i as f32 * 0.91).cos()).collect();
        let naive: f32 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-5);
    }
}
