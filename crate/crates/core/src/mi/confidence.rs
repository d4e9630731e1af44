//! One-sided keep confidence from repeated loss deltas.

use serde::{Deserialize, Serialize};

/// Repeated measurements of `masked_loss - baseline_loss` for one drop set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossDelta {
    pub repeats: Vec<f32>,
}

impl LossDelta {
    pub fn new(repeats: Vec<f32>) -> Self {
        LossDelta { repeats }
    }

    pub fn mean(&self) -> f32 {
        let n = self.repeats.len().max(1) as f64;
        (self.repeats.iter().map(|&v| v as f64).sum::<f64>() / n) as f32
    }

    /// Sample standard deviation (n - 1 denominator).
    pub fn std(&self) -> f32 {
        let n = self.repeats.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean() as f64;
        let ss: f64 = self
            .repeats
            .iter()
            .map(|&v| {
                let d = v as f64 - mean;
                d * d
            })
            .sum();
        (ss / (n - 1) as f64).sqrt() as f32
    }
}

/// Probability that the true mean delta exceeds zero, i.e. that the dropped
/// nodes really do transfer entropy: `Φ(mean / (std / √R))`.
///
/// Degenerate spread: `std == 0` maps to 1.0 when the mean is positive and
/// 0.0 otherwise. A normal approximation is used instead of a t-distribution;
/// with two or three repeats either choice is an approximation and the normal
/// one is monotone in both arguments.
pub fn keep_confidence(delta: &LossDelta) -> f32 {
    assert!(delta.repeats.len() >= 2, "keep_confidence needs >= 2 repeats");
    let mean = delta.mean() as f64;
    let std = delta.std() as f64;
    if std == 0.0 {
        return if mean > 0.0 { 1.0 } else { 0.0 };
    }
    let z = mean / (std / (delta.repeats.len() as f64).sqrt());
    normal_cdf(z) as f32
}

/// Standard normal CDF via the Abramowitz-Stegun 7.1.26 erf polynomial
/// (absolute error below 1.5e-7).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_spread_positive_mean_is_certain() {
        assert_eq!(keep_confidence(&LossDelta::new(vec![1.0, 1.0, 1.0])), 1.0);
    }

    #[test]
    fn zero_spread_non_positive_mean_is_zero() {
        assert_eq!(keep_confidence(&LossDelta::new(vec![-1.0, -1.0])), 0.0);
        assert_eq!(keep_confidence(&LossDelta::new(vec![0.0, 0.0])), 0.0);
    }

    #[test]
    fn symmetric_repeats_give_half() {
        let c = keep_confidence(&LossDelta::new(vec![-0.3, 0.0, 0.3]));
        assert!((c - 0.5).abs() < 1e-6);
    }

    #[test]
    fn tight_positive_repeats_saturate() {
        // mean 1.0, sample std 0.1 -> z = 1.0 / (0.1/sqrt(3)) ≈ 17.3
        let c = keep_confidence(&LossDelta::new(vec![0.9, 1.0, 1.1]));
        assert!((c - 1.0).abs() < 1e-4);
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-9);
        assert!((normal_cdf(1.0) - 0.841344746).abs() < 1e-6);
        assert!((normal_cdf(-1.96) - 0.024997895).abs() < 1e-6);
    }
}
