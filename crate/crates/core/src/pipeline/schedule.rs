//! The keep-confidence schedule: values of x that approach certainty at a
//! decreasing rate, `x_n = x_{n-1} + (1 - x_{n-1}) * r`.

use crate::error::{MippError, Result};

/// Generate `steps` confidence values starting at `x0`, on the [0, 1] scale.
/// Strictly increasing for `0 < r < 1`, approaching 1.
pub fn confidence_schedule(x0: f64, r: f64, steps: usize) -> Result<Vec<f64>> {
    if !(0.5..1.0).contains(&x0) {
        return Err(MippError::Config(format!(
            "schedule x0 must be in [0.5, 1), got {x0}"
        )));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(MippError::Config(format!(
            "schedule rate must be in (0, 1), got {r}"
        )));
    }
    if steps == 0 {
        return Err(MippError::Config("schedule needs at least one step".into()));
    }
    let mut values = Vec::with_capacity(steps);
    let mut x = x0;
    values.push(x);
    for _ in 1..steps {
        x += (1.0 - x) * r;
        values.push(x);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_gap_schedule() {
        let xs = confidence_schedule(0.5, 0.5, 3).unwrap();
        assert_eq!(xs[0], 0.5);
        assert!((xs[1] - 0.75).abs() < 1e-15);
        assert!((xs[2] - 0.875).abs() < 1e-15);
    }

    #[test]
    fn closed_form_for_default_params() {
        let xs = confidence_schedule(0.5, 0.5, 20).unwrap();
        for (n, &x) in xs.iter().enumerate() {
            let expect = 1.0 - 0.5f64.powi(n as i32 + 1);
            assert!((x - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_rate_stays_near_x0() {
        let xs = confidence_schedule(0.6, 1e-12, 5).unwrap();
        for &x in &xs {
            assert!((x - 0.6).abs() < 1e-11);
        }
    }

    #[test]
    fn strictly_increasing() {
        let xs = confidence_schedule(0.5, 0.3, 20).unwrap();
        for pair in xs.windows(2) {
            assert!(pair[1] > pair[0]);
            assert!(pair[1] < 1.0);
        }
    }
}
