//! Small numerical helpers: central differences and grid generation.

use nalgebra::{DMatrix, DVector};

/// Central-difference Jacobian of `f: R^m -> R^k` at `x`.
pub fn central_jacobian<F>(f: F, x: &DVector<f64>, step: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let m = x.len();
    let probe = f(x);
    let k = probe.len();
    let mut jac = DMatrix::zeros(k, m);
    let mut xp = x.clone();
    let mut xm = x.clone();
    for j in 0..m {
        xp[j] = x[j] + step;
        xm[j] = x[j] - step;
        let fp = f(&xp);
        let fm = f(&xm);
        for i in 0..k {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    jac
}

/// Central-difference gradient of a scalar function.
pub fn central_gradient<F>(f: F, x: &DVector<f64>, step: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let m = x.len();
    let mut grad = DVector::zeros(m);
    let mut xp = x.clone();
    let mut xm = x.clone();
    for j in 0..m {
        xp[j] = x[j] + step;
        xm[j] = x[j] - step;
        grad[j] = (f(&xp) - f(&xm)) / (2.0 * step);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    grad
}

/// `count` evenly spaced values on `[lo, hi]`, endpoints included.
/// A single point falls on the midpoint.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let step = (hi - lo) / (count as f64 - 1.0);
            (0..count).map(|i| lo + step * i as f64).collect()
        }
    }
}

/// `count` evenly spaced values on the half-open interval `[lo, hi)`,
/// the natural sampling of a circle fundamental domain.
pub fn linspace_half_open(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / count.max(1) as f64;
    (0..count).map(|i| lo + step * i as f64).collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_jacobian_matches_linear_map() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let f = |x: &DVector<f64>| &a * x;
        let x = DVector::from_vec(vec![0.3, -0.7, 1.1]);
        let jac = central_jacobian(f, &x, 1e-5);
        assert!((jac - a).abs().max() < 1e-9);
    }

    #[test]
    fn linspace_endpoints_and_midpoint() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(-1.0, 1.0, 1), vec![0.0]);
        assert_eq!(linspace_half_open(0.0, 1.0, 4), vec![0.0, 0.25, 0.5, 0.75]);
    }
}
