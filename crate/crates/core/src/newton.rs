//! Damped Newton iteration for square systems with possibly singular
//! Jacobians.
//!
//! Translated-point residuals are degenerate along symmetry directions
//! (solution sets are circles and vertical lines), so the linear solve uses
//! a truncated-SVD pseudo-inverse: the step is the minimum-norm least-squares
//! solution, which converges onto solution manifolds instead of blowing up.
//! A backtracking line search on the squared residual keeps far seeds under
//! control.

use nalgebra::{DMatrix, DVector};

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOpts {
    /// Convergence threshold on the residual 2-norm.
    pub tol: f64,
    pub max_iters: usize,
    /// Armijo slope fraction for accepting a damped step.
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Relative singular-value cutoff of the pseudo-inverse. Zeros of maps
    /// produced by numerical integration come in families (circles, vertical
    /// lines), so near a solution the Jacobian carries near-null directions
    /// whose singular values are dominated by integration error; treating
    /// them as exact zeros keeps the step minimum-norm instead of letting a
    /// noise-scale singular value inject a huge tangential component.
    pub svd_cutoff: f64,
    /// Residual-proportional cutoff: singular values below
    /// `residual_cutoff * ||F||` are truncated as well. Along a curved
    /// solution manifold the tangential singular value scales with the
    /// residual itself, so the tangential residual component carries no
    /// usable information; a nondegenerate direction has a singular value
    /// that dominates the residual near the solution and is never cut.
    pub residual_cutoff: f64,
}

impl Default for NewtonOpts {
    fn default() -> Self {
        NewtonOpts {
            tol: 1e-9,
            max_iters: 50,
            armijo: 1e-4,
            max_backtracks: 30,
            svd_cutoff: 1e-8,
            residual_cutoff: 4.0,
        }
    }
}

impl NewtonOpts {
    pub fn with_tol(tol: f64) -> Self {
        NewtonOpts {
            tol,
            ..NewtonOpts::default()
        }
    }
}

/// A square root-finding problem. The Jacobian evaluation returns the
/// residual as well since both come from one flow integration.
pub trait NewtonSystem {
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn residual_and_jacobian(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>;
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Run damped Newton from `x0`. Evaluation errors propagate; failure to
/// converge is reported in the outcome, not as an error.
pub fn damped_newton<S: NewtonSystem>(
    system: &S,
    x0: &DVector<f64>,
    opts: &NewtonOpts,
) -> Result<NewtonOutcome> {
    let mut x = x0.clone();
    let mut f = system.residual(&x)?;
    let mut fnorm = f.norm();
    let mut iters_done = 0;

    for iter in 0..opts.max_iters {
        iters_done = iter;
        if fnorm <= opts.tol {
            return Ok(NewtonOutcome {
                x,
                residual_norm: fnorm,
                iterations: iter,
                converged: true,
            });
        }

        let (fx, jac) = system.residual_and_jacobian(&x)?;
        f = fx;
        fnorm = f.norm();
        if fnorm <= opts.tol {
            return Ok(NewtonOutcome {
                x,
                residual_norm: fnorm,
                iterations: iter,
                converged: true,
            });
        }

        let svd = jac.svd(true, true);
        let sigma_max = svd.singular_values.max();
        let step = match (svd.u.as_ref(), svd.v_t.as_ref()) {
            (Some(u), Some(v_t)) => {
                // Truncated pseudo-inverse. A singular value is dropped when
                // it is (a) numerically null relative to sigma_max, or
                // (b) residual-scale AND small relative to sigma_max: such
                // directions carry curvature noise, not root information.
                let uf = u.transpose() * &f;
                let mut step = DVector::zeros(x.len());
                for (i, &s) in svd.singular_values.iter().enumerate() {
                    if s <= opts.svd_cutoff * sigma_max
                        || (s <= opts.residual_cutoff * fnorm && s <= 0.1 * sigma_max)
                    {
                        continue;
                    }
                    step += v_t.row(i).transpose() * (-uf[i] / s);
                }
                step
            }
            _ => break,
        };
        if !step.iter().all(|v| v.is_finite()) {
            break;
        }
        if step.norm() <= 1e-16 * (1.0 + x.norm()) {
            break; // plateau: the pseudo-inverse cannot improve further
        }

        // Backtracking on ||f||^2.
        let f2 = fnorm * fnorm;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_backtracks {
            let trial = &x + &step * t;
            let ft = system.residual(&trial)?;
            let ft2 = ft.norm_squared();
            if ft2.is_finite() && ft2 <= (1.0 - opts.armijo * t) * f2 {
                x = trial;
                fnorm = ft.norm();
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break; // stalled line search
        }
        iters_done = iter + 1;
    }

    Ok(NewtonOutcome {
        converged: fnorm <= opts.tol,
        residual_norm: fnorm,
        iterations: iters_done,
        x,
    })
}

/// Smallest singular value, the nondegeneracy measure of a solution.
pub fn min_singular_value(jac: &DMatrix<f64>) -> f64 {
    let svd = jac.clone().svd(false, false);
    svd.singular_values.min()
}
