//! Contact Hamiltonian vector field and joint flow integration.
//!
//! The vector field convention is
//!
//! ```text
//! X_H = ( -H_y,  H_x + y H_z,  H - y . H_y )
//! ```
//!
//! which satisfies `alpha(X_H) = H` exactly and sends a constant Hamiltonian
//! to the Reeb field d/dz. Along the flow the conformal factor obeys
//! `g' = H_z`, and the joint system integrated here carries
//!
//! * the trajectory `q(t)`,
//! * the conformal factor `g(t)` with `g(t0) = 0`,
//! * its gradient in the initial conditions, `(grad g)' = Dphi^T grad H_z`,
//! * the differential `(Dphi)' = DX_H Dphi` with `Dphi(t0) = Id`.
//!
//! Integration is explicit RK4 with a fixed step count per unit time; census
//! configs choose the count, the default mirrors the solver's needs.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::hamiltonian::{Hamiltonian, HamiltonianDerivs};
use crate::point::ContactPoint;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOpts {
    /// RK4 steps per unit of integration time.
    pub steps_per_unit: usize,
}

impl Default for FlowOpts {
    fn default() -> Self {
        FlowOpts { steps_per_unit: 2000 }
    }
}

impl FlowOpts {
    pub fn with_steps(steps_per_unit: usize) -> Self {
        FlowOpts {
            steps_per_unit: steps_per_unit.max(1),
        }
    }
}

/// Result of flowing a point from t0 to t1: image, conformal factor, its
/// gradient in the initial point, and the differential of the flow map.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub point: ContactPoint,
    pub g: f64,
    pub grad_g: DVector<f64>,
    pub jacobian: DMatrix<f64>,
}

impl FlowState {
    pub fn identity(q: &ContactPoint) -> Self {
        let d = q.dim();
        FlowState {
            point: q.clone(),
            g: 0.0,
            grad_g: DVector::zeros(d),
            jacobian: DMatrix::identity(d, d),
        }
    }
}

/// The Reeb flow for time `delta`: a vertical translation.
pub fn reeb_translate(q: &ContactPoint, delta: f64) -> ContactPoint {
    ContactPoint {
        z: q.z + delta,
        ..q.clone()
    }
}

/// X_H at a point.
pub fn contact_vector_field(ham: &Hamiltonian, q: &ContactPoint, t: f64) -> DVector<f64> {
    let flat = q.flat();
    let d = ham.derivatives(flat.as_slice(), t);
    let mut out = DVector::zeros(ham.dim());
    write_vector_field(ham.n(), &d, flat.as_slice(), out.as_mut_slice());
    out
}

/// DX_H at a point (partial derivatives of the vector field).
pub fn vector_field_jacobian(ham: &Hamiltonian, q: &ContactPoint, t: f64) -> DMatrix<f64> {
    let flat = q.flat();
    let d = ham.derivatives(flat.as_slice(), t);
    let dim = ham.dim();
    let mut a = vec![0.0; dim * dim];
    write_field_jacobian(ham.n(), &d, flat.as_slice(), &mut a);
    DMatrix::from_row_slice(dim, dim, &a)
}

fn write_vector_field(n: usize, d: &HamiltonianDerivs, q: &[f64], out: &mut [f64]) {
    let zi = 2 * n;
    let hz = d.grad[zi];
    let mut y_dot_hy = 0.0;
    for i in 0..n {
        out[i] = -d.grad[n + i];
        out[n + i] = d.grad[i] + q[n + i] * hz;
        y_dot_hy += q[n + i] * d.grad[n + i];
    }
    out[zi] = d.value - y_dot_hy;
}

fn write_field_jacobian(n: usize, d: &HamiltonianDerivs, q: &[f64], a: &mut [f64]) {
    let dim = 2 * n + 1;
    let zi = 2 * n;
    let hz = d.grad[zi];
    for j in 0..dim {
        for i in 0..n {
            // d/dq_j of -H_{y_i}
            a[i * dim + j] = -d.hess[(n + i) * dim + j];
            // d/dq_j of H_{x_i} + y_i H_z
            let mut v = d.hess[i * dim + j] + q[n + i] * d.hess[zi * dim + j];
            if j == n + i {
                v += hz;
            }
            a[(n + i) * dim + j] = v;
        }
        // d/dq_j of H - y . H_y; the y-block gradient term cancels.
        let mut v = if j >= n && j < 2 * n { 0.0 } else { d.grad[j] };
        for i in 0..n {
            v -= q[n + i] * d.hess[(n + i) * dim + j];
        }
        a[zi * dim + j] = v;
    }
}

/// Joint integrator workspace; reused across RK4 stages and steps.
struct Rk4 {
    dim: usize,
    variational: bool,
    derivs: HamiltonianDerivs,
    field_jac: Vec<f64>,
}

impl Rk4 {
    fn new(dim: usize, variational: bool) -> Self {
        Rk4 {
            dim,
            variational,
            derivs: HamiltonianDerivs::zeros(dim),
            field_jac: vec![0.0; dim * dim],
        }
    }

    /// State layout: [q (dim), g, grad_g (dim), Dphi (dim^2 row-major)],
    /// truncated after g when not variational.
    fn rhs(&mut self, ham: &Hamiltonian, t: f64, u: &[f64], du: &mut [f64]) {
        let dim = self.dim;
        let n = dim / 2;
        ham.derivatives_into(&u[..dim], t, &mut self.derivs);
        write_vector_field(n, &self.derivs, &u[..dim], &mut du[..dim]);
        du[dim] = self.derivs.grad[2 * n]; // g' = H_z
        if !self.variational {
            return;
        }

        write_field_jacobian(n, &self.derivs, &u[..dim], &mut self.field_jac);
        let grad_g_off = dim + 1;
        let jac_off = grad_g_off + dim;
        let jac = &u[jac_off..jac_off + dim * dim];

        // (grad g)' = Dphi^T grad H_z; grad H_z is the z row of the Hessian.
        let hess_z = &self.derivs.hess[2 * n * dim..2 * n * dim + dim];
        for j in 0..dim {
            let mut acc = 0.0;
            for i in 0..dim {
                acc += jac[i * dim + j] * hess_z[i];
            }
            du[grad_g_off + j] = acc;
        }

        // (Dphi)' = DX_H * Dphi
        for i in 0..dim {
            let arow = &self.field_jac[i * dim..(i + 1) * dim];
            for j in 0..dim {
                let mut acc = 0.0;
                for kk in 0..dim {
                    acc += arow[kk] * jac[kk * dim + j];
                }
                du[jac_off + i * dim + j] = acc;
            }
        }
    }

    fn integrate(
        &mut self,
        ham: &Hamiltonian,
        state: &mut [f64],
        t0: f64,
        t1: f64,
        steps_per_unit: usize,
    ) -> Result<()> {
        if t0 == t1 {
            return Ok(());
        }
        let span = t1 - t0;
        let steps = ((span.abs() * steps_per_unit as f64).ceil() as usize).max(1);
        let dt = span / steps as f64;
        let len = state.len();
        let mut k1 = vec![0.0; len];
        let mut k2 = vec![0.0; len];
        let mut k3 = vec![0.0; len];
        let mut k4 = vec![0.0; len];
        let mut stage = vec![0.0; len];
        for step in 0..steps {
            let t = t0 + dt * step as f64;
            self.rhs(ham, t, state, &mut k1);
            for i in 0..len {
                stage[i] = state[i] + 0.5 * dt * k1[i];
            }
            self.rhs(ham, t + 0.5 * dt, &stage, &mut k2);
            for i in 0..len {
                stage[i] = state[i] + 0.5 * dt * k2[i];
            }
            self.rhs(ham, t + 0.5 * dt, &stage, &mut k3);
            for i in 0..len {
                stage[i] = state[i] + dt * k3[i];
            }
            self.rhs(ham, t + dt, &stage, &mut k4);

            let w = dt / 6.0;
            for i in 0..len {
                state[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }

            if step % 64 == 63 && !state.iter().all(|v| v.is_finite()) {
                return Err(Error::IntegrationFailure {
                    t: t + dt,
                    reason: "state became non-finite".into(),
                });
            }
        }
        if !state.iter().all(|v| v.is_finite()) {
            return Err(Error::IntegrationFailure {
                t: t1,
                reason: "state became non-finite".into(),
            });
        }
        Ok(())
    }
}

/// Flow `q0` from `t0` to `t1` with full variational data.
///
/// Points outside the support never move: the identity state is returned
/// exactly, bypassing integration.
pub fn flow(
    ham: &Hamiltonian,
    q0: &ContactPoint,
    t0: f64,
    t1: f64,
    opts: FlowOpts,
) -> Result<FlowState> {
    check_dim(ham, q0)?;
    if !ham.support().contains(q0) {
        return Ok(FlowState::identity(q0));
    }
    let dim = ham.dim();
    let mut state = vec![0.0; 2 * dim + 1 + dim * dim];
    let flat = q0.flat();
    state[..dim].copy_from_slice(flat.as_slice());
    let jac_off = dim + 1 + dim;
    for i in 0..dim {
        state[jac_off + i * dim + i] = 1.0;
    }
    let mut rk = Rk4::new(dim, true);
    rk.integrate(ham, &mut state, t0, t1, opts.steps_per_unit)?;

    Ok(FlowState {
        point: ContactPoint::from_flat(&state[..dim], q0.periodic_z),
        g: state[dim],
        grad_g: DVector::from_column_slice(&state[dim + 1..dim + 1 + dim]),
        jacobian: DMatrix::from_row_slice(dim, dim, &state[jac_off..]),
    })
}

/// Fast path: trajectory and conformal factor only. Used for residual
/// evaluations inside line searches where no Jacobian is needed.
pub fn flow_point(
    ham: &Hamiltonian,
    q0: &ContactPoint,
    t0: f64,
    t1: f64,
    opts: FlowOpts,
) -> Result<(ContactPoint, f64)> {
    check_dim(ham, q0)?;
    if !ham.support().contains(q0) {
        return Ok((q0.clone(), 0.0));
    }
    let dim = ham.dim();
    let mut state = vec![0.0; dim + 1];
    let flat = q0.flat();
    state[..dim].copy_from_slice(flat.as_slice());
    let mut rk = Rk4::new(dim, false);
    rk.integrate(ham, &mut state, t0, t1, opts.steps_per_unit)?;
    Ok((ContactPoint::from_flat(&state[..dim], q0.periodic_z), state[dim]))
}

/// Flow with a step-halving error estimate: the result at double resolution
/// together with the max coordinate discrepancy against single resolution.
pub fn flow_checked(
    ham: &Hamiltonian,
    q0: &ContactPoint,
    t0: f64,
    t1: f64,
    opts: FlowOpts,
) -> Result<(FlowState, f64)> {
    let coarse = flow(ham, q0, t0, t1, opts)?;
    let fine = flow(
        ham,
        q0,
        t0,
        t1,
        FlowOpts::with_steps(opts.steps_per_unit * 2),
    )?;
    let mut err: f64 = (coarse.g - fine.g).abs();
    let pc = coarse.point.flat();
    let pf = fine.point.flat();
    for i in 0..pc.len() {
        err = err.max((pc[i] - pf[i]).abs());
    }
    Ok((fine, err))
}

/// Planar Hamiltonian flow of a z-independent catalog member together with
/// the accumulated primitive `F = integral of (H - y . H_y)`, so that the
/// contact flow is `(x, y, z) -> (phi(x, y), z + F(x, y))`.
///
/// Returns the planar image and F. Errors on z-dependent Hamiltonians.
pub fn planar_lift(
    ham: &Hamiltonian,
    xy: &[f64],
    t0: f64,
    t1: f64,
    opts: FlowOpts,
) -> Result<(Vec<f64>, f64)> {
    if !ham.z_independent() {
        return Err(Error::InvalidFamily {
            family: ham.family().into(),
            reason: "planar lift requires a z-independent Hamiltonian".into(),
        });
    }
    let n = ham.n();
    if xy.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: xy.len() / 2,
        });
    }
    let q = ContactPoint::from_flat(&[xy, &[0.0]].concat(), false);
    let (image, _) = flow_point(ham, &q, t0, t1, opts)?;
    let f = image.z; // started at z = 0, so the displacement is z itself
    let mut planar = image.x;
    planar.extend(image.y);
    Ok((planar, f))
}

fn check_dim(ham: &Hamiltonian, q: &ContactPoint) -> Result<()> {
    if ham.n() != q.n() {
        return Err(Error::DimensionMismatch {
            expected: ham.n(),
            got: q.n(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Profile;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn radial_pi() -> Hamiltonian {
        Hamiltonian::radial_twist(1, Profile::Quadratic { c: PI }).unwrap()
    }

    #[test]
    fn radial_field_matches_closed_form() {
        // H = h(x^2 + y^2): X_H = (-2 y h', 2 x h', h - 2 y^2 h').
        let ham = radial_pi();
        let q = ContactPoint::dim3(0.3, -0.2, 0.7, false);
        let s = 0.3f64 * 0.3 + 0.2 * 0.2;
        let (h, dh, _) = Profile::Quadratic { c: PI }.eval(s);
        let x = contact_vector_field(&ham, &q, 0.0);
        assert_abs_diff_eq!(x[0], -2.0 * (-0.2) * dh, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 2.0 * 0.3 * dh, epsilon = 1e-14);
        assert_abs_diff_eq!(x[2], h - 2.0 * 0.04 * dh, epsilon = 1e-14);
    }

    #[test]
    fn alpha_of_field_reproduces_h() {
        let ham = Hamiltonian::z_perturbed_twist(1, Profile::Cubic { c: 1.0 }, 0.3).unwrap();
        let q = ContactPoint::dim3(0.4, 0.1, 0.25, true);
        let x = contact_vector_field(&ham, &q, 0.0);
        let alpha = x[2] - q.y[0] * x[0];
        let h = ham.value(q.flat().as_slice(), 0.0);
        assert_abs_diff_eq!(alpha, h, epsilon = 1e-14);
    }

    #[test]
    fn axis_point_rides_the_reeb_flow() {
        // On the symmetry axis the planar part is fixed and z advances by
        // h(0) per unit time; for the quadratic pi-profile that is pi.
        let ham = radial_pi();
        let q = ContactPoint::dim3(0.0, 0.0, 0.0, false);
        let st = flow(&ham, &q, 0.0, 1.0, FlowOpts::with_steps(1000)).unwrap();
        assert_eq!(st.point.x[0], 0.0);
        assert_eq!(st.point.y[0], 0.0);
        assert_abs_diff_eq!(st.point.z, PI, epsilon = 1e-10);
        assert_eq!(st.g, 0.0); // z-independent Hamiltonian
    }

    #[test]
    fn outside_support_short_circuits_to_identity() {
        let ham = radial_pi();
        let q = ContactPoint::dim3(1.2, 0.9, -3.0, false);
        let st = flow(&ham, &q, 0.0, 1.0, FlowOpts::default()).unwrap();
        assert_eq!(st.point, q);
        assert_eq!(st.g, 0.0);
        assert!(st.jacobian.is_identity(0.0));
        assert_eq!(st.grad_g.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_hamiltonian_flows_identically() {
        let ham = Hamiltonian::radial_twist(1, Profile::Cubic { c: 0.0 }).unwrap();
        let q = ContactPoint::dim3(0.2, 0.1, 0.5, false);
        let st = flow(&ham, &q, 0.0, 1.0, FlowOpts::with_steps(100)).unwrap();
        assert_eq!(st.point, q);
        assert_eq!(st.g, 0.0);
        assert!(st.jacobian.is_identity(0.0));
    }

    #[test]
    fn flow_group_law_in_time() {
        let ham = Hamiltonian::z_perturbed_twist(1, Profile::Cubic { c: 1.0 }, 0.3).unwrap();
        let q = ContactPoint::dim3(0.3, 0.2, 0.1, true);
        let opts = FlowOpts::with_steps(2000);
        let direct = flow(&ham, &q, 0.0, 1.0, opts).unwrap();
        let half = flow(&ham, &q, 0.0, 0.5, opts).unwrap();
        let rest = flow(&ham, &half.point, 0.5, 1.0, opts).unwrap();
        let composed_z = rest.point.z;
        assert_abs_diff_eq!(direct.point.x[0], rest.point.x[0], epsilon = 1e-9);
        assert_abs_diff_eq!(direct.point.y[0], rest.point.y[0], epsilon = 1e-9);
        assert_abs_diff_eq!(direct.point.z, composed_z, epsilon = 1e-9);
        assert_abs_diff_eq!(direct.g, half.g + rest.g, epsilon = 1e-9);
    }

    #[test]
    fn variational_blocks_match_finite_differences() {
        use crate::numeric::central_jacobian;
        use nalgebra::DVector;
        let ham = Hamiltonian::z_perturbed_twist(1, Profile::Cubic { c: 1.0 }, 0.3).unwrap();
        let q = ContactPoint::dim3(0.25, -0.15, 0.4, true);
        let opts = FlowOpts::with_steps(500);
        let st = flow(&ham, &q, 0.0, 1.0, opts).unwrap();

        let fd_jac = central_jacobian(
            |v| {
                let p = ContactPoint::from_flat(v.as_slice(), true);
                flow(&ham, &p, 0.0, 1.0, opts).unwrap().point.flat()
            },
            &q.flat(),
            1e-6,
        );
        assert!((st.jacobian.clone() - fd_jac).abs().max() < 1e-6);

        let fd_grad_g = central_jacobian(
            |v| {
                let p = ContactPoint::from_flat(v.as_slice(), true);
                DVector::from_vec(vec![flow(&ham, &p, 0.0, 1.0, opts).unwrap().g])
            },
            &q.flat(),
            1e-6,
        );
        for j in 0..3 {
            assert_abs_diff_eq!(st.grad_g[j], fd_grad_g[(0, j)], epsilon = 1e-6);
        }
    }

    #[test]
    fn step_halving_estimate_is_small_for_smooth_flows() {
        let ham = radial_pi();
        let q = ContactPoint::dim3(0.3, 0.2, 0.0, false);
        let (_, err) = flow_checked(&ham, &q, 0.0, 1.0, FlowOpts::with_steps(500)).unwrap();
        assert!(err < 2e-8, "halving discrepancy {err}");
    }

    #[test]
    fn planar_lift_displacement_matches_contact_flow() {
        let ham = Hamiltonian::hamiltonian_lift(1, Profile::Cubic { c: 0.7 }, 1.0, 2.0).unwrap();
        let opts = FlowOpts::with_steps(500);
        let (planar, f) = planar_lift(&ham, &[0.2, 0.1], 0.0, 1.0, opts).unwrap();
        let st = flow(&ham, &ContactPoint::dim3(0.2, 0.1, 5.0, false), 0.0, 1.0, opts).unwrap();
        assert_abs_diff_eq!(planar[0], st.point.x[0], epsilon = 1e-12);
        assert_abs_diff_eq!(planar[1], st.point.y[0], epsilon = 1e-12);
        assert_abs_diff_eq!(st.point.z - 5.0, f, epsilon = 1e-12);
    }

    #[test]
    fn lift_of_z_dependent_hamiltonian_is_rejected() {
        let ham = Hamiltonian::z_perturbed_twist(1, Profile::Cubic { c: 1.0 }, 0.3).unwrap();
        assert!(planar_lift(&ham, &[0.1, 0.1], 0.0, 1.0, FlowOpts::default()).is_err());
    }
}
