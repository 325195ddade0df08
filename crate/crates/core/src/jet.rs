//! The graph of a contactomorphism as a Legendrian in 1-jet space.
//!
//! A contactomorphism phi with conformal factor g embeds into the 1-jet
//! space of R^{2n+1} (base coordinates, fiber momenta, jet value):
//!
//! ```text
//! base  = (x, Y, z)
//! p     = (Y - e^g y,  x - X,  e^g - 1)
//! theta = (x - X) . Y + Z - z
//! ```
//!
//! writing (X, Y, Z) = phi(x, y, z). The image is Legendrian: the jet form
//! d(theta) - p . d(base) pulls back to (dZ - Y.dX) - e^g (dz - y.dx), which
//! vanishes identically by the conformal relation phi* alpha = e^g alpha.
//! The residual of that identity, assembled from the graph's Jacobian rows,
//! is an independent correctness channel for the whole flow/variational
//! pipeline: it is small only if the map, its conformal factor, the factor's
//! gradient, and the map's Jacobian are all mutually consistent.
//!
//! The zero wall {p = 0} meets the graph exactly at the translated points of
//! phi, where theta equals the contact action; solving p = 0 directly gives
//! a second, independently assembled root-finding channel to cross-check the
//! census.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::map::{ContactMap, MapEvaluation};
use crate::newton::{damped_newton, NewtonSystem};
use crate::point::ContactPoint;
use crate::translated::{find_translated_points, grid_seeds, FindOpts};
use crate::Result;

/// One point of the graph in jet coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JetGraphPoint {
    pub base: Vec<f64>,
    pub p: Vec<f64>,
    pub theta: f64,
}

impl JetGraphPoint {
    pub fn p_norm(&self) -> f64 {
        crate::numeric::max_abs(&self.p)
    }
}

pub fn gamma_from_eval(q: &ContactPoint, ev: &MapEvaluation) -> JetGraphPoint {
    let n = q.n();
    let eg = ev.g.exp();
    let mut base = Vec::with_capacity(2 * n + 1);
    base.extend_from_slice(&q.x);
    base.extend_from_slice(&ev.image.y);
    base.push(q.z);

    let mut p = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        p.push(ev.image.y[i] - eg * q.y[i]);
    }
    for i in 0..n {
        p.push(q.x[i] - ev.image.x[i]);
    }
    p.push(eg - 1.0);

    let mut theta = ev.image.z - q.z;
    for i in 0..n {
        theta += (q.x[i] - ev.image.x[i]) * ev.image.y[i];
    }
    JetGraphPoint { base, p, theta }
}

pub fn gamma(m: &ContactMap, q: &ContactPoint) -> Result<JetGraphPoint> {
    Ok(gamma_from_eval(q, &m.evaluate(q)?))
}

/// Jacobian of the full jet-coordinate tuple (base, p, theta) with respect
/// to the source point: (4n + 3) rows by (2n + 1) columns, base rows first,
/// then p rows, then the theta row.
pub fn gamma_jacobian_from_eval(q: &ContactPoint, ev: &MapEvaluation) -> DMatrix<f64> {
    let n = q.n();
    let dim = 2 * n + 1;
    let eg = ev.g.exp();
    let jac = &ev.jacobian;
    let mut out = DMatrix::zeros(4 * n + 3, dim);

    // Base rows: x block is the identity, Y block is the Y rows of Dphi,
    // z row is e_z.
    for i in 0..n {
        out[(i, i)] = 1.0;
        for j in 0..dim {
            out[(n + i, j)] = jac[(n + i, j)];
        }
    }
    out[(2 * n, dim - 1)] = 1.0;

    // p rows.
    let row0 = 2 * n + 1;
    for i in 0..n {
        // d(Y_i - e^g y_i) = J_Y_i - e^g (y_i grad_g + e_{n+i})
        for j in 0..dim {
            out[(row0 + i, j)] = jac[(n + i, j)] - eg * q.y[i] * ev.grad_g[j];
        }
        out[(row0 + i, n + i)] -= eg;
        // d(x_i - X_i) = e_i - J_X_i
        for j in 0..dim {
            out[(row0 + n + i, j)] = -jac[(i, j)];
        }
        out[(row0 + n + i, i)] += 1.0;
    }
    // d(e^g - 1) = e^g grad_g
    for j in 0..dim {
        out[(row0 + 2 * n, j)] = eg * ev.grad_g[j];
    }

    // theta row: sum_i [ Y_i e_i + (x_i - X_i) J_Y_i - Y_i J_X_i ] + J_Z - e_z.
    let trow = 4 * n + 2;
    for j in 0..dim {
        out[(trow, j)] = jac[(2 * n, j)];
    }
    out[(trow, dim - 1)] -= 1.0;
    for i in 0..n {
        out[(trow, i)] += ev.image.y[i];
        let xi_m = q.x[i] - ev.image.x[i];
        for j in 0..dim {
            out[(trow, j)] += xi_m * jac[(n + i, j)] - ev.image.y[i] * jac[(i, j)];
        }
    }
    out
}

pub fn gamma_jacobian(m: &ContactMap, q: &ContactPoint) -> Result<DMatrix<f64>> {
    Ok(gamma_jacobian_from_eval(q, &m.evaluate(q)?))
}

/// The Legendrian defect assembled from the graph's own Jacobian rows:
/// the sup-norm of d(theta) - sum_j p_j d(base_j) as a covector at q.
/// Identically zero for an exact contactomorphism with exact variational
/// data; in practice it measures the internal consistency of the integrated
/// map, conformal factor, gradient, and Jacobian.
pub fn legendrian_residual_from_eval(q: &ContactPoint, ev: &MapEvaluation) -> f64 {
    let n = q.n();
    let dim = 2 * n + 1;
    let graph = gamma_from_eval(q, ev);
    let jac = gamma_jacobian_from_eval(q, ev);
    let mut worst: f64 = 0.0;
    for j in 0..dim {
        let mut l = jac[(4 * n + 2, j)];
        for (bi, pv) in graph.p.iter().enumerate() {
            l -= pv * jac[(bi, j)];
        }
        worst = worst.max(l.abs());
    }
    worst
}

pub fn legendrian_residual(m: &ContactMap, q: &ContactPoint) -> Result<f64> {
    Ok(legendrian_residual_from_eval(q, &m.evaluate(q)?))
}

/// Largest Legendrian residual over a seed grid (support-filtered, same
/// sampling as the census seeds).
pub fn max_legendrian_residual(
    m: &ContactMap,
    grid: [usize; 3],
    z_window: (f64, f64),
) -> Result<f64> {
    let seeds = grid_seeds(m, grid, z_window);
    let worst = seeds
        .par_iter()
        .map(|q| legendrian_residual(m, q))
        .try_reduce(|| 0.0_f64, |a, b| Ok(a.max(b)))?;
    Ok(worst)
}

struct WallSystem {
    map: ContactMap,
    periodic_z: bool,
}

impl NewtonSystem for WallSystem {
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let q = ContactPoint::from_flat(x.as_slice(), self.periodic_z);
        let graph = gamma(&self.map, &q)?;
        Ok(DVector::from_vec(graph.p))
    }

    fn residual_and_jacobian(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let q = ContactPoint::from_flat(x.as_slice(), self.periodic_z);
        let ev = self.map.evaluate(&q)?;
        let graph = gamma_from_eval(&q, &ev);
        let full = gamma_jacobian_from_eval(&q, &ev);
        let n = q.n();
        let dim = 2 * n + 1;
        let jac = full.rows(dim, dim).into_owned();
        Ok((DVector::from_vec(graph.p), jac))
    }
}

/// Cross-validation of the census through the graph channel.
#[derive(Debug, Clone, Serialize)]
pub struct WallCrossReport {
    pub k: usize,
    /// Interior clusters found by the translated-point channel.
    pub residual_clusters: usize,
    /// Interior zeros of the wall system p = 0 found from the same seeds.
    pub graph_points: usize,
    /// Largest |p|_inf over the translated-point channel's members.
    pub max_p_norm: f64,
    /// Largest |theta - action| over the translated-point channel's members.
    pub max_theta_dev: f64,
    /// Graph-channel zeros not within geom_tol of any translated-point
    /// member.
    pub unmatched_graph_points: Vec<ContactPoint>,
    /// Translated-point clusters with no graph-channel zero within geom_tol
    /// of any member.
    pub unmatched_clusters: Vec<ContactPoint>,
    pub pass: bool,
}

/// Solve the translated-point problem through both channels from one seed
/// grid and compare: every wall zero must be a census point and every census
/// cluster must be re-found through the wall.
pub fn zero_wall_cross_check(
    m: &ContactMap,
    k: usize,
    grid: [usize; 3],
    z_window: (f64, f64),
    opts: &FindOpts,
) -> Result<WallCrossReport> {
    let seeds = grid_seeds(m, grid, z_window);
    let outcome = find_translated_points(m, k, &seeds, opts)?;

    let mk = m.iterate(k);
    // Forward: jet coordinates evaluated at the residual channel's points.
    let mut max_p_norm: f64 = 0.0;
    let mut max_theta_dev: f64 = 0.0;
    for t in &outcome.members {
        let graph = gamma(&mk, &t.point)?;
        max_p_norm = max_p_norm.max(graph.p_norm());
        max_theta_dev = max_theta_dev.max((graph.theta - t.action).abs());
    }

    // Converse: independent multistart on the wall system.
    let system = WallSystem {
        map: mk.clone(),
        periodic_z: m.periodic_z(),
    };
    let wall_results: Vec<Option<DVector<f64>>> = seeds
        .par_iter()
        .map(|seed| match damped_newton(&system, &seed.flat(), &opts.newton) {
            Ok(o) if o.converged => Some(o.x),
            _ => None,
        })
        .collect();
    let mut wall_points: Vec<ContactPoint> = Vec::new();
    for x in wall_results.into_iter().flatten() {
        let q = ContactPoint::from_flat(x.as_slice(), m.periodic_z());
        if mk.sigma_min(&q) <= 1.0 - opts.interior_margin {
            wall_points.push(q);
        }
    }

    let members: Vec<&ContactPoint> = outcome.members.iter().map(|t| &t.point).collect();
    let mut unmatched_graph_points = Vec::new();
    for q in &wall_points {
        let near = members.iter().any(|p| p.distance(q) <= opts.geom_tol);
        if !near {
            unmatched_graph_points.push(q.clone());
        }
    }
    let mut unmatched_clusters = Vec::new();
    for cluster in &outcome.clusters {
        let near = cluster.member_indices.iter().any(|&mi| {
            let p = &outcome.members[mi].point;
            wall_points.iter().any(|w| w.distance(p) <= opts.geom_tol)
        });
        if !near {
            unmatched_clusters.push(cluster.representative.point.clone());
        }
    }

    Ok(WallCrossReport {
        k,
        residual_clusters: outcome.clusters.len(),
        graph_points: wall_points.len(),
        max_p_norm,
        max_theta_dev,
        pass: unmatched_graph_points.is_empty() && unmatched_clusters.is_empty(),
        unmatched_graph_points,
        unmatched_clusters,
    })
}

/// A tampered evaluation for negative controls: the conformal data is
/// zeroed as if the map were assumed to preserve the contact form on the
/// nose. For any genuinely z-dependent family the Legendrian residual must
/// blow past tolerance somewhere, proving the residual actually watches the
/// conformal factor.
pub fn corrupt_conformal_data(ev: &MapEvaluation) -> MapEvaluation {
    let mut bad = ev.clone();
    bad.g = 0.0;
    for v in bad.grad_g.iter_mut() {
        *v = 0.0;
    }
    bad
}
