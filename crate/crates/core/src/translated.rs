//! Translated points of iterated contactomorphisms.
//!
//! A point q is a translated point of phi when phi(q) lies on the same Reeb
//! orbit as q and the conformal factor vanishes there: the residual is
//!
//! ```text
//! r(q) = ( phi_x(q) - x, phi_y(q) - y, g(q) )      in R^{2n+1}
//! ```
//!
//! identical in the circle case since Reeb orbits are the vertical lines /
//! circles and the z coordinate is unconstrained. The contact action of a
//! translated point is the Reeb displacement `phi_z(q) - z`, measured on real
//! lifts. Solutions are found by damped Newton from a seed set; symmetric
//! families produce whole circles of solutions, which the solver handles via
//! minimum-norm steps and the deduplication layer collapses into clusters.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dedupe::{single_linkage, Cluster};
use crate::error::Error;
use crate::map::{ContactMap, MapEvaluation};
use crate::newton::{
    damped_newton, min_singular_value, NewtonOpts, NewtonOutcome, NewtonSystem,
};
use crate::point::ContactPoint;
use crate::Result;

/// The translated-point residual of a map evaluation.
pub fn residual_from_eval(q: &ContactPoint, ev: &MapEvaluation) -> DVector<f64> {
    let n = q.n();
    let mut r = DVector::zeros(2 * n + 1);
    for i in 0..n {
        r[i] = ev.image.x[i] - q.x[i];
        r[n + i] = ev.image.y[i] - q.y[i];
    }
    r[2 * n] = ev.g;
    r
}

/// Jacobian of the residual: the planar rows of `Dphi - Id` over grad g.
pub fn residual_jacobian_from_eval(ev: &MapEvaluation) -> DMatrix<f64> {
    let dim = ev.jacobian.nrows();
    let mut jac = DMatrix::zeros(dim, dim);
    for i in 0..dim - 1 {
        for j in 0..dim {
            jac[(i, j)] = ev.jacobian[(i, j)] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..dim {
        jac[(dim - 1, j)] = ev.grad_g[j];
    }
    jac
}

pub fn residual(m: &ContactMap, q: &ContactPoint) -> Result<DVector<f64>> {
    let (image, g) = m.evaluate_point(q)?;
    let n = q.n();
    let mut r = DVector::zeros(2 * n + 1);
    for i in 0..n {
        r[i] = image.x[i] - q.x[i];
        r[n + i] = image.y[i] - q.y[i];
    }
    r[2 * n] = g;
    Ok(r)
}

pub fn residual_jacobian(m: &ContactMap, q: &ContactPoint) -> Result<DMatrix<f64>> {
    Ok(residual_jacobian_from_eval(&m.evaluate(q)?))
}

/// Contact action of a verified translated point of the k-th iterate:
/// the Reeb displacement on real lifts. Errors when the residual exceeds
/// `tol`.
pub fn action_of(m: &ContactMap, k: usize, q: &ContactPoint, tol: f64) -> Result<f64> {
    let mk = m.iterate(k);
    let (image, g) = mk.evaluate_point(q)?;
    let r = {
        let n = q.n();
        let mut r = DVector::zeros(2 * n + 1);
        for i in 0..n {
            r[i] = image.x[i] - q.x[i];
            r[n + i] = image.y[i] - q.y[i];
        }
        r[2 * n] = g;
        r
    };
    let rnorm = r.norm();
    if rnorm > tol {
        return Err(Error::NotTranslated {
            k,
            residual: rnorm,
            tol,
        });
    }
    Ok(image.z - q.z)
}

struct TranslatedSystem {
    map: ContactMap,
    periodic_z: bool,
}

impl NewtonSystem for TranslatedSystem {
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let q = ContactPoint::from_flat(x.as_slice(), self.periodic_z);
        residual(&self.map, &q)
    }

    fn residual_and_jacobian(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let q = ContactPoint::from_flat(x.as_slice(), self.periodic_z);
        let ev = self.map.evaluate(&q)?;
        Ok((residual_from_eval(&q, &ev), residual_jacobian_from_eval(&ev)))
    }
}

/// One verified translated point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslatedPoint {
    pub point: ContactPoint,
    pub k: usize,
    pub action: f64,
    pub residual_norm: f64,
    /// Smallest singular value of the residual Jacobian exceeds the rank
    /// tolerance: the point is isolated rather than part of a continuum.
    pub nondegenerate: bool,
    /// Strictly inside the support; edge solutions are trivial.
    pub interior: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FindOpts {
    pub newton: NewtonOpts,
    /// Deduplication metric threshold.
    pub geom_tol: f64,
    /// Margin (in the support quadratic form) separating interior solutions
    /// from trivial edge solutions. A compactly supported profile vanishing
    /// to order `p` at the support boundary leaves a shell of width roughly
    /// `(tol / scale)^(1/(p-1))` where the residual sits below the Newton
    /// tolerance even though nothing moves; the margin must dominate that
    /// shell (about `1e-4` for cubic profiles at `tol = 1e-7`) while staying
    /// below the distance of any genuine orbit to the boundary.
    pub interior_margin: f64,
    /// Nondegeneracy threshold on the smallest singular value.
    pub rank_tol: f64,
    /// Extend degenerate clusters by predictor-corrector continuation along
    /// the planar null directions of the residual Jacobian, closing chains
    /// that grid seeding alone samples too sparsely.
    pub trace_continua: bool,
}

impl Default for FindOpts {
    fn default() -> Self {
        FindOpts {
            newton: NewtonOpts::default(),
            geom_tol: 0.05,
            interior_margin: 1e-2,
            rank_tol: 1e-6,
            trace_continua: true,
        }
    }
}

/// A deduplicated cluster of translated points at a fixed iterate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionCluster {
    pub representative: TranslatedPoint,
    /// Indices into the member list this cluster was built from.
    pub member_indices: Vec<usize>,
    /// More than ten members chained beyond a single tolerance ball: the
    /// cluster traces a continuum (circle or vertical segment), not an
    /// isolated point.
    pub continuum: bool,
    /// Largest coordinate extent of the cluster.
    pub extent: f64,
}

impl SolutionCluster {
    pub fn member_count(&self) -> usize {
        self.member_indices.len()
    }
}

/// Everything the multistart solve produced at one iterate.
#[derive(Debug, Clone)]
pub struct FindOutcome {
    pub k: usize,
    /// Interior clusters, canonically ordered.
    pub clusters: Vec<SolutionCluster>,
    /// Trivial clusters glued to the support edge.
    pub boundary: Vec<SolutionCluster>,
    /// Every converged interior point, canonically ordered; the raw material
    /// for cross-iterate clustering.
    pub members: Vec<TranslatedPoint>,
    pub seeds: usize,
    pub converged: usize,
    pub solver_failures: usize,
    /// True when no seed converged: an empty result that must not be read
    /// as a verified absence of solutions.
    pub none_found: bool,
}

impl FindOutcome {
    /// The deduplicated interior translated points (cluster representatives).
    pub fn points(&self) -> Vec<TranslatedPoint> {
        self.clusters.iter().map(|c| c.representative.clone()).collect()
    }
}

/// Multistart damped Newton over `seeds` for the k-th iterate of `m`.
pub fn find_translated_points(
    m: &ContactMap,
    k: usize,
    seeds: &[ContactPoint],
    opts: &FindOpts,
) -> Result<FindOutcome> {
    let mk = m.iterate(k);
    let periodic = m.periodic_z();
    let system = TranslatedSystem {
        map: mk.clone(),
        periodic_z: periodic,
    };

    let results: Vec<std::result::Result<Option<NewtonOutcome>, String>> = seeds
        .par_iter()
        .map(|seed| {
            match damped_newton(&system, &seed.flat(), &opts.newton) {
                Ok(out) if out.converged => Ok(Some(out)),
                Ok(_) => Ok(None),
                Err(e) => Err(e.to_string()),
            }
        })
        .collect();

    let mut converged_points: Vec<(ContactPoint, f64)> = Vec::new();
    let mut solver_failures = 0usize;
    for r in results {
        match r {
            Ok(Some(out)) => {
                let q = ContactPoint::from_flat(out.x.as_slice(), periodic);
                converged_points.push((q, out.residual_norm));
            }
            Ok(None) => {}
            Err(_) => solver_failures += 1,
        }
    }
    let converged = converged_points.len();

    // Canonical order makes clustering and output deterministic regardless
    // of scheduling.
    converged_points.sort_by(|a, b| lex_cmp(&a.0, &b.0));

    // Classify and enrich each solution once.
    let mut interior_members: Vec<TranslatedPoint> = Vec::new();
    let mut boundary_members: Vec<TranslatedPoint> = Vec::new();
    for (q, rnorm) in converged_points {
        let tp = classify_solution(&mk, k, q, rnorm, opts)?;
        if tp.interior {
            interior_members.push(tp);
        } else {
            boundary_members.push(tp);
        }
    }

    let mut clusters = make_clusters(&interior_members, opts.geom_tol);

    // Degenerate clusters usually sample a continuum at the angular
    // quantization of the seed grid, which can leave gaps wider than the
    // linkage tolerance; walking the continuum closes them.
    if opts.trace_continua {
        let mut traced_points: Vec<ContactPoint> = Vec::new();
        let mut extra: Vec<TranslatedPoint> = Vec::new();
        for cluster in &clusters {
            let rep = &cluster.representative;
            if rep.nondegenerate {
                continue;
            }
            // Skip fragments of a continuum another trace already covered.
            if traced_points
                .iter()
                .any(|p| p.distance(&rep.point) <= opts.geom_tol)
            {
                continue;
            }
            let walked = trace_continuum(&mk, rep, opts)?;
            traced_points.extend(walked.iter().map(|t| t.point.clone()));
            extra.extend(walked);
        }
        if !extra.is_empty() {
            interior_members.extend(extra);
            interior_members.sort_by(|a, b| lex_cmp(&a.point, &b.point));
            clusters = make_clusters(&interior_members, opts.geom_tol);
        }
    }

    let boundary = make_clusters(&boundary_members, opts.geom_tol);

    Ok(FindOutcome {
        k,
        none_found: interior_members.is_empty() && boundary_members.is_empty(),
        clusters,
        boundary,
        members: interior_members,
        seeds: seeds.len(),
        converged,
        solver_failures,
    })
}

/// Evaluate a converged solution once: action, nondegeneracy, interiority.
fn classify_solution(
    mk: &ContactMap,
    k: usize,
    q: ContactPoint,
    residual_norm: f64,
    opts: &FindOpts,
) -> Result<TranslatedPoint> {
    let ev = mk.evaluate(&q)?;
    let action = ev.image.z - q.z;
    let jac = residual_jacobian_from_eval(&ev);
    Ok(TranslatedPoint {
        interior: mk.sigma_min(&q) <= 1.0 - opts.interior_margin,
        nondegenerate: min_singular_value(&jac) > opts.rank_tol,
        point: q,
        k,
        action,
        residual_norm,
    })
}

/// Unit planar tangent of the solution set at a degenerate zero: the
/// component of the residual Jacobian's null space orthogonal to the pure
/// z direction. `prev` keeps the walk orientation consistent.
fn planar_null_direction(
    jac: &DMatrix<f64>,
    rank_tol: f64,
    prev: Option<&DVector<f64>>,
) -> Option<DVector<f64>> {
    let dim = jac.ncols();
    let svd = jac.clone().svd(false, true);
    let v_t = svd.v_t.as_ref()?;
    let sigma_max = svd.singular_values.max();
    let cutoff = rank_tol * sigma_max.max(1.0);
    let null_basis: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= cutoff)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if null_basis.is_empty() {
        return None;
    }
    let project = |w: &DVector<f64>| -> DVector<f64> {
        null_basis
            .iter()
            .fold(DVector::zeros(dim), |acc, v| acc + v * v.dot(w))
    };
    let candidate = match prev {
        Some(p) => project(p),
        None => {
            // Seed with the planar coordinate direction that survives the
            // projection best; pure-z null spaces yield nothing to walk.
            let mut best: Option<DVector<f64>> = None;
            for j in 0..dim - 1 {
                let mut e = DVector::zeros(dim);
                e[j] = 1.0;
                let w = project(&e);
                if best.as_ref().is_none_or(|b| w.norm() > b.norm()) {
                    best = Some(w);
                }
            }
            best?
        }
    };
    // Drop the z component so the walk explores new planar geometry
    // instead of sliding along the known Reeb direction.
    let mut d = candidate;
    d[dim - 1] = 0.0;
    let norm = d.norm();
    if norm < 0.3 {
        return None;
    }
    Some(d / norm)
}

/// Predictor-corrector walk along a solution continuum, starting from a
/// verified degenerate translated point. Returns the points visited.
fn trace_continuum(
    mk: &ContactMap,
    start: &TranslatedPoint,
    opts: &FindOpts,
) -> Result<Vec<TranslatedPoint>> {
    let delta = 0.5 * opts.geom_tol;
    let periodic = start.point.periodic_z;
    let system = TranslatedSystem {
        map: mk.clone(),
        periodic_z: periodic,
    };
    let newton = NewtonOpts {
        max_iters: 20,
        ..opts.newton
    };

    let start_flat = start.point.flat();
    let ev0 = mk.evaluate(&start.point)?;
    let jac0 = residual_jacobian_from_eval(&ev0);
    let Some(dir0) = planar_null_direction(&jac0, opts.rank_tol, None) else {
        return Ok(Vec::new());
    };

    // Generous cap: several times around the largest circle that fits in
    // the support.
    let max_steps = ((24.0 / delta).ceil() as usize).min(20_000);
    let mut out: Vec<TranslatedPoint> = Vec::new();
    let mut closed = false;

    for sign in [1.0, -1.0] {
        if closed {
            break;
        }
        let mut q = start_flat.clone();
        let mut dir = &dir0 * sign;
        let mut steps_accepted = 0usize;
        let mut dd = delta;
        while steps_accepted < max_steps {
            let pred = &q + &dir * dd;
            let corrected = match damped_newton(&system, &pred, &newton) {
                Ok(o) if o.converged => o,
                _ => {
                    dd *= 0.5;
                    if dd < delta / 16.0 {
                        break;
                    }
                    continue;
                }
            };
            let moved = (&corrected.x - &q).norm();
            let cq = ContactPoint::from_flat(corrected.x.as_slice(), periodic);
            let interior = mk.sigma_min(&cq) <= 1.0 - opts.interior_margin;
            if moved < 0.25 * dd || moved > 3.0 * dd || !interior {
                // Corrector fell back to the current point, jumped off the
                // manifold, or left the interior: shrink or give up.
                dd *= 0.5;
                if dd < delta / 16.0 {
                    break;
                }
                continue;
            }

            let ev = mk.evaluate(&cq)?;
            let jac = residual_jacobian_from_eval(&ev);
            let tp = TranslatedPoint {
                interior,
                nondegenerate: min_singular_value(&jac) > opts.rank_tol,
                action: ev.image.z - cq.z,
                residual_norm: corrected.residual_norm,
                point: cq,
                k: start.k,
            };
            let actual_dir = (&corrected.x - &q) / moved;
            q = corrected.x;
            out.push(tp);
            steps_accepted += 1;
            dd = delta;

            if steps_accepted >= 5 && (&q - &start_flat).norm() <= 0.9 * delta {
                closed = true;
                break;
            }
            match planar_null_direction(&jac, opts.rank_tol, Some(&actual_dir)) {
                Some(d) => dir = d,
                None => break,
            }
        }
    }
    Ok(out)
}

fn lex_cmp(a: &ContactPoint, b: &ContactPoint) -> std::cmp::Ordering {
    let fa = a.flat();
    let fb = b.flat();
    for (u, v) in fa.iter().zip(fb.iter()) {
        match u.total_cmp(v) {
            std::cmp::Ordering::Equal => continue,
            ord => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

fn make_clusters(members: &[TranslatedPoint], geom_tol: f64) -> Vec<SolutionCluster> {
    let pts: Vec<ContactPoint> = members.iter().map(|m| m.point.clone()).collect();
    let raw: Vec<Cluster> = single_linkage(&pts, geom_tol);
    let mut out: Vec<SolutionCluster> = raw
        .into_iter()
        .map(|c| {
            let rep_idx = c
                .members
                .iter()
                .copied()
                .min_by(|&i, &j| {
                    members[i]
                        .residual_norm
                        .total_cmp(&members[j].residual_norm)
                        .then(i.cmp(&j))
                })
                .expect("clusters are nonempty");
            SolutionCluster {
                representative: members[rep_idx].clone(),
                continuum: c.members.len() > 10 && c.extent > geom_tol,
                extent: c.extent,
                member_indices: c.members,
            }
        })
        .collect();
    out.sort_by(|a, b| lex_cmp(&a.representative.point, &b.representative.point));
    out
}

/// Grid seeds over the support box: per-axis resolutions for the x block,
/// the y block, and z over `z_window` (half open in the circle case).
pub fn grid_seeds(
    m: &ContactMap,
    grid: [usize; 3],
    z_window: (f64, f64),
) -> Vec<ContactPoint> {
    let n = m.n();
    let widths = m.planar_half_widths();
    let periodic = m.periodic_z();
    let axes: Vec<Vec<f64>> = (0..2 * n)
        .map(|i| {
            let res = if i < n { grid[0] } else { grid[1] };
            crate::numeric::linspace(-widths[i], widths[i], res)
        })
        .collect();
    let z_axis = if periodic {
        crate::numeric::linspace_half_open(z_window.0, z_window.1, grid[2])
    } else {
        crate::numeric::linspace(z_window.0, z_window.1, grid[2])
    };

    let mut seeds = Vec::new();
    let mut planar = vec![0.0; 2 * n];
    fill_planar(m, &axes, &z_axis, periodic, &mut planar, 0, &mut seeds);
    seeds
}

fn fill_planar(
    m: &ContactMap,
    axes: &[Vec<f64>],
    z_axis: &[f64],
    periodic: bool,
    planar: &mut Vec<f64>,
    depth: usize,
    seeds: &mut Vec<ContactPoint>,
) {
    if depth == axes.len() {
        let n = axes.len() / 2;
        let probe = ContactPoint::new(planar[..n].to_vec(), planar[n..].to_vec(), 0.0, periodic);
        if m.sigma_min(&probe) <= 1.0 {
            for &z in z_axis {
                seeds.push(ContactPoint::new(
                    planar[..n].to_vec(),
                    planar[n..].to_vec(),
                    z,
                    periodic,
                ));
            }
        }
        return;
    }
    for &v in &axes[depth] {
        planar[depth] = v;
        fill_planar(m, axes, z_axis, periodic, planar, depth + 1, seeds);
    }
}

/// Report of one iteration-lemma check: if q is a translated point of both
/// phi^k1 and phi^k2 (k1 < k2), then phi^k1(q) must be a translated point of
/// phi^(k2-k1), with conformal factors satisfying the cocycle identity.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub k1: usize,
    pub k2: usize,
    pub residual_k1: f64,
    pub residual_k2: f64,
    /// Residual of the derived point phi^k1(q) under phi^(k2-k1).
    pub residual_derived: f64,
    pub g_k1: f64,
    pub g_k2: f64,
    pub g_derived: f64,
    /// | g_k2(q) - g_(k2-k1)(phi^k1 q) - g_k1(q) |
    pub cocycle_defect: f64,
    pub action_k1: f64,
    pub action_k2: f64,
    pub action_derived: f64,
    pub derived_point: ContactPoint,
    /// residual_derived <= 10 * tol.
    pub pass: bool,
}

pub fn check_iteration_lemma(
    m: &ContactMap,
    q: &ContactPoint,
    k1: usize,
    k2: usize,
    tol: f64,
) -> Result<LemmaReport> {
    if !(k1 >= 1 && k1 < k2) {
        return Err(Error::LemmaPrecondition {
            which: format!("iterate order (need 1 <= k1 < k2, got k1 = {k1}, k2 = {k2})"),
            residual: f64::NAN,
            tol,
        });
    }
    let ev1 = m.iterate(k1).evaluate(q)?;
    let r1 = residual_from_eval(q, &ev1).norm();
    if r1 > tol {
        return Err(Error::LemmaPrecondition {
            which: format!("k1 = {k1}"),
            residual: r1,
            tol,
        });
    }
    let ev2 = m.iterate(k2).evaluate(q)?;
    let r2 = residual_from_eval(q, &ev2).norm();
    if r2 > tol {
        return Err(Error::LemmaPrecondition {
            which: format!("k2 = {k2}"),
            residual: r2,
            tol,
        });
    }

    let derived = ev1.image.clone();
    let evd = m.iterate(k2 - k1).evaluate(&derived)?;
    let rd = residual_from_eval(&derived, &evd).norm();

    Ok(LemmaReport {
        k1,
        k2,
        residual_k1: r1,
        residual_k2: r2,
        residual_derived: rd,
        g_k1: ev1.g,
        g_k2: ev2.g,
        g_derived: evd.g,
        cocycle_defect: (ev2.g - evd.g - ev1.g).abs(),
        action_k1: ev1.image.z - q.z,
        action_k2: ev2.image.z - q.z,
        action_derived: evd.image.z - derived.z,
        derived_point: derived,
        pass: rd <= 10.0 * tol,
    })
}
