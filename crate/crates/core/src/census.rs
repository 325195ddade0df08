//! Iterated translated-point census.
//!
//! For k = 1..K the census runs the multistart finder on phi^k, then relates
//! the iterates to one another:
//!
//! * cross-iterate clustering assigns a stable `orbit_id` to every geometric
//!   solution set (a circle found at k = 1 and again at k = 2 is one orbit);
//! * periodic points are translated points whose Reeb displacement is
//!   geometrically zero (zero on the line, integral on the circle);
//! * flags summarize the qualitative picture: whether the per-iterate maximum
//!   action grows strictly, whether the map looks like the identity, and how
//!   many pairs of solutions have actions differing by an integer (the
//!   circle-case coincidence phenomenon).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dedupe::single_linkage;
use crate::map::ContactMap;
use crate::point::{z_distance, ContactPoint};
use crate::translated::{find_translated_points, grid_seeds, FindOpts, TranslatedPoint};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CensusOpts {
    /// Highest iterate to examine.
    pub k_max: usize,
    /// Seed resolutions: x block, y block, z axis.
    pub grid: [usize; 3],
    /// Range of seed z values (half open on the circle).
    pub z_window: (f64, f64),
    pub find: FindOpts,
    /// Also seed each iterate with representatives found at earlier
    /// iterates and their forward images, which places seeds exactly on the
    /// solution sets the iteration structure predicts.
    pub orbit_image_seeds: bool,
    /// Tolerance for the integer-action coincidence count.
    pub action_coincidence_tol: f64,
}

impl Default for CensusOpts {
    fn default() -> Self {
        CensusOpts {
            k_max: 2,
            grid: [24, 24, 8],
            z_window: (0.0, 1.0),
            find: FindOpts::default(),
            orbit_image_seeds: true,
            action_coincidence_tol: 1e-6,
        }
    }
}

/// A deduplicated translated-point cluster as reported by the census.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusPoint {
    pub point: ContactPoint,
    pub k: usize,
    pub action: f64,
    pub residual_norm: f64,
    pub nondegenerate: bool,
    /// Cross-iterate cluster label; equal labels mean geometrically equal
    /// solution sets at different iterates.
    pub orbit_id: usize,
    /// The cluster traces a continuum rather than an isolated point.
    pub continuum: bool,
    pub member_count: usize,
    pub extent: f64,
}

/// Results of one iterate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KCensus {
    pub k: usize,
    /// Interior clusters, canonically ordered.
    pub points: Vec<CensusPoint>,
    /// Count of trivial clusters on or outside the support edge.
    pub boundary_clusters: usize,
    pub seeds: usize,
    pub converged: usize,
    pub solver_failures: usize,
    /// No seed converged at all; an empty `points` list here is a
    /// diagnostic, not a verified absence of translated points.
    pub none_found: bool,
}

/// A translated point that is geometrically periodic: phi^k(q) = q on the
/// manifold and g_k(q) = 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub point: ContactPoint,
    pub k: usize,
    pub action: f64,
    /// Distance of the Reeb displacement from geometric closure
    /// (|action| on the line, distance to the nearest integer on the circle).
    pub z_mismatch: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusFlags {
    /// Every iterate produced interior points and the per-iterate maximum
    /// action increases strictly with k.
    pub monotone_max_action: bool,
    /// Every seed converged and every action is numerically zero: the map
    /// does not move anything off its Reeb orbit.
    pub identity_like: bool,
    /// Unordered pairs of census points whose actions differ by an integer
    /// (within `action_coincidence_tol`); only meaningful on the circle,
    /// where such pairs collapse to equal spectral values.
    pub integer_action_coincidences: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Census {
    pub per_k: Vec<KCensus>,
    /// Number of geometrically distinct clusters across all iterates.
    pub distinct_clusters: usize,
    pub periodic_points: Vec<PeriodicPoint>,
    /// k -> sorted actions of the interior clusters at that iterate.
    pub action_table: BTreeMap<usize, Vec<f64>>,
    pub flags: CensusFlags,
    /// Per-iterate failures (recorded, not fatal to other iterates).
    pub errors: Vec<String>,
}

impl Census {
    /// Orbit ids shared by more than one iterate, with the iterates that
    /// saw them: the raw material for iteration-structure checks.
    pub fn shared_orbits(&self) -> Vec<(usize, Vec<usize>)> {
        let mut by_orbit: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for kc in &self.per_k {
            for p in &kc.points {
                let ks = by_orbit.entry(p.orbit_id).or_default();
                if !ks.contains(&p.k) {
                    ks.push(p.k);
                }
            }
        }
        by_orbit
            .into_iter()
            .filter(|(_, ks)| ks.len() > 1)
            .collect()
    }

    /// The census point for a given iterate and orbit, if that orbit was
    /// seen at that iterate.
    pub fn point_at(&self, k: usize, orbit_id: usize) -> Option<&CensusPoint> {
        self.per_k
            .iter()
            .find(|kc| kc.k == k)?
            .points
            .iter()
            .find(|p| p.orbit_id == orbit_id)
    }
}

pub fn run_census(m: &ContactMap, opts: &CensusOpts) -> Result<Census> {
    let base_seeds = grid_seeds(m, opts.grid, opts.z_window);
    let mut errors: Vec<String> = Vec::new();
    let mut per_k: Vec<KCensus> = Vec::new();
    // Members of every interior cluster per iterate, pooled for cross-k
    // clustering. Clustering must see all members, not just representatives:
    // two iterates can sample the same circle at far-apart angles.
    let mut pooled: Vec<(usize, TranslatedPoint)> = Vec::new();
    // (k, index into per_k points) per pooled member's owning cluster comes
    // later; here we remember which per-k cluster each pooled member
    // belongs to so representatives inherit orbit ids.
    let mut pooled_cluster: Vec<(usize, usize)> = Vec::new();
    let mut all_seeds_converged = true;
    let mut prior_reps: Vec<ContactPoint> = Vec::new();

    for k in 1..=opts.k_max {
        let mut seeds = base_seeds.clone();
        if opts.orbit_image_seeds && !prior_reps.is_empty() {
            for rep in &prior_reps {
                seeds.push(rep.clone());
                if let Ok((img, _)) = m.evaluate_point(rep) {
                    // On the line an image seed can carry z far outside the
                    // window (its z is shifted by the action); the census
                    // scope is the window, so such seeds would report real
                    // but out-of-scope duplicates of in-window solutions.
                    let in_window = img.periodic_z
                        || (img.z >= opts.z_window.0 - opts.find.geom_tol
                            && img.z <= opts.z_window.1 + opts.find.geom_tol);
                    if in_window {
                        seeds.push(img);
                    }
                }
            }
        }
        let seed_count = seeds.len();
        let outcome = match find_translated_points(m, k, &seeds, &opts.find) {
            Ok(o) => o,
            Err(e) => {
                errors.push(format!("k={k}: {e}"));
                per_k.push(KCensus {
                    k,
                    points: Vec::new(),
                    boundary_clusters: 0,
                    seeds: seed_count,
                    converged: 0,
                    solver_failures: 0,
                    none_found: true,
                });
                all_seeds_converged = false;
                continue;
            }
        };
        if outcome.none_found {
            errors.push(format!(
                "k={k}: no seed converged; emptiness is a diagnostic, not verified"
            ));
        }
        if outcome.converged < outcome.seeds {
            all_seeds_converged = false;
        }

        let mut points: Vec<CensusPoint> = Vec::new();
        for cluster in &outcome.clusters {
            points.push(CensusPoint {
                point: cluster.representative.point.clone(),
                k,
                action: cluster.representative.action,
                residual_norm: cluster.representative.residual_norm,
                nondegenerate: cluster.representative.nondegenerate,
                orbit_id: usize::MAX, // assigned after cross-k clustering
                continuum: cluster.continuum,
                member_count: cluster.member_count(),
                extent: cluster.extent,
            });
        }

        for (ci, cluster) in outcome.clusters.iter().enumerate() {
            for &mi in &cluster.member_indices {
                pooled.push((k, outcome.members[mi].clone()));
                pooled_cluster.push((k, ci));
            }
        }

        for p in &points {
            prior_reps.push(p.point.clone());
        }

        per_k.push(KCensus {
            k,
            points,
            boundary_clusters: outcome.boundary.len(),
            seeds: outcome.seeds,
            converged: outcome.converged,
            solver_failures: outcome.solver_failures,
            none_found: outcome.none_found,
        });
    }

    assign_orbits(&mut per_k, &pooled, &pooled_cluster, opts.find.geom_tol);
    let distinct_clusters = count_distinct(&per_k);

    let periodic_points = collect_periodic(&per_k, m.periodic_z(), opts.find.geom_tol);
    let action_table: BTreeMap<usize, Vec<f64>> = per_k
        .iter()
        .map(|kc| {
            let mut actions: Vec<f64> = kc.points.iter().map(|p| p.action).collect();
            actions.sort_by(f64::total_cmp);
            (kc.k, actions)
        })
        .collect();

    let flags = CensusFlags {
        monotone_max_action: monotone_max_action(&per_k),
        identity_like: identity_like(&per_k, all_seeds_converged, opts.find.newton.tol),
        integer_action_coincidences: coincidences(&per_k, opts.action_coincidence_tol),
    };

    Ok(Census {
        per_k,
        distinct_clusters,
        periodic_points,
        action_table,
        flags,
        errors,
    })
}

/// Cross-iterate clustering over every interior member found at any k;
/// orbit ids are indices into the canonically ordered cluster list.
fn assign_orbits(
    per_k: &mut [KCensus],
    pooled: &[(usize, TranslatedPoint)],
    pooled_cluster: &[(usize, usize)],
    geom_tol: f64,
) {
    if pooled.is_empty() {
        return;
    }
    let pts: Vec<ContactPoint> = pooled.iter().map(|(_, t)| t.point.clone()).collect();
    let clusters = single_linkage(&pts, geom_tol);

    // Canonical orbit order: by the lexicographically smallest member point.
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    let min_point = |c: &crate::dedupe::Cluster| -> Vec<f64> {
        c.members
            .iter()
            .map(|&i| pts[i].flat().as_slice().to_vec())
            .min_by(|a, b| {
                a.iter()
                    .zip(b.iter())
                    .map(|(u, v)| u.total_cmp(v))
                    .find(|o| *o != std::cmp::Ordering::Equal)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("clusters are nonempty")
    };
    let keys: Vec<Vec<f64>> = clusters.iter().map(min_point).collect();
    order.sort_by(|&a, &b| {
        keys[a]
            .iter()
            .zip(keys[b].iter())
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| *o != std::cmp::Ordering::Equal)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut orbit_of_cluster = vec![usize::MAX; clusters.len()];
    for (orbit_id, &ci) in order.iter().enumerate() {
        orbit_of_cluster[ci] = orbit_id;
    }

    let mut member_orbit = vec![usize::MAX; pooled.len()];
    for (ci, c) in clusters.iter().enumerate() {
        for &mi in &c.members {
            member_orbit[mi] = orbit_of_cluster[ci];
        }
    }

    // Propagate to per-k cluster entries through any pooled member of the
    // per-k cluster (all members of one per-k cluster land in one orbit:
    // linkage over a superset can only merge).
    for (mi, &(k, ci)) in pooled_cluster.iter().enumerate() {
        let kc = per_k.iter_mut().find(|kc| kc.k == k).expect("k exists");
        if ci != usize::MAX && ci < kc.points.len() {
            kc.points[ci].orbit_id = member_orbit[mi];
        }
    }
}

fn count_distinct(per_k: &[KCensus]) -> usize {
    let mut ids: Vec<usize> = per_k
        .iter()
        .flat_map(|kc| kc.points.iter().map(|p| p.orbit_id))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

fn collect_periodic(per_k: &[KCensus], periodic_z: bool, tol: f64) -> Vec<PeriodicPoint> {
    let mut out = Vec::new();
    for kc in per_k {
        for p in &kc.points {
            // For a translated point phi^k(q) = q + A e_z, so geometric
            // closure is exactly the vanishing of A on the manifold.
            let z_mismatch = z_distance(p.action, 0.0, periodic_z);
            if z_mismatch <= tol {
                out.push(PeriodicPoint {
                    point: p.point.clone(),
                    k: p.k,
                    action: p.action,
                    z_mismatch,
                });
            }
        }
    }
    out
}

fn monotone_max_action(per_k: &[KCensus]) -> bool {
    let mut prev = f64::NEG_INFINITY;
    for kc in per_k {
        let max = kc
            .points
            .iter()
            .map(|p| p.action)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() || max <= prev {
            return false;
        }
        prev = max;
    }
    !per_k.is_empty()
}

fn identity_like(per_k: &[KCensus], all_seeds_converged: bool, newton_tol: f64) -> bool {
    all_seeds_converged
        && per_k.iter().all(|kc| {
            kc.points
                .iter()
                .all(|p| p.action.abs() <= 10.0 * newton_tol)
        })
}

fn coincidences(per_k: &[KCensus], tol: f64) -> usize {
    let entries: Vec<f64> = per_k
        .iter()
        .flat_map(|kc| kc.points.iter().map(|p| p.action))
        .collect();
    let mut count = 0;
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            let d = entries[i] - entries[j];
            if (d - d.round()).abs() <= tol {
                count += 1;
            }
        }
    }
    count
}
