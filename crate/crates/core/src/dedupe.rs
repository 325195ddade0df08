//! Single-linkage deduplication of converged solver output.
//!
//! Multistart Newton sends many seeds onto the same zero set; geometrically
//! close results must collapse into one cluster. Linkage is transitive on
//! purpose: a circle of solutions sampled every few degrees chains into a
//! single cluster even though its diameter far exceeds the tolerance, which
//! is exactly how continua are recognized downstream.
//!
//! Distances use the block metric max(|dx|_2, |dy|_2, d_z) with d_z the
//! circle distance in the periodic case. Large inputs go through a spatial
//! hash with cell size equal to the linkage tolerance, so only neighboring
//! cells need pairwise checks; the result is identical to the quadratic scan.

use std::collections::HashMap;

use crate::point::ContactPoint;

/// A group of indices into the caller's point list, linked transitively at
/// the tolerance, plus the largest coordinate extent of the group.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Sorted indices into the input slice.
    pub members: Vec<usize>,
    /// Largest per-coordinate spread (circle-aware in z when periodic).
    pub extent: f64,
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Threshold below which the quadratic scan is cheaper than hashing.
const PAIRWISE_LIMIT: usize = 256;

/// Groups `points` into clusters under single linkage at tolerance `tol`.
/// Cluster membership is independent of input order; member lists are sorted
/// and clusters are ordered by their smallest member index.
pub fn single_linkage(points: &[ContactPoint], tol: f64) -> Vec<Cluster> {
    assert!(tol > 0.0, "linkage tolerance must be positive");
    let m = points.len();
    if m == 0 {
        return Vec::new();
    }
    let mut uf = UnionFind::new(m);
    if m <= PAIRWISE_LIMIT {
        link_pairwise(points, tol, &mut uf);
    } else {
        link_hashed(points, tol, &mut uf);
    }
    collect_clusters(points, &mut uf)
}

fn link_pairwise(points: &[ContactPoint], tol: f64, uf: &mut UnionFind) {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].distance(&points[j]) <= tol {
                uf.union(i, j);
            }
        }
    }
}

/// Integer cell coordinates. Planar axes use cell size `tol`; the periodic
/// z axis divides the circle into `z_cells` equal cells, each at least `tol`
/// wide, so the seam cell is never thinner than the linkage distance. The
/// block metric dominates every single-coordinate difference, hence points
/// within `tol` always land in the same or an adjacent cell along each axis.
fn cell_of(p: &ContactPoint, tol: f64, z_cells: i64) -> Vec<i64> {
    let mut key: Vec<i64> = Vec::with_capacity(p.dim());
    for v in p.x.iter().chain(p.y.iter()) {
        key.push((v / tol).floor() as i64);
    }
    if p.periodic_z {
        let zm = p.z.rem_euclid(1.0);
        key.push(((zm * z_cells as f64).floor() as i64).clamp(0, z_cells - 1));
    } else {
        key.push((p.z / tol).floor() as i64);
    }
    key
}

fn link_hashed(points: &[ContactPoint], tol: f64, uf: &mut UnionFind) {
    let periodic = points[0].periodic_z;
    let z_cells = if periodic {
        ((1.0 / tol).floor() as i64).max(1)
    } else {
        0
    };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        buckets.entry(cell_of(p, tol, z_cells)).or_default().push(i);
    }

    let dim = points[0].dim();
    let mut offsets = vec![0i64; dim];
    for (i, p) in points.iter().enumerate() {
        let home = cell_of(p, tol, z_cells);
        visit_neighbors(&home, &mut offsets, 0, &mut |key: &[i64]| {
            let mut key = key.to_vec();
            if periodic {
                // Wrap the z cell so clusters straddling z = 0 still meet.
                let last = key.len() - 1;
                key[last] = key[last].rem_euclid(z_cells);
            }
            if let Some(bucket) = buckets.get(&key) {
                for &j in bucket {
                    if j > i && points[i].distance(&points[j]) <= tol {
                        uf.union(i, j);
                    }
                }
            }
        });
    }
}

fn visit_neighbors(home: &[i64], offsets: &mut [i64], depth: usize, f: &mut impl FnMut(&[i64])) {
    if depth == home.len() {
        let key: Vec<i64> = home.iter().zip(offsets.iter()).map(|(h, o)| h + o).collect();
        f(&key);
        return;
    }
    for o in -1..=1 {
        offsets[depth] = o;
        visit_neighbors(home, offsets, depth + 1, f);
    }
}

fn collect_clusters(points: &[ContactPoint], uf: &mut UnionFind) -> Vec<Cluster> {
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..points.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut clusters: Vec<Cluster> = groups
        .into_values()
        .map(|mut members| {
            members.sort_unstable();
            let extent = cluster_extent(points, &members);
            Cluster { members, extent }
        })
        .collect();
    clusters.sort_by_key(|c| c.members[0]);
    clusters
}

fn cluster_extent(points: &[ContactPoint], members: &[usize]) -> f64 {
    let first = &points[members[0]];
    let n = first.n();
    let mut extent: f64 = 0.0;
    for coord in 0..2 * n {
        let pick = |p: &ContactPoint| if coord < n { p.x[coord] } else { p.y[coord - n] };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in members {
            let v = pick(&points[i]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        extent = extent.max(hi - lo);
    }
    extent.max(z_extent(points, members))
}

/// Spread in z; on the circle this is the arc length of the smallest arc
/// containing all members (one minus the largest gap between consecutive
/// sorted angles).
fn z_extent(points: &[ContactPoint], members: &[usize]) -> f64 {
    if !points[members[0]].periodic_z {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in members {
            lo = lo.min(points[i].z);
            hi = hi.max(points[i].z);
        }
        return hi - lo;
    }
    if members.len() == 1 {
        return 0.0;
    }
    let mut zs: Vec<f64> = members.iter().map(|&i| points[i].z.rem_euclid(1.0)).collect();
    zs.sort_by(f64::total_cmp);
    let mut max_gap = 1.0 - zs[zs.len() - 1] + zs[0];
    for w in zs.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    (1.0 - max_gap).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64, z: f64, periodic: bool) -> ContactPoint {
        ContactPoint::dim3(x, y, z, periodic)
    }

    #[test]
    fn distinct_points_stay_separate() {
        let pts = vec![
            p(0.0, 0.0, 0.0, false),
            p(0.001, 0.0, 0.0, false),
            p(0.5, 0.0, 0.0, false),
        ];
        let clusters = single_linkage(&pts, 0.05);
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].members, vec![0, 1]);
        assert_eq!(clusters[1].members, vec![2]);
    }

    #[test]
    fn chains_merge_transitively() {
        // 15 points spaced at 0.9 * tol: pairwise most are far apart, but
        // single linkage chains them into one long cluster.
        let tol = 0.05;
        let pts: Vec<ContactPoint> = (0..15)
            .map(|i| p(0.9 * tol * i as f64, 0.0, 0.0, false))
            .collect();
        let clusters = single_linkage(&pts, tol);
        assert_eq!(clusters.len(), 1);
        assert!(clusters[0].extent > 10.0 * tol);
    }

    #[test]
    fn circle_distance_links_across_z_wrap() {
        let pts = vec![p(0.3, 0.0, 0.999, true), p(0.3, 0.0, 0.001, true)];
        let clusters = single_linkage(&pts, 0.05);
        assert_eq!(clusters.len(), 1);
        assert!(clusters[0].extent < 0.01);
    }

    #[test]
    fn hashed_path_links_across_z_wrap() {
        // Enough points to exercise the spatial hash, with one pair that
        // only meets through the periodic z seam.
        let mut pts: Vec<ContactPoint> = (0..300)
            .map(|i| p(10.0 + i as f64, 0.0, 0.5, true))
            .collect();
        pts.push(p(0.0, 0.0, 0.999, true));
        pts.push(p(0.0, 0.0, 0.001, true));
        let clusters = single_linkage(&pts, 0.05);
        assert_eq!(clusters.len(), 301);
        let wrap = clusters.iter().find(|c| c.members.contains(&300)).unwrap();
        assert_eq!(wrap.members, vec![300, 301]);
    }

    #[test]
    fn extent_on_circle_handles_wrapped_arcs() {
        let pts = vec![
            p(0.0, 0.0, 0.95, true),
            p(0.0, 0.0, 0.99, true),
            p(0.0, 0.0, 0.03, true),
        ];
        let clusters = single_linkage(&pts, 0.06);
        assert_eq!(clusters.len(), 1);
        assert!((clusters[0].extent - 0.08).abs() < 1e-12);
    }

    #[test]
    fn empty_input_gives_no_clusters() {
        assert!(single_linkage(&[], 0.1).is_empty());
    }

    proptest! {
        /// The spatial hash is an optimization only: it must produce exactly
        /// the clusters of the quadratic scan.
        #[test]
        fn hashed_and_pairwise_agree(
            coords in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -2.0f64..2.0), 2..40),
            periodic in any::<bool>(),
            tol in 0.02f64..0.4,
        ) {
            let pts: Vec<ContactPoint> = coords
                .iter()
                .map(|&(x, y, z)| p(x, y, z, periodic))
                .collect();
            let mut uf_a = UnionFind::new(pts.len());
            link_pairwise(&pts, tol, &mut uf_a);
            let a = collect_clusters(&pts, &mut uf_a);
            let mut uf_b = UnionFind::new(pts.len());
            link_hashed(&pts, tol, &mut uf_b);
            let b = collect_clusters(&pts, &mut uf_b);
            prop_assert_eq!(a, b);
        }
    }
}
