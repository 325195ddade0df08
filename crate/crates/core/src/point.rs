//! Points of R^{2n+1} and R^{2n} x S^1 in contact coordinates (x, y, z).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// A point in contact coordinates. `z` is always stored as a real lift;
/// `periodic_z` only affects geometric comparisons, never arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: f64,
    pub periodic_z: bool,
}

impl ContactPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: f64, periodic_z: bool) -> Self {
        assert_eq!(x.len(), y.len(), "x and y blocks must have equal length");
        ContactPoint { x, y, z, periodic_z }
    }

    /// n = 1 convenience constructor.
    pub fn dim3(x: f64, y: f64, z: f64, periodic_z: bool) -> Self {
        ContactPoint::new(vec![x], vec![y], z, periodic_z)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Ambient dimension 2n + 1.
    pub fn dim(&self) -> usize {
        2 * self.x.len() + 1
    }

    /// Flat coordinates (x_1..x_n, y_1..y_n, z).
    pub fn flat(&self) -> DVector<f64> {
        let n = self.n();
        let mut v = DVector::zeros(2 * n + 1);
        v.as_mut_slice()[..n].copy_from_slice(&self.x);
        v.as_mut_slice()[n..2 * n].copy_from_slice(&self.y);
        v[2 * n] = self.z;
        v
    }

    pub fn from_flat(v: &[f64], periodic_z: bool) -> Self {
        assert!(v.len() % 2 == 1, "flat coordinates must have odd length");
        let n = v.len() / 2;
        ContactPoint {
            x: v[..n].to_vec(),
            y: v[n..2 * n].to_vec(),
            z: v[2 * n],
            periodic_z,
        }
    }

    /// Distance of the z coordinates: plain in the line case, shortest
    /// representative mod 1 in the circle case.
    pub fn z_distance(&self, other: &ContactPoint) -> f64 {
        z_distance(self.z, other.z, self.periodic_z || other.periodic_z)
    }

    /// Block metric used for deduplication: max of the Euclidean x-block and
    /// y-block distances and the (possibly mod-1) z distance.
    pub fn distance(&self, other: &ContactPoint) -> f64 {
        debug_assert_eq!(self.n(), other.n());
        let dx = block_norm(&self.x, &other.x);
        let dy = block_norm(&self.y, &other.y);
        dx.max(dy).max(self.z_distance(other))
    }

    /// Geometric equality: coordinate-wise within `tol`, z compared mod 1 in
    /// the circle case. Two real lifts of the same circle point are equal.
    pub fn geometrically_eq(&self, other: &ContactPoint, tol: f64) -> bool {
        self.distance(other) <= tol
    }
}

fn block_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Shortest z distance, mod 1 when `periodic` is set.
pub fn z_distance(a: f64, b: f64, periodic: bool) -> f64 {
    let d = a - b;
    if periodic {
        (d - d.round()).abs()
    } else {
        d.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifts_of_the_same_circle_point_are_geometrically_equal() {
        let a = ContactPoint::dim3(0.0, 0.0, 0.2, true);
        let b = ContactPoint::dim3(0.0, 0.0, 1.2, true);
        assert!(a.geometrically_eq(&b, 1e-12));
        assert_eq!(a.z_distance(&b), 0.0);
    }

    #[test]
    fn line_case_keeps_lifts_distinct() {
        let a = ContactPoint::dim3(0.0, 0.0, 0.2, false);
        let b = ContactPoint::dim3(0.0, 0.0, 1.2, false);
        assert!(!a.geometrically_eq(&b, 0.5));
        assert!((a.z_distance(&b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flat_round_trip_preserves_block_layout() {
        let p = ContactPoint::new(vec![1.0, 2.0], vec![3.0, 4.0], 5.0, false);
        let v = p.flat();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(ContactPoint::from_flat(v.as_slice(), false), p);
    }

    #[test]
    fn block_metric_is_max_of_blocks() {
        let a = ContactPoint::new(vec![0.0, 0.0], vec![0.0, 0.0], 0.0, false);
        let b = ContactPoint::new(vec![3.0, 4.0], vec![0.1, 0.0], 0.2, false);
        assert!((a.distance(&b) - 5.0).abs() < 1e-15);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_point(periodic: bool) -> impl Strategy<Value = ContactPoint> {
            (1usize..4).prop_flat_map(move |n| {
                (
                    proptest::collection::vec(-2.0f64..2.0, n),
                    proptest::collection::vec(-2.0f64..2.0, n),
                    -3.0f64..3.0,
                )
                    .prop_map(move |(x, y, z)| ContactPoint::new(x, y, z, periodic))
            })
        }

        proptest! {
            /// The block metric is a metric: symmetric, zero exactly on
            /// geometrically equal points, and triangle-inequality bounded.
            #[test]
            fn metric_axioms(
                a in arb_point(false),
                shift in proptest::collection::vec(-1.0f64..1.0, 7),
                periodic in any::<bool>(),
            ) {
                let n = a.n();
                let mut b = a.clone();
                let mut c = a.clone();
                for i in 0..n {
                    b.x[i] += shift[i % 7];
                    b.y[i] += shift[(i + 1) % 7];
                    c.x[i] += shift[(i + 2) % 7];
                    c.y[i] += shift[(i + 3) % 7];
                }
                b.z += shift[4];
                c.z += shift[5];
                let (mut a, mut b, mut c) = (a, b, c);
                a.periodic_z = periodic;
                b.periodic_z = periodic;
                c.periodic_z = periodic;

                prop_assert!((a.distance(&b) - b.distance(&a)).abs() < 1e-15);
                prop_assert_eq!(a.distance(&a), 0.0);
                prop_assert!(a.distance(&b) <= a.distance(&c) + c.distance(&b) + 1e-12);
            }

            /// Integer z shifts are invisible on the circle and fully
            /// visible on the line.
            #[test]
            fn integer_lifts(p in arb_point(true), k in -3i32..=3) {
                let mut q = p.clone();
                q.z += f64::from(k);
                prop_assert!(p.distance(&q) < 1e-9);
                let mut line = p.clone();
                line.periodic_z = false;
                let mut lq = q.clone();
                lq.periodic_z = false;
                prop_assert!((line.distance(&lq) - f64::from(k).abs()).abs() < 1e-9);
            }

            /// Flat coordinates round-trip exactly, preserving the
            /// [x block, y block, z] layout.
            #[test]
            fn flat_round_trip(p in arb_point(false)) {
                let v = p.flat();
                prop_assert_eq!(v.len(), p.dim());
                let back = ContactPoint::from_flat(v.as_slice(), p.periodic_z);
                prop_assert_eq!(back, p);
            }
        }
    }
}
