//! Contact Hamiltonians of the family catalog.
//!
//! Every catalog member has the separated form `H = h(sigma) * w(z)` with
//! `sigma = a|x|^2 + b|y|^2` a diagonal planar quadratic form, `h` a bump
//! profile supported on `sigma <= 1`, and `w` either constant 1 or the
//! z-periodic factor `1 + eps sin(2 pi z)`. This covers:
//!
//! * `radial_twist`        a = b = 1, w = 1
//! * `z_perturbed_twist`   a = b = 1, w = 1 + eps sin(2 pi z)
//! * `anisotropic_twist`   a != b,   w = 1
//! * `hamiltonian_lift`    any a, b, w = 1 (the flow is the prequantization
//!   lift of the planar Hamiltonian flow of H)
//!
//! All members are autonomous and 1-periodic in z, so they live on both
//! R^{2n+1} and R^{2n} x S^1.

use crate::error::Error;
use crate::point::ContactPoint;
use crate::Result;

/// Radial bump profile `h(s) = c (1-s)^p` on `s <= 1`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// p = 2. Only C^1 at the support edge, but its rotation algebra is
    /// closed form, which is what the oracle tests want.
    Quadratic { c: f64 },
    /// p = 3. C^2 at the support edge; the default choice.
    Cubic { c: f64 },
}

impl Profile {
    /// h(0), the bump height.
    pub fn amplitude(&self) -> f64 {
        match *self {
            Profile::Quadratic { c } | Profile::Cubic { c } => c,
        }
    }

    /// (h, h', h'') at `s`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        if s >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let u = 1.0 - s;
        match *self {
            Profile::Quadratic { c } => (c * u * u, -2.0 * c * u, 2.0 * c),
            Profile::Cubic { c } => (c * u * u * u, -3.0 * c * u * u, 6.0 * c * u),
        }
    }

    pub fn h(&self, s: f64) -> f64 {
        self.eval(s).0
    }

    pub fn dh(&self, s: f64) -> f64 {
        self.eval(s).1
    }
}

/// Planar support ellipsoid `a|x|^2 + b|y|^2 <= 1` (all z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub a: f64,
    pub b: f64,
}

impl Support {
    pub fn sigma(&self, q: &ContactPoint) -> f64 {
        let sx: f64 = q.x.iter().map(|v| v * v).sum();
        let sy: f64 = q.y.iter().map(|v| v * v).sum();
        self.a * sx + self.b * sy
    }

    /// Closed support: H and all its derivatives vanish outside.
    pub fn contains(&self, q: &ContactPoint) -> bool {
        self.sigma(q) <= 1.0
    }

    /// Interior with a safety margin, used to separate honest solutions from
    /// the trivial ones glued to the support edge.
    pub fn is_interior(&self, q: &ContactPoint, margin: f64) -> bool {
        self.sigma(q) <= 1.0 - margin
    }

    /// Half-widths of the enclosing planar box, per x axis then per y axis.
    pub fn planar_half_widths(&self, n: usize) -> Vec<f64> {
        let rx = 1.0 / self.a.sqrt();
        let ry = 1.0 / self.b.sqrt();
        let mut w = vec![rx; n];
        w.extend(std::iter::repeat(ry).take(n));
        w
    }
}

/// Value, gradient, and Hessian of H at a point, in flat (x, y, z) layout.
#[derive(Debug, Clone)]
pub struct HamiltonianDerivs {
    pub value: f64,
    /// Length 2n+1.
    pub grad: Vec<f64>,
    /// Row-major (2n+1) x (2n+1), symmetric.
    pub hess: Vec<f64>,
}

impl HamiltonianDerivs {
    pub fn zeros(dim: usize) -> Self {
        HamiltonianDerivs {
            value: 0.0,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }
}

/// A catalog Hamiltonian `h(a|x|^2 + b|y|^2) * (1 + eps sin(2 pi z))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    family: String,
    n: usize,
    profile: Profile,
    a: f64,
    b: f64,
    eps: f64,
}

impl Hamiltonian {
    pub fn radial_twist(n: usize, profile: Profile) -> Result<Self> {
        Self::build("radial_twist", n, profile, 1.0, 1.0, 0.0)
    }

    pub fn z_perturbed_twist(n: usize, profile: Profile, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps.abs() < 1.0) {
            return Err(Error::InvalidFamily {
                family: "z_perturbed_twist".into(),
                reason: format!("eps must satisfy |eps| < 1, got {eps}"),
            });
        }
        Self::build("z_perturbed_twist", n, profile, 1.0, 1.0, eps)
    }

    pub fn anisotropic_twist(n: usize, profile: Profile, a: f64, b: f64) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidFamily {
                family: "anisotropic_twist".into(),
                reason: format!("requires a != b, got a = b = {a}"),
            });
        }
        Self::build("anisotropic_twist", n, profile, a, b, 0.0)
    }

    pub fn hamiltonian_lift(n: usize, profile: Profile, a: f64, b: f64) -> Result<Self> {
        Self::build("hamiltonian_lift", n, profile, a, b, 0.0)
    }

    fn build(family: &str, n: usize, profile: Profile, a: f64, b: f64, eps: f64) -> Result<Self> {
        let fail = |reason: String| Error::InvalidFamily {
            family: family.into(),
            reason,
        };
        if n == 0 {
            return Err(fail("dimension n must be at least 1".into()));
        }
        let c = profile.amplitude();
        if !c.is_finite() || c < 0.0 {
            return Err(fail(format!("profile amplitude must be finite and >= 0, got {c}")));
        }
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
            return Err(fail(format!("quadratic form weights must be positive, got a = {a}, b = {b}")));
        }
        Ok(Hamiltonian {
            family: family.into(),
            n,
            profile,
            a,
            b,
            eps,
        })
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn quadratic_weights(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn support(&self) -> Support {
        Support { a: self.a, b: self.b }
    }

    /// H > 0 on the interior of the support.
    pub fn positive(&self) -> bool {
        self.profile.amplitude() > 0.0 && self.eps.abs() < 1.0
    }

    /// The whole catalog is autonomous.
    pub fn time_dependent(&self) -> bool {
        false
    }

    /// The whole catalog is 1-periodic in z, hence valid on R^{2n} x S^1.
    pub fn z_periodic(&self) -> bool {
        true
    }

    pub fn z_independent(&self) -> bool {
        self.eps == 0.0
    }

    /// H at flat coordinates (x, y, z). The time argument is accepted for
    /// interface uniformity; catalog members ignore it.
    pub fn value(&self, q: &[f64], _t: f64) -> f64 {
        let n = self.n;
        debug_assert_eq!(q.len(), 2 * n + 1);
        let mut sigma = 0.0;
        for i in 0..n {
            sigma += self.a * q[i] * q[i] + self.b * q[n + i] * q[n + i];
        }
        let (h, _, _) = self.profile.eval(sigma);
        h * self.w(q[2 * n]).0
    }

    /// Value, gradient, and Hessian in one pass, written into `out`.
    pub fn derivatives_into(&self, q: &[f64], _t: f64, out: &mut HamiltonianDerivs) {
        let n = self.n;
        let dim = 2 * n + 1;
        debug_assert_eq!(q.len(), dim);
        debug_assert_eq!(out.grad.len(), dim);
        debug_assert_eq!(out.hess.len(), dim * dim);

        let mut sigma = 0.0;
        for i in 0..n {
            sigma += self.a * q[i] * q[i] + self.b * q[n + i] * q[n + i];
        }
        if sigma >= 1.0 {
            out.value = 0.0;
            out.grad.fill(0.0);
            out.hess.fill(0.0);
            return;
        }

        let (h, dh, d2h) = self.profile.eval(sigma);
        let (w, dw, d2w) = self.w(q[2 * n]);

        out.value = h * w;

        // grad sigma: (2 a x, 2 b y, 0)
        for i in 0..n {
            out.grad[i] = 2.0 * self.a * q[i] * dh * w;
            out.grad[n + i] = 2.0 * self.b * q[n + i] * dh * w;
        }
        out.grad[2 * n] = h * dw;

        // hess = w * (d2h ds x ds + dh d2s) + dw * (dh ds (x) dz + sym) + h d2w dz dz
        let hw = &mut out.hess;
        hw.fill(0.0);
        let coeff = |i: usize| if i < n { 2.0 * self.a } else { 2.0 * self.b };
        for i in 0..2 * n {
            let dsi = coeff(i) * q[i]; // d sigma / d coord i
            for j in 0..2 * n {
                let dsj = coeff(j) * q[j];
                let mut v = d2h * dsi * dsj * w;
                if i == j {
                    v += dh * coeff(i) * w;
                }
                hw[i * dim + j] = v;
            }
            let mixed = dh * dsi * dw;
            hw[i * dim + 2 * n] = mixed;
            hw[2 * n * dim + i] = mixed;
        }
        hw[2 * n * dim + 2 * n] = h * d2w;
    }

    pub fn derivatives(&self, q: &[f64], t: f64) -> HamiltonianDerivs {
        let mut out = HamiltonianDerivs::zeros(self.dim());
        self.derivatives_into(q, t, &mut out);
        out
    }

    /// (w, w', w'') for the z factor.
    fn w(&self, z: f64) -> (f64, f64, f64) {
        if self.eps == 0.0 {
            return (1.0, 0.0, 0.0);
        }
        let tau = std::f64::consts::TAU;
        let (sin, cos) = (tau * z).sin_cos();
        (
            1.0 + self.eps * sin,
            self.eps * tau * cos,
            -self.eps * tau * tau * sin,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{central_gradient, central_jacobian};
    use nalgebra::DVector;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn catalog() -> Vec<Hamiltonian> {
        vec![
            Hamiltonian::radial_twist(1, Profile::Quadratic { c: std::f64::consts::PI }).unwrap(),
            Hamiltonian::radial_twist(1, Profile::Cubic { c: 1.0 }).unwrap(),
            Hamiltonian::z_perturbed_twist(1, Profile::Cubic { c: 1.0 }, 0.3).unwrap(),
            Hamiltonian::anisotropic_twist(1, Profile::Cubic { c: 0.7 }, 1.0, 2.0).unwrap(),
            Hamiltonian::hamiltonian_lift(1, Profile::Cubic { c: 0.7 }, 1.0, 2.0).unwrap(),
            Hamiltonian::z_perturbed_twist(2, Profile::Cubic { c: 0.5 }, 0.2).unwrap(),
        ]
    }

    fn sample_inside(h: &Hamiltonian, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let dim = h.dim();
        let widths = h.support().planar_half_widths(h.n());
        loop {
            let mut q: Vec<f64> = (0..dim - 1)
                .map(|i| rng.gen_range(-widths[i]..widths[i]))
                .collect();
            q.push(rng.gen_range(-1.0..1.0));
            let p = ContactPoint::from_flat(&q, false);
            if h.support().sigma(&p) < 0.95 {
                return q;
            }
        }
    }

    #[test]
    fn gradient_and_hessian_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for ham in catalog() {
            for _ in 0..25 {
                let q = sample_inside(&ham, &mut rng);
                let x = DVector::from_vec(q.clone());
                let d = ham.derivatives(&q, 0.0);

                let fd_grad = central_gradient(|v| ham.value(v.as_slice(), 0.0), &x, 1e-6);
                for i in 0..ham.dim() {
                    assert!(
                        (d.grad[i] - fd_grad[i]).abs() <= 1e-6 * (1.0 + fd_grad[i].abs()),
                        "{}: grad[{i}] analytic {} vs fd {}",
                        ham.family(),
                        d.grad[i],
                        fd_grad[i]
                    );
                }

                let fd_hess = central_jacobian(
                    |v| {
                        DVector::from_vec(ham.derivatives(v.as_slice(), 0.0).grad)
                    },
                    &x,
                    1e-6,
                );
                for i in 0..ham.dim() {
                    for j in 0..ham.dim() {
                        let analytic = d.hess[i * ham.dim() + j];
                        assert!(
                            (analytic - fd_hess[(i, j)]).abs() <= 1e-5 * (1.0 + analytic.abs()),
                            "{}: hess[{i},{j}] analytic {} vs fd {}",
                            ham.family(),
                            analytic,
                            fd_hess[(i, j)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn vanishes_outside_support_with_all_derivatives() {
        let ham = Hamiltonian::anisotropic_twist(1, Profile::Cubic { c: 0.7 }, 1.0, 2.0).unwrap();
        let q = [2.0, 0.3, 0.1]; // sigma = 4.18 > 1
        let d = ham.derivatives(&q, 0.0);
        assert_eq!(d.value, 0.0);
        assert!(d.grad.iter().all(|v| *v == 0.0));
        assert!(d.hess.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Hamiltonian::z_perturbed_twist(1, Profile::Cubic { c: 1.0 }, 1.0).is_err());
        assert!(Hamiltonian::anisotropic_twist(1, Profile::Cubic { c: 1.0 }, 2.0, 2.0).is_err());
        assert!(Hamiltonian::radial_twist(0, Profile::Cubic { c: 1.0 }).is_err());
        assert!(Hamiltonian::radial_twist(1, Profile::Cubic { c: -1.0 }).is_err());
        assert!(Hamiltonian::hamiltonian_lift(1, Profile::Cubic { c: 1.0 }, 0.0, 1.0).is_err());
    }

    #[test]
    fn zero_amplitude_profile_is_the_zero_hamiltonian() {
        let ham = Hamiltonian::radial_twist(1, Profile::Cubic { c: 0.0 }).unwrap();
        assert!(!ham.positive());
        assert_eq!(ham.value(&[0.1, 0.2, 0.3], 0.0), 0.0);
    }

    #[test]
    fn z_perturbed_with_zero_eps_equals_radial() {
        let radial = Hamiltonian::radial_twist(1, Profile::Quadratic { c: 2.0 }).unwrap();
        let perturbed = Hamiltonian::z_perturbed_twist(1, Profile::Quadratic { c: 2.0 }, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let q = sample_inside(&radial, &mut rng);
            assert_eq!(radial.value(&q, 0.0), perturbed.value(&q, 0.0));
            let dr = radial.derivatives(&q, 0.0);
            let dp = perturbed.derivatives(&q, 0.0);
            assert_eq!(dr.grad, dp.grad);
            assert_eq!(dr.hess, dp.hess);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_hamiltonian() -> impl Strategy<Value = Hamiltonian> {
            (
                1usize..3,
                prop_oneof![
                    (0.1f64..3.0).prop_map(|c| Profile::Quadratic { c }),
                    (0.1f64..3.0).prop_map(|c| Profile::Cubic { c }),
                ],
                0usize..4,
                0.2f64..2.0,
                0.2f64..2.0,
                -0.9f64..0.9,
            )
                .prop_map(|(n, profile, family, a, b, eps)| match family {
                    0 => Hamiltonian::radial_twist(n, profile).unwrap(),
                    1 => Hamiltonian::z_perturbed_twist(n, profile, eps).unwrap(),
                    2 => Hamiltonian::anisotropic_twist(n, profile, a, a + b).unwrap(),
                    _ => Hamiltonian::hamiltonian_lift(n, profile, a, b).unwrap(),
                })
        }

        fn flat_point(ham: &Hamiltonian, spread: &[f64], z: f64) -> Vec<f64> {
            let mut q: Vec<f64> = (0..2 * ham.n()).map(|i| spread[i % spread.len()]).collect();
            q.push(z);
            q
        }

        proptest! {
            /// H and every derivative vanish identically outside the
            /// support ellipsoid, and H is strictly positive strictly
            /// inside whenever the profile amplitude is.
            #[test]
            fn support_dichotomy(
                ham in arb_hamiltonian(),
                spread in proptest::collection::vec(-3.0f64..3.0, 4),
                z in -2.0f64..2.0,
            ) {
                let q = flat_point(&ham, &spread, z);
                let p = ContactPoint::from_flat(&q, false);
                let sigma = ham.support().sigma(&p);
                let d = ham.derivatives(&q, 0.0);
                prop_assert_eq!(d.value, ham.value(&q, 0.0));
                // The margin keeps the two sigma accumulation orders from
                // disagreeing about which side of the edge a point is on.
                if sigma >= 1.0 + 1e-12 {
                    prop_assert_eq!(d.value, 0.0);
                    prop_assert!(d.grad.iter().all(|v| *v == 0.0));
                    prop_assert!(d.hess.iter().all(|v| *v == 0.0));
                } else if sigma <= 0.999 && ham.positive() {
                    prop_assert!(d.value > 0.0, "sigma = {}, value = {}", sigma, d.value);
                }
            }

            /// Every catalog member really is 1-periodic in z.
            #[test]
            fn unit_z_period(
                ham in arb_hamiltonian(),
                spread in proptest::collection::vec(-1.0f64..1.0, 4),
                z in -2.0f64..2.0,
                k in -3i32..=3,
            ) {
                let q = flat_point(&ham, &spread, z);
                let shifted = flat_point(&ham, &spread, z + f64::from(k));
                let dv = (ham.value(&q, 0.0) - ham.value(&shifted, 0.0)).abs();
                prop_assert!(dv <= 1e-9 * (1.0 + ham.profile().amplitude()));
            }
        }
    }
}
