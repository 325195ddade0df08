//! Contactomorphisms as words of Hamiltonian flow maps.
//!
//! A `ContactMap` is an ordered word of flow atoms, each the solution
//! operator of a contact Hamiltonian between two times. Evaluation chains
//! the atoms and accumulates the conformal factor additively,
//!
//! ```text
//! g_(m2 . m1)(q) = g_m2(m1 q) + g_m1(q)
//! ```
//!
//! together with the chain rule for the differential and for grad g. The
//! same bookkeeping gives iterates (word repetition) and inverses (reversed
//! word, reversed time intervals).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::flow::{flow, flow_point, FlowOpts, FlowState};
use crate::hamiltonian::{Hamiltonian, Profile};
use crate::point::ContactPoint;
use crate::Result;

/// One letter of the word: the flow of `hamiltonian` from `t0` to `t1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAtom {
    pub hamiltonian: Hamiltonian,
    pub t0: f64,
    pub t1: f64,
}

impl FlowAtom {
    fn inverse(&self) -> FlowAtom {
        FlowAtom {
            hamiltonian: self.hamiltonian.clone(),
            t0: self.t1,
            t1: self.t0,
        }
    }
}

/// Image, conformal factor, and variational data of a map at one point.
#[derive(Debug, Clone)]
pub struct MapEvaluation {
    pub image: ContactPoint,
    pub g: f64,
    pub grad_g: DVector<f64>,
    pub jacobian: DMatrix<f64>,
}

impl MapEvaluation {
    pub fn identity(q: &ContactPoint) -> Self {
        let st = FlowState::identity(q);
        MapEvaluation {
            image: st.point,
            g: st.g,
            grad_g: st.grad_g,
            jacobian: st.jacobian,
        }
    }

    /// e^g, the conformal stretch factor.
    pub fn stretch(&self) -> f64 {
        self.g.exp()
    }
}

/// A compactly supported contactomorphism given as a word of flow atoms.
/// The empty word is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactMap {
    atoms: Vec<FlowAtom>,
    n: usize,
    periodic_z: bool,
    opts: FlowOpts,
}

impl ContactMap {
    pub fn identity(n: usize, periodic_z: bool) -> Self {
        ContactMap {
            atoms: Vec::new(),
            n,
            periodic_z,
            opts: FlowOpts::default(),
        }
    }

    /// Time-1 flow map of a single Hamiltonian.
    pub fn from_hamiltonian(ham: Hamiltonian, periodic_z: bool, opts: FlowOpts) -> Self {
        let n = ham.n();
        ContactMap {
            atoms: vec![FlowAtom {
                hamiltonian: ham,
                t0: 0.0,
                t1: 1.0,
            }],
            n,
            periodic_z,
            opts,
        }
    }

    pub fn atoms(&self) -> &[FlowAtom] {
        &self.atoms
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn periodic_z(&self) -> bool {
        self.periodic_z
    }

    pub fn opts(&self) -> FlowOpts {
        self.opts
    }

    pub fn with_opts(mut self, opts: FlowOpts) -> Self {
        self.opts = opts;
        self
    }

    pub fn is_identity_word(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Total integration time of one application, used for cost estimates.
    pub fn word_time(&self) -> f64 {
        self.atoms.iter().map(|a| (a.t1 - a.t0).abs()).sum()
    }

    /// The k-th iterate as word repetition. k = 0 is the identity.
    pub fn iterate(&self, k: usize) -> ContactMap {
        let mut atoms = Vec::with_capacity(self.atoms.len() * k);
        for _ in 0..k {
            atoms.extend(self.atoms.iter().cloned());
        }
        ContactMap {
            atoms,
            n: self.n,
            periodic_z: self.periodic_z,
            opts: self.opts,
        }
    }

    /// The inverse map: reversed word, each atom integrated backwards.
    pub fn inverse(&self) -> ContactMap {
        ContactMap {
            atoms: self.atoms.iter().rev().map(FlowAtom::inverse).collect(),
            n: self.n,
            periodic_z: self.periodic_z,
            opts: self.opts,
        }
    }

    /// `outer . inner` (apply `inner` first).
    pub fn compose(outer: &ContactMap, inner: &ContactMap) -> Result<ContactMap> {
        if outer.n != inner.n {
            return Err(Error::DimensionMismatch {
                expected: inner.n,
                got: outer.n,
            });
        }
        let mut atoms = inner.atoms.clone();
        atoms.extend(outer.atoms.iter().cloned());
        Ok(ContactMap {
            atoms,
            n: inner.n,
            periodic_z: inner.periodic_z || outer.periodic_z,
            opts: inner.opts,
        })
    }

    /// Full evaluation with variational data.
    pub fn evaluate(&self, q: &ContactPoint) -> Result<MapEvaluation> {
        self.check_point(q)?;
        let mut acc = MapEvaluation::identity(q);
        for atom in &self.atoms {
            let st = flow(&atom.hamiltonian, &acc.image, atom.t0, atom.t1, self.opts)?;
            acc.g += st.g;
            acc.grad_g += acc.jacobian.transpose() * &st.grad_g;
            acc.jacobian = &st.jacobian * &acc.jacobian;
            acc.image = st.point;
        }
        Ok(acc)
    }

    /// Image and conformal factor only; the fast path for line searches.
    pub fn evaluate_point(&self, q: &ContactPoint) -> Result<(ContactPoint, f64)> {
        self.check_point(q)?;
        let mut image = q.clone();
        let mut g = 0.0;
        for atom in &self.atoms {
            let (p, dg) = flow_point(&atom.hamiltonian, &image, atom.t0, atom.t1, self.opts)?;
            g += dg;
            image = p;
        }
        Ok((image, g))
    }

    /// The smallest support quadratic form value over the word's atoms.
    /// Below 1 means at least one atom can move the point.
    pub fn sigma_min(&self, q: &ContactPoint) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.hamiltonian.support().sigma(q))
            .fold(f64::INFINITY, f64::min)
    }

    /// Half-widths of the enclosing planar seed box (per x axis, per y axis),
    /// the union over the word's atoms.
    pub fn planar_half_widths(&self) -> Vec<f64> {
        let mut widths = vec![0.0_f64; 2 * self.n];
        for atom in &self.atoms {
            let w = atom.hamiltonian.support().planar_half_widths(self.n);
            for (acc, v) in widths.iter_mut().zip(w) {
                *acc = acc.max(v);
            }
        }
        if self.atoms.is_empty() {
            widths.fill(1.0);
        }
        widths
    }

    /// True when every atom is independent of z (hence g vanishes
    /// identically and the map is a prequantization lift).
    pub fn z_independent(&self) -> bool {
        self.atoms.iter().all(|a| a.hamiltonian.z_independent())
    }

    /// True when every atom is 1-periodic in z, the condition for living on
    /// R^{2n} x S^1.
    pub fn z_periodic(&self) -> bool {
        self.atoms.iter().all(|a| a.hamiltonian.z_periodic())
    }

    fn check_point(&self, q: &ContactPoint) -> Result<()> {
        if q.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: q.n(),
            });
        }
        Ok(())
    }
}

/// Parameters of a catalog family; unknown or inapplicable fields are
/// rejected so config typos surface early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    /// Bump amplitude h(0).
    pub c: f64,
    /// Profile power: 2 (quadratic) or 3 (cubic, default).
    #[serde(default = "default_power")]
    pub power: u32,
    /// z-perturbation amplitude, z_perturbed_twist only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Planar form weight on |x|^2, anisotropic_twist and hamiltonian_lift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Planar form weight on |y|^2, anisotropic_twist and hamiltonian_lift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

fn default_power() -> u32 {
    3
}

impl FamilyParams {
    pub fn new(c: f64) -> Self {
        FamilyParams {
            c,
            power: 3,
            eps: None,
            a: None,
            b: None,
        }
    }

    pub fn with_power(mut self, power: u32) -> Self {
        self.power = power;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn with_weights(mut self, a: f64, b: f64) -> Self {
        self.a = Some(a);
        self.b = Some(b);
        self
    }

    fn profile(&self, family: &str) -> Result<Profile> {
        match self.power {
            2 => Ok(Profile::Quadratic { c: self.c }),
            3 => Ok(Profile::Cubic { c: self.c }),
            p => Err(Error::InvalidFamily {
                family: family.into(),
                reason: format!("profile power must be 2 or 3, got {p}"),
            }),
        }
    }
}

/// Construct a catalog family map: the time-1 flow of the named Hamiltonian.
pub fn make_family(
    name: &str,
    params: &FamilyParams,
    n: usize,
    periodic_z: bool,
    opts: FlowOpts,
) -> Result<ContactMap> {
    let reject = |field: &str| Error::InvalidFamily {
        family: name.into(),
        reason: format!("parameter `{field}` does not apply to this family"),
    };
    let require = |field: &str, v: Option<f64>| {
        v.ok_or_else(|| Error::InvalidFamily {
            family: name.into(),
            reason: format!("missing required parameter `{field}`"),
        })
    };
    let profile = params.profile(name)?;
    let ham = match name {
        "radial_twist" => {
            if params.eps.is_some() {
                return Err(reject("eps"));
            }
            if params.a.is_some() || params.b.is_some() {
                return Err(reject("a/b"));
            }
            Hamiltonian::radial_twist(n, profile)?
        }
        "z_perturbed_twist" => {
            if params.a.is_some() || params.b.is_some() {
                return Err(reject("a/b"));
            }
            Hamiltonian::z_perturbed_twist(n, profile, require("eps", params.eps)?)?
        }
        "anisotropic_twist" => {
            if params.eps.is_some() {
                return Err(reject("eps"));
            }
            Hamiltonian::anisotropic_twist(n, profile, require("a", params.a)?, require("b", params.b)?)?
        }
        "hamiltonian_lift" => {
            if params.eps.is_some() {
                return Err(reject("eps"));
            }
            Hamiltonian::hamiltonian_lift(
                n,
                profile,
                params.a.unwrap_or(1.0),
                params.b.unwrap_or(1.0),
            )?
        }
        other => {
            return Err(Error::InvalidFamily {
                family: other.into(),
                reason: "unknown family name".into(),
            })
        }
    };
    Ok(ContactMap::from_hamiltonian(ham, periodic_z, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn z_perturbed() -> ContactMap {
        make_family(
            "z_perturbed_twist",
            &FamilyParams::new(1.0).with_eps(0.3),
            1,
            true,
            FlowOpts::with_steps(800),
        )
        .unwrap()
    }

    fn sample_disk(rng: &mut ChaCha8Rng) -> ContactPoint {
        loop {
            let x = rng.gen_range(-1.0..1.0);
            let y = rng.gen_range(-1.0..1.0);
            if x * x + y * y < 0.9 {
                return ContactPoint::dim3(x, y, rng.gen_range(0.0..1.0), true);
            }
        }
    }

    #[test]
    fn identity_word_evaluates_to_identity() {
        let id = ContactMap::identity(1, false);
        let q = ContactPoint::dim3(0.3, 0.2, 0.1, false);
        let ev = id.evaluate(&q).unwrap();
        assert_eq!(ev.image, q);
        assert_eq!(ev.g, 0.0);
        assert!(ev.jacobian.is_identity(0.0));
    }

    #[test]
    fn inverse_round_trip_and_g_antisymmetry() {
        let m = z_perturbed();
        let minv = m.inverse();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let q = sample_disk(&mut rng);
            let fwd = m.evaluate(&q).unwrap();
            let back = minv.evaluate(&fwd.image).unwrap();
            assert!(back.image.distance(&q) < 1e-9, "round trip {}", back.image.distance(&q));
            assert_abs_diff_eq!(back.g, -fwd.g, epsilon = 1e-9);
        }
    }

    #[test]
    fn conformal_factor_cocycle_over_iterates() {
        let m = z_perturbed();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let q = sample_disk(&mut rng);
            for k in 2..=5usize {
                let joint = m.iterate(k).evaluate(&q).unwrap().g;
                let mut acc = 0.0;
                let mut p = q.clone();
                for _ in 0..k {
                    let ev = m.evaluate(&p).unwrap();
                    acc += ev.g;
                    p = ev.image;
                }
                assert_abs_diff_eq!(joint, acc, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn composition_matches_chained_evaluation() {
        let m = z_perturbed();
        let m2 = m.iterate(2);
        let comp = ContactMap::compose(&m, &m).unwrap();
        assert_eq!(comp.atoms().len(), m2.atoms().len());
        let q = ContactPoint::dim3(0.2, -0.3, 0.4, true);
        let via_comp = comp.evaluate(&q).unwrap();
        let chained_image = m.evaluate(&m.evaluate(&q).unwrap().image).unwrap();
        let direct = m2.evaluate(&q).unwrap();
        assert!(via_comp.image.distance(&direct.image) < 1e-12);
        assert!(via_comp.image.distance(&chained_image.image) < 1e-9);
    }

    #[test]
    fn z_independent_maps_have_zero_conformal_factor() {
        let m = make_family(
            "radial_twist",
            &FamilyParams::new(std::f64::consts::PI).with_power(2),
            1,
            false,
            FlowOpts::with_steps(400),
        )
        .unwrap();
        assert!(m.z_independent());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let q = sample_disk(&mut rng);
            let ev = m.evaluate(&q).unwrap();
            assert_eq!(ev.g, 0.0);
            assert_eq!(ev.grad_g.as_slice(), &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn outside_support_is_fixed_exactly() {
        let m = z_perturbed();
        let q = ContactPoint::dim3(1.5, 0.4, 0.2, true);
        let ev = m.iterate(3).evaluate(&q).unwrap();
        assert_eq!(ev.image, q);
        assert_eq!(ev.g, 0.0);
        assert!(ev.jacobian.is_identity(0.0));
    }

    #[test]
    fn unknown_family_is_rejected() {
        let err = make_family(
            "downward_spiral",
            &FamilyParams::new(1.0),
            1,
            false,
            FlowOpts::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("unknown family"));
    }

    #[test]
    fn inapplicable_parameters_are_rejected() {
        assert!(make_family(
            "radial_twist",
            &FamilyParams::new(1.0).with_eps(0.1),
            1,
            false,
            FlowOpts::default()
        )
        .is_err());
        assert!(make_family(
            "z_perturbed_twist",
            &FamilyParams::new(1.0),
            1,
            true,
            FlowOpts::default()
        )
        .is_err());
        assert!(make_family(
            "anisotropic_twist",
            &FamilyParams::new(1.0).with_weights(2.0, 2.0),
            1,
            false,
            FlowOpts::default()
        )
        .is_err());
    }

    #[test]
    fn iterate_zero_is_identity() {
        let m = z_perturbed();
        assert!(m.iterate(0).is_identity_word());
    }
}
