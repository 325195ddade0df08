//! Closed-form oracle for the rotation families.
//!
//! Everything here is derived by hand from the generating Hamiltonians and
//! evaluated without touching the library's integrator or solvers, so the
//! acceptance tests compare two independent computations.
//!
//! For a radial Hamiltonian H = h(sigma), sigma = a|x|^2 + b|y|^2, the flow
//! preserves sigma and rotates each level ellipse at the uniform angular
//! rate omega(sigma) = 2 sqrt(ab) h'(sigma), while z advances at the rate
//! h - sigma h' (the average of H - y . H_y over a turn). The k-th iterate
//! has translated points exactly on the axis and on the ellipses where
//! k * omega(sigma) is a multiple of 2 pi, with contact action
//! k (h - sigma h').

/// One predicted orbit of translated points: the conserved quadratic
/// `sigma` (0 for the axis) and the contact action of the k-th iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orbit {
    pub sigma: f64,
    pub action: f64,
}

fn push_sorted(mut orbits: Vec<Orbit>) -> Vec<Orbit> {
    orbits.sort_by(|p, q| p.sigma.total_cmp(&q.sigma));
    orbits
}

/// Orbits of the k-th iterate for the quadratic profile h(s) = c (1-s)^2
/// with a = b = 1: omega = -4c(1-s), action per unit time c (1 - s^2).
/// Resonant radii solve 2 k c (1 - s) = pi m, m = 1, 2, ...
pub fn quadratic_radial_orbits(c: f64, k: usize) -> Vec<Orbit> {
    let kf = k as f64;
    let mut orbits = vec![Orbit {
        sigma: 0.0,
        action: kf * c,
    }];
    let mut m = 1;
    loop {
        let one_minus_s = m as f64 * std::f64::consts::PI / (2.0 * kf * c);
        if one_minus_s >= 1.0 {
            break;
        }
        let s = 1.0 - one_minus_s;
        orbits.push(Orbit {
            sigma: s,
            action: kf * c * (1.0 - s * s),
        });
        m += 1;
    }
    push_sorted(orbits)
}

/// Orbits of the k-th iterate for the cubic profile h(s) = c (1-s)^3 with
/// a = b = 1: omega = -6c(1-s)^2, action per unit time
/// h - s h' = c (1-s)^2 (1 + 2s). Resonant radii solve
/// 3 k c (1-s)^2 = pi m.
pub fn cubic_radial_orbits(c: f64, k: usize) -> Vec<Orbit> {
    let kf = k as f64;
    let mut orbits = vec![Orbit {
        sigma: 0.0,
        action: kf * c,
    }];
    let mut m = 1;
    loop {
        let sq = m as f64 * std::f64::consts::PI / (3.0 * kf * c);
        if sq >= 1.0 {
            break;
        }
        let s = 1.0 - sq.sqrt();
        orbits.push(Orbit {
            sigma: s,
            action: kf * c * (1.0 - s) * (1.0 - s) * (1.0 + 2.0 * s),
        });
        m += 1;
    }
    push_sorted(orbits)
}

/// Orbits of the k-th iterate for the anisotropic cubic Hamiltonian
/// h(a x^2 + b y^2), h(s) = c (1-s)^3: the ellipse sigma = const rotates at
/// 2 sqrt(ab) |h'|, so resonances solve 6 sqrt(ab) k c (1 - sigma)^2
/// = 2 pi m; the action formula k c (1-s)^2 (1+2s) is unchanged.
pub fn anisotropic_cubic_orbits(c: f64, a: f64, b: f64, k: usize) -> Vec<Orbit> {
    let kf = k as f64;
    let mut orbits = vec![Orbit {
        sigma: 0.0,
        action: kf * c,
    }];
    let mut m = 1;
    loop {
        let sq = m as f64 * std::f64::consts::PI / (3.0 * kf * c * (a * b).sqrt());
        if sq >= 1.0 {
            break;
        }
        let s = 1.0 - sq.sqrt();
        orbits.push(Orbit {
            sigma: s,
            action: kf * c * (1.0 - s) * (1.0 - s) * (1.0 + 2.0 * s),
        });
        m += 1;
    }
    push_sorted(orbits)
}

/// Amplitude that tunes the z-perturbed family so the axis Reeb trajectory
/// traverses exactly one z-period per unit time.
///
/// On the axis the flow reduces to dz/dt = c w(z), w(z) = 1 + eps sin(2 pi
/// z), and dg/dt = c w'(z), so g(T) = ln(w(z_T) / w(z_0)). The period of the
/// z traversal is (1/c) * integral_0^1 dz / (1 + eps sin 2 pi z)
/// = 1 / (c sqrt(1 - eps^2)); choosing c = 1/sqrt(1 - eps^2) makes the
/// time-1 map send z to z + 1 on the axis, so every axis point is a
/// translated point of every iterate, with action exactly k.
pub fn tuned_axis_amplitude(eps: f64) -> f64 {
    1.0 / (1.0 - eps * eps).sqrt()
}

/// Euclidean distance from `v` to the nearest integer.
pub fn distance_to_integers(v: f64) -> f64 {
    (v - v.round()).abs()
}

#[allow(dead_code)]
pub fn radius(orbit: &Orbit) -> f64 {
    orbit.sigma.sqrt()
}
