//! Numerical laboratory for contactomorphisms of R^{2n+1} and R^{2n} x S^1.
//!
//! The ambient contact structure is the standard one, `alpha = dz - y.dx`,
//! with Reeb field `d/dz`. The crate integrates contact Hamiltonian flows
//! together with their variational data (differential and conformal-factor
//! gradient), locates translated points of iterated compactly supported
//! contactomorphisms by multistart damped Newton, and cross-validates every
//! solution through an independent channel: the Legendrian graph of the map
//! in the 1-jet space of R^{2n+1}, where translated points appear as
//! intersections with the zero wall and contact actions appear as the fiber
//! coordinate.
//!
//! Conventions, fixed once and used everywhere:
//!
//! * `X_H = (-H_y, H_x + y*H_z, H - y.H_y)`, so `alpha(X_H) = H` and a
//!   constant Hamiltonian generates the Reeb flow.
//! * The conformal factor `g` of a flow map satisfies `g' = H_z` along
//!   trajectories, with `phi^* alpha = e^g alpha`.
//! * `z` is always carried as a real lift; the circle case only changes
//!   geometric comparisons (mod 1) and never the stored coordinates.

pub mod census;
pub mod config;
pub mod dedupe;
pub mod error;
pub mod flow;
pub mod hamiltonian;
pub mod jet;
pub mod map;
pub mod newton;
pub mod numeric;
pub mod point;
pub mod report;
pub mod translated;
pub mod verify;

pub use error::Error;
pub use point::ContactPoint;

/// Convenient alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
