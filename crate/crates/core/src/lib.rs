//! Euler's two-fixed-center problem and its central projection onto an
//! ellipsoid in R⁴.
//!
//! The crate is `no_std` (it needs `alloc` for trajectories and sweeps) and
//! carries the full numerical stack:
//!
//! - [`geometry`]: the weighted `*`-metric on R⁴, the ellipsoid `E_a`, the
//!   central projection and its inverse.
//! - [`dynamics`]: the two-center vector field and the first integrals
//!   `J`, `Θ`, `E`.
//! - [`projective`]: lifted velocities, the tangential field, the intrinsic
//!   dynamics on the ellipsoid and the ellipsoidal energy `G`.
//! - [`coords`]: the classical ellipsoidal position coordinates `(α, β, ϑ)`.
//! - [`integrators`]: an adaptive Dormand–Prince 5(4) driver for both
//!   the spatial and the intrinsic ODE, plus drift diagnostics.
//! - [`verify`]: the measured checks behind the `verify-theorem` command.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod coords;
pub mod dynamics;
mod error;
pub mod geometry;
pub mod integrators;
mod lstsq;
pub mod projective;
pub mod sampling;
mod vector;
pub mod verify;

pub use coords::{from_ellipsoidal, rotational_invariance_check, to_ellipsoidal, EllipsoidalPosition};
pub use dynamics::{
    acceleration, euler_integral_e, hamiltonian_j, kepler_limit_check, theta, PhasePoint, Problem,
};
pub use error::{Error, Result};
pub use geometry::{
    duality_residual, project, star_inner, star_norm, unproject, EllipsoidPoint, StarMetric,
};
pub use integrators::{
    drift_report, integrate_ellipsoid, integrate_planar, DriftReport, IntegratorConfig, Trajectory,
    TrajectoryError,
};
pub use projective::{
    ellipsoidal_energy_g, finite_difference_tangential, fit_integral_relation, intrinsic_step_rhs, lift_velocity,
    potential_on_ellipsoid, project_trajectory, qprime_independence_residual, qprime_norm_formula, relation_residual,
    tangential_field, time_reparametrize, EllipsoidState, IntegralRelation,
};
pub use vector::{Vec3, Vec4};
