//! Measured checks of the projected dynamics, with their pass thresholds.
//!
//! Each function returns the measured quantity; comparing against the
//! `*_TOL` constants is left to the caller so reports can print both.

use crate::dynamics::{PhasePoint, Problem};
use crate::error::{Error, Result};
use crate::geometry::project;
use crate::integrators::{drift_report, integrate_ellipsoid, integrate_planar, DriftReport, IntegratorConfig, Trajectory};
use crate::projective::{
    finite_difference_tangential, lift_velocity, project_trajectory, qprime_independence_residual,
    relation_residual, tangential_field, EllipsoidState,
};
use crate::sampling::{PhaseBox, SweepRng};
use crate::vector::Vec3;

pub const RELATION_TOL: f64 = 1e-10;
pub const FIRST_INTEGRAL_DRIFT_TOL: f64 = 1e-8;
pub const G_DRIFT_TOL: f64 = 1e-8;
pub const CONSTRAINT_TOL: f64 = 1e-9;
pub const TWO_ROUTE_TOL: f64 = 1e-6;
pub const QPRIME_TOL: f64 = 1e-6;
pub const FIT_RESIDUAL_TOL: f64 = 1e-8;
pub const FIT_COEFFICIENT_TOL: f64 = 1e-9;
pub const KEPLER_RESIDUAL_TOL: f64 = 1e-3;
pub const KEPLER_RATIO_RANGE: (f64, f64) = (1.8, 2.2);
pub const KEPLER_A_SMALL: f64 = 1e-4;

/// Default initial condition `q = (0, 2, 0)`, `p = (0.3, 0, 0.6)`.
pub fn default_start() -> PhasePoint {
    PhasePoint::new(Vec3::new(0.0, 2.0, 0.0), Vec3::new(0.3, 0.0, 0.6))
}

/// Largest `|G − (J + E/2 − Θ²/4)|` over `samples` seeded phase points, with
/// the masses of `prob` and `a = 1`.
pub fn relation_sweep(prob: &Problem, samples: usize, seed: u64) -> Result<f64> {
    let unit = prob.with_a(1.0)?;
    let mut rng = SweepRng::new(seed);
    let phase_box = PhaseBox::default();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let pp = phase_box.sample(&mut rng, &unit);
        worst = worst.max(relation_residual(&pp, &unit)?.abs());
    }
    Ok(worst)
}

/// First-integral drift of a spatial run.
pub fn planar_drift(start: &PhasePoint, prob: &Problem, t_end: f64, cfg: &IntegratorConfig) -> Result<DriftReport> {
    let traj = integrate_planar(start, prob, t_end, cfg).map_err(|e| e.error)?;
    drift_report(&traj).ok_or(Error::InvalidInput("empty trajectory"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidRunCheck {
    /// `max_τ |G(τ) − G(0)|`.
    pub g_drift: f64,
    pub max_norm_residual: f64,
    pub max_tangency_residual: f64,
    pub samples: usize,
}

/// Integrates the intrinsic ODE from the lift of `start` and measures the
/// energy drift and the per-step constraint residuals.
pub fn ellipsoid_run(start: &PhasePoint, prob: &Problem, tau_end: f64, cfg: &IntegratorConfig) -> Result<EllipsoidRunCheck> {
    let lifted = lift_velocity(start, &prob.metric())?;
    let traj = integrate_ellipsoid(&lifted, prob, tau_end, cfg).map_err(|e| e.error)?;
    Ok(summarize_ellipsoid(&traj))
}

fn summarize_ellipsoid(traj: &Trajectory<EllipsoidState>) -> EllipsoidRunCheck {
    let g0 = traj.diagnostics[0][0];
    let mut out = EllipsoidRunCheck { g_drift: 0.0, max_norm_residual: 0.0, max_tangency_residual: 0.0, samples: traj.len() };
    for d in &traj.diagnostics {
        out.g_drift = out.g_drift.max((d[0] - g0).abs());
        out.max_norm_residual = out.max_norm_residual.max(d[1].abs());
        out.max_tangency_residual = out.max_tangency_residual.max(d[2].abs());
    }
    out
}

/// The spatial run projected onto the ellipsoid in the time `τ`, extended
/// until `τ` covers `tau_end`.
pub fn projected_route(start: &PhasePoint, prob: &Problem, tau_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory<EllipsoidState>> {
    let metric = prob.metric();
    // dτ/dt ≤ 1, and equals 1/‖q0‖_*² at the start
    let mut t_end = tau_end * metric.norm_sq(start.q.lift()).max(1.0) * 1.5;
    loop {
        let traj = integrate_planar(start, prob, t_end, cfg).map_err(|e| e.error)?;
        let projected = project_trajectory(&traj, prob)?;
        if projected.last_time().is_some_and(|t| t >= tau_end) {
            return Ok(projected);
        }
        t_end *= 2.0;
        if t_end > 1e6 * tau_end.max(1.0) {
            return Err(Error::InvalidInput("projected time does not reach tau_end"));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoRouteCheck {
    /// Largest `*`-distance between the two `Q`-curves on `[0, tau_end]`.
    pub max_distance: f64,
    pub compared_points: usize,
}

/// Compares route A (integrate in R³, project, reparametrize) with route B
/// (integrate the intrinsic ODE from the lifted start). Each route's samples
/// are checked against the other's cubic Hermite interpolant.
pub fn two_route(start: &PhasePoint, prob: &Problem, tau_end: f64, cfg: &IntegratorConfig) -> Result<TwoRouteCheck> {
    let metric = prob.metric();
    let route_a = projected_route(start, prob, tau_end, cfg)?;
    let lifted = lift_velocity(start, &metric)?;
    let route_b = integrate_ellipsoid(&lifted, prob, tau_end, cfg).map_err(|e| e.error)?;
    let mut worst = 0.0f64;
    let mut compared = 0;
    for (from, other) in [(&route_a, &route_b), (&route_b, &route_a)] {
        for (tau, s) in from.times.iter().zip(&from.states) {
            if *tau > tau_end {
                break;
            }
            if let Some(q) = other.interpolate_point(*tau) {
                worst = worst.max(metric.norm(q - s.point().as_vec()));
                compared += 1;
            }
        }
    }
    Ok(TwoRouteCheck { max_distance: worst, compared_points: compared })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QprimeCheck {
    /// Max pairwise deviation over velocities through `π(start.q)`.
    pub pairwise: f64,
    /// Max `*`-distance between the finite-differenced tangential `Q″` and
    /// the tangential field over random states.
    pub versus_field: f64,
}

pub fn qprime_independence(start: &PhasePoint, prob: &Problem, velocities: usize, states: usize, seed: u64) -> Result<QprimeCheck> {
    let metric = prob.metric();
    let point = project(start.q.lift(), &metric)?;
    let pairwise = qprime_independence_residual(&point, prob, velocities)?;
    let mut rng = SweepRng::new(seed);
    let phase_box = PhaseBox::default();
    let mut versus_field = 0.0f64;
    for _ in 0..states {
        let pp = phase_box.sample(&mut rng, prob);
        let fd = finite_difference_tangential(&pp, prob)?;
        let field = tangential_field(&project(pp.q.lift(), &metric)?, prob)?;
        versus_field = versus_field.max(metric.norm(fd - field));
    }
    Ok(QprimeCheck { pairwise, versus_field })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeplerCheck {
    pub residual: f64,
    pub residual_halved: f64,
    /// `residual / residual_halved`; `None` when both vanish.
    pub ratio: Option<f64>,
}

/// `|E − ‖q×p‖²|` at `a_small` and `a_small/2`.
pub fn kepler_limit(pp: &PhasePoint, prob: &Problem, a_small: f64) -> Result<KeplerCheck> {
    let residual = crate::dynamics::kepler_limit_check(pp, prob, a_small)?;
    let residual_halved = crate::dynamics::kepler_limit_check(pp, prob, 0.5 * a_small)?;
    let ratio = (residual_halved > 0.0).then(|| residual / residual_halved);
    Ok(KeplerCheck { residual, residual_halved, ratio })
}
