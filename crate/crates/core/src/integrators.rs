//! Adaptive Dormand–Prince 5(4) integration of the spatial two-center ODE
//! and of the intrinsic ODE on the ellipsoid, with invariant diagnostics.
//!
//! Step control follows Hairer's DOPRI5: a mixed absolute/relative RMS error
//! norm and a PI controller (`β = 0.04`). Only accepted steps are recorded.

// failed runs hand back their partial trajectory inside the error
#![allow(clippy::result_large_err)]

use alloc::vec::Vec;
use core::fmt::Debug;

use thiserror::Error;

use crate::dynamics::{acceleration_guarded, euler_integral_e, hamiltonian_j, theta, PhasePoint, Problem};
use crate::error::{Error, Result};
use crate::projective::{ellipsoidal_energy_g, intrinsic_step_rhs, EllipsoidState};
use crate::vector::Vec4;

/// Constraint residual beyond which an ellipsoid run is declared corrupt.
pub const CONSTRAINT_INTEGRITY_BOUND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_center_distance: f64,
    /// Project `(Q, Q′)` back onto the manifold and its tangent space after
    /// each accepted step (ellipsoid runs only).
    pub renormalize_constraint: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            max_step: 0.1,
            min_center_distance: 1e-8,
            renormalize_constraint: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if positive(self.rel_tol)
            && positive(self.abs_tol)
            && positive(self.max_step)
            && positive(self.min_center_distance)
        {
            Ok(())
        } else {
            Err(Error::InvalidInput("integrator tolerances, max_step and min_center_distance must be > 0"))
        }
    }
}

/// Samples at accepted steps. `diagnostics[i]` holds `(J, Θ, E)` for
/// spatial runs and `(G, ‖Q‖_* − 1, (Q, Q′)_*)` for ellipsoid runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub diagnostics: Vec<[f64; 3]>,
    pub labels: [&'static str; 3],
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

pub const PLANAR_LABELS: [&str; 3] = ["J", "Theta", "E"];
pub const ELLIPSOID_LABELS: [&str; 3] = ["G", "norm_residual", "tangency_residual"];

impl<S> Trajectory<S> {
    pub fn new(labels: [&'static str; 3]) -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            diagnostics: Vec::new(),
            labels,
            accepted_steps: 0,
            rejected_steps: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, state: S, diag: [f64; 3]) {
        self.times.push(t);
        self.states.push(state);
        self.diagnostics.push(diag);
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }
}

impl Trajectory<EllipsoidState> {
    /// Cubic Hermite interpolation of `Q` at parameter `tau`, using `Q′` as
    /// the derivative. `None` outside the sampled range.
    pub fn interpolate_point(&self, tau: f64) -> Option<Vec4> {
        let first = *self.times.first()?;
        let last = *self.times.last()?;
        if tau < first || tau > last {
            return None;
        }
        let i = match self.times.binary_search_by(|t| t.partial_cmp(&tau).expect("finite grid")) {
            Ok(i) => return Some(self.states[i].point().as_vec()),
            Err(i) => i,
        };
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (s0, s1) = (&self.states[i - 1], &self.states[i]);
        Some(cubic_hermite(
            t0,
            t1,
            s0.point().as_vec(),
            s0.velocity(),
            s1.point().as_vec(),
            s1.velocity(),
            tau,
        ))
    }
}

pub(crate) fn cubic_hermite(t0: f64, t1: f64, y0: Vec4, d0: Vec4, y1: Vec4, d1: Vec4, t: f64) -> Vec4 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    y0 * h00 + d0 * (h10 * h) + y1 * h01 + d1 * (h11 * h)
}

/// An aborted run: the cause plus every step accepted before it.
#[derive(Debug, Clone, Error)]
#[error("integration aborted: {error}")]
pub struct TrajectoryError<S: Debug> {
    pub error: Error,
    pub partial: Trajectory<S>,
}

/// Autonomous first-order system `y′ = f(y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, y: &[f64; N]) -> Result<[f64; N]>;
}

pub(crate) struct PlanarSystem<'a> {
    pub prob: &'a Problem,
    pub guard: f64,
}

impl OdeSystem<6> for PlanarSystem<'_> {
    fn rhs(&self, y: &[f64; 6]) -> Result<[f64; 6]> {
        let pp = PhasePoint::from_array(*y);
        let acc = acceleration_guarded(pp.q, self.prob, self.guard)?;
        Ok([pp.p.x, pp.p.y, pp.p.z, acc.x, acc.y, acc.z])
    }
}

pub(crate) struct EllipsoidSystem<'a> {
    pub prob: &'a Problem,
}

impl OdeSystem<8> for EllipsoidSystem<'_> {
    fn rhs(&self, y: &[f64; 8]) -> Result<[f64; 8]> {
        let state = EllipsoidState::from_parts_unchecked(
            Vec4::new(y[0], y[1], y[2], y[3]),
            Vec4::new(y[4], y[5], y[6], y[7]),
        );
        let (dq, dv) = intrinsic_step_rhs(&state, self.prob)?;
        Ok([dq.x, dq.y, dq.z, dq.w, dv.x, dv.y, dv.z, dv.w])
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let s: f64 = terms.iter().map(|(c, k)| c * k[i]).sum();
        *o += h * s;
    }
    out
}

pub(crate) struct Step<const N: usize> {
    pub y: [f64; N],
    pub err: [f64; N],
    /// `f(y_new)`, reused as the next step's first stage.
    pub f_new: [f64; N],
}

/// One Dormand–Prince step of size `h` (negative `h` steps backwards).
pub(crate) fn dopri_step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> Result<Step<N>> {
    let k2 = sys.rhs(&combine(y, h, &[(A21, k1)]))?;
    let k3 = sys.rhs(&combine(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = sys.rhs(&combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = sys.rhs(&combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = sys.rhs(&combine(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y_new = combine(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = sys.rhs(&y_new)?;
    let err = combine(
        &[0.0; N],
        h,
        &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
    );
    Ok(Step { y: y_new, err, f_new: k7 })
}

fn error_norm<const N: usize>(cfg: &IntegratorConfig, y0: &[f64; N], y1: &[f64; N], err: &[f64; N]) -> f64 {
    let s: f64 = (0..N)
        .map(|i| {
            let sk = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
            let e = err[i] / sk;
            e * e
        })
        .sum();
    libm::sqrt(s / N as f64)
}

fn initial_step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    y0: &[f64; N],
    f0: &[f64; N],
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let scaled = |v: &[f64; N]| {
        let s: f64 = (0..N)
            .map(|i| {
                let e = v[i] / (cfg.abs_tol + cfg.rel_tol * y0[i].abs());
                e * e
            })
            .sum();
        libm::sqrt(s / N as f64)
    };
    let d0 = scaled(y0);
    let d1 = scaled(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(cfg.max_step);
    let f1 = sys.rhs(&combine(y0, h0, &[(1.0, f0)]))?;
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = scaled(&diff) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { libm::pow(0.01 / dm, 0.2) };
    Ok((100.0 * h0).min(h1).min(cfg.max_step))
}

/// Step statistics of a finished or aborted run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y′ = f(y)` from 0 to `t_end`, calling `on_accept(t, y)` after
/// each accepted step. The hook may modify `y` and returns whether it did.
pub(crate) fn drive<const N: usize, S, H>(
    sys: &S,
    y0: [f64; N],
    t_end: f64,
    cfg: &IntegratorConfig,
    mut on_accept: H,
) -> core::result::Result<StepStats, (Error, StepStats)>
where
    S: OdeSystem<N>,
    H: FnMut(f64, &mut [f64; N]) -> Result<bool>,
{
    const SAFE: f64 = 0.9;
    const BETA: f64 = 0.04;
    const EXPO1: f64 = 0.2 - BETA * 0.75;
    // h_new/h stays within [FAC_MIN, FAC_MAX]
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;

    let mut stats = StepStats::default();
    let mut y = y0;
    let mut t = 0.0;
    let mut k1 = sys.rhs(&y).map_err(|e| (e, stats))?;
    let mut h = initial_step(sys, &y, &k1, cfg).map_err(|e| (e, stats))?;
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    while t < t_end {
        let remaining = t_end - t;
        let mut last = false;
        if h >= remaining || remaining - h <= 1e-12 * t_end.max(1.0) {
            h = remaining;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err((Error::StepUnderflow { t, h }, stats));
        }
        let step = match dopri_step(sys, &y, &k1, h) {
            Ok(s) => s,
            Err(Error::NearCollision { .. }) if h > 1e-6 * cfg.max_step => {
                // a trial stage reached past the guard; retry smaller before
                // deciding the trajectory itself collides
                h *= 0.25;
                stats.rejected += 1;
                last_rejected = true;
                continue;
            }
            Err(e) => return Err((e, stats)),
        };
        let err = error_norm(cfg, &y, &step.y, &step.err);
        let fac11 = libm::pow(err, EXPO1);
        if err <= 1.0 {
            let fac = (fac11 / libm::pow(fac_old, BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            fac_old = err.max(1e-4);
            t = if last { t_end } else { t + h };
            y = step.y;
            k1 = step.f_new;
            stats.accepted += 1;
            if on_accept(t, &mut y).map_err(|e| (e, stats))? {
                k1 = sys.rhs(&y).map_err(|e| (e, stats))?;
            }
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new.min(cfg.max_step);
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
        }
    }
    Ok(stats)
}

fn planar_diagnostics(pp: &PhasePoint, prob: &Problem) -> Result<[f64; 3]> {
    Ok([hamiltonian_j(pp, prob)?, theta(pp, prob), euler_integral_e(pp, prob)?])
}

/// Integrates the spatial two-center ODE over `[0, t_end]`.
pub fn integrate_planar(
    start: &PhasePoint,
    prob: &Problem,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> core::result::Result<Trajectory<PhasePoint>, TrajectoryError<PhasePoint>> {
    let mut traj = Trajectory::new(PLANAR_LABELS);
    let fail = |error, partial| TrajectoryError { error, partial };
    if let Err(e) = cfg.validate() {
        return Err(fail(e, traj));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(fail(Error::InvalidInput("t_end must be finite and > 0"), traj));
    }
    if !(start.q.is_finite() && start.p.is_finite()) {
        return Err(fail(Error::InvalidInput("non-finite initial state"), traj));
    }
    let guard = cfg.min_center_distance;
    let sys = PlanarSystem { prob, guard };
    let diag = match prob
        .center_distances_guarded(start.q, guard)
        .and_then(|_| planar_diagnostics(start, prob))
    {
        Ok(d) => d,
        Err(e) => return Err(fail(e, traj)),
    };
    traj.push(0.0, *start, diag);

    let result = drive(&sys, start.to_array(), t_end, cfg, |t, y| {
        let pp = PhasePoint::from_array(*y);
        traj.push(t, pp, planar_diagnostics(&pp, prob)?);
        Ok(false)
    });
    finish(traj, result)
}

fn finish<S: Debug>(
    mut traj: Trajectory<S>,
    result: core::result::Result<StepStats, (Error, StepStats)>,
) -> core::result::Result<Trajectory<S>, TrajectoryError<S>> {
    match result {
        Ok(stats) => {
            traj.accepted_steps = stats.accepted;
            traj.rejected_steps = stats.rejected;
            Ok(traj)
        }
        Err((error, stats)) => {
            traj.accepted_steps = stats.accepted;
            traj.rejected_steps = stats.rejected;
            Err(TrajectoryError { error, partial: traj })
        }
    }
}

fn ellipsoid_record(state: &EllipsoidState, prob: &Problem, residuals: (f64, f64)) -> Result<[f64; 3]> {
    Ok([ellipsoidal_energy_g(state, prob)?, residuals.0, residuals.1])
}

/// Integrates the intrinsic ellipsoid ODE `Q″ = F_tan(Q) − ‖Q′‖_*² Q` over
/// `τ ∈ [0, tau_end]`.
///
/// The recorded residuals are measured *before* renormalization, so they
/// report the drift of a single step. The intrinsic flow is defined on the
/// whole ellipsoid and may cross `W = 0` (free motion does so in finite `τ`);
/// states past that point have no preimage on the slice.
pub fn integrate_ellipsoid(
    start: &EllipsoidState,
    prob: &Problem,
    tau_end: f64,
    cfg: &IntegratorConfig,
) -> core::result::Result<Trajectory<EllipsoidState>, TrajectoryError<EllipsoidState>> {
    let mut traj = Trajectory::new(ELLIPSOID_LABELS);
    let fail = |error, partial| TrajectoryError { error, partial };
    if let Err(e) = cfg.validate() {
        return Err(fail(e, traj));
    }
    if !(tau_end.is_finite() && tau_end > 0.0) {
        return Err(fail(Error::InvalidInput("tau_end must be finite and > 0"), traj));
    }
    let metric = prob.metric();
    let q0 = start.point().as_vec();
    let v0 = start.velocity();
    let residuals = |q: Vec4, v: Vec4| (metric.norm(q) - 1.0, metric.inner(q, v));
    match ellipsoid_record(start, prob, residuals(q0, v0)) {
        Ok(d) => traj.push(0.0, *start, d),
        Err(e) => return Err(fail(e, traj)),
    }

    let sys = EllipsoidSystem { prob };
    let y0 = [q0.x, q0.y, q0.z, q0.w, v0.x, v0.y, v0.z, v0.w];
    let renormalize = cfg.renormalize_constraint;
    let result = drive(&sys, y0, tau_end, cfg, |tau, y| {
        let mut q = Vec4::new(y[0], y[1], y[2], y[3]);
        let mut v = Vec4::new(y[4], y[5], y[6], y[7]);
        let pre = residuals(q, v);
        let worst = pre.0.abs().max(pre.1.abs());
        if worst.is_nan() || worst > CONSTRAINT_INTEGRITY_BOUND {
            return Err(Error::ConstraintIntegrity { residual: worst });
        }
        if renormalize {
            q = q * (1.0 / metric.norm(q));
            v = metric.tangent_part(q, v);
            *y = [q.x, q.y, q.z, q.w, v.x, v.y, v.z, v.w];
        }
        let state = EllipsoidState::from_parts_unchecked(q, v);
        traj.push(tau, state, ellipsoid_record(&state, prob, pre)?);
        Ok(renormalize)
    });
    finish(traj, result)
}

/// Per-invariant drift summary of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftReport {
    pub labels: [&'static str; 3],
    pub initial: [f64; 3],
    /// `max_t |I(t) − I(0)| / max(1, |I(0)|)`.
    pub max_relative_drift: [f64; 3],
    pub samples: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub min_step: f64,
    pub max_step: f64,
    pub final_time: f64,
}

/// Returns `None` for an empty trajectory.
pub fn drift_report<S>(traj: &Trajectory<S>) -> Option<DriftReport> {
    let initial = *traj.diagnostics.first()?;
    let mut drift = [0.0f64; 3];
    for d in &traj.diagnostics {
        for k in 0..3 {
            let rel = (d[k] - initial[k]).abs() / initial[k].abs().max(1.0);
            drift[k] = drift[k].max(rel);
        }
    }
    let (mut min_step, mut max_step) = (f64::INFINITY, 0.0f64);
    for w in traj.times.windows(2) {
        let h = w[1] - w[0];
        min_step = min_step.min(h);
        max_step = max_step.max(h);
    }
    if traj.times.len() < 2 {
        min_step = 0.0;
    }
    Some(DriftReport {
        labels: traj.labels,
        initial,
        max_relative_drift: drift,
        samples: traj.len(),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        min_step,
        max_step,
        final_time: *traj.times.last()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::lift_velocity;
    use crate::vector::Vec3;

    fn pp(q: [f64; 3], p: [f64; 3]) -> PhasePoint {
        PhasePoint::new(Vec3::from_array(q), Vec3::from_array(p))
    }

    struct Harmonic;
    impl OdeSystem<2> for Harmonic {
        fn rhs(&self, y: &[f64; 2]) -> Result<[f64; 2]> {
            Ok([y[1], -y[0]])
        }
    }

    #[test]
    fn free_motion_is_a_straight_line() {
        let prob = Problem::new(0.0, 0.0, 1.0).unwrap();
        let traj = integrate_planar(&pp([0.0, 1.0, 0.0], [1.0, 0.0, 0.0]), &prob, 1.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.last_time(), Some(1.0));
        let end = traj.states.last().unwrap();
        assert!((end.q - Vec3::new(1.0, 1.0, 0.0)).norm() <= 1e-12);
        for d in &traj.diagnostics {
            assert_eq!(d[0], 0.5);
        }
    }

    #[test]
    fn start_at_center_aborts_immediately() {
        let prob = Problem::new(1.0, 1.0, 1.0).unwrap();
        let err = integrate_planar(&pp([1.0, 0.0, 0.0], [0.0, 0.1, 0.0]), &prob, 1.0, &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err.error, Error::NearCollision { .. }));
        assert!(err.partial.is_empty());
    }

    #[test]
    fn head_on_collision_returns_partial_trajectory() {
        // radial fall onto the single center
        let prob = Problem::new(1.0, 0.0, 1.0).unwrap();
        let err = integrate_planar(&pp([0.0, 0.0, 0.0], [0.0; 3]), &prob, 10.0, &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err.error, Error::NearCollision { .. } | Error::StepUnderflow { .. }));
        assert!(err.partial.len() > 1);
        assert!(err.partial.last_time().unwrap() < 10.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let prob = Problem::new(1.0, 1.0, 1.0).unwrap();
        let s = pp([0.0, 2.0, 0.0], [0.3, 0.0, 0.6]);
        assert!(integrate_planar(&s, &prob, -1.0, &IntegratorConfig::default()).is_err());
        let cfg = IntegratorConfig { rel_tol: 0.0, ..Default::default() };
        assert!(integrate_planar(&s, &prob, 1.0, &cfg).is_err());
    }

    #[test]
    fn fixed_step_order_is_five() {
        let y0 = [1.0, 0.0];
        let run = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = y0;
            for _ in 0..n {
                let k1 = Harmonic.rhs(&y).unwrap();
                y = dopri_step(&Harmonic, &y, &k1, h).unwrap().y;
            }
            (y[0] - 1f64.cos()).abs().max((y[1] + 1f64.sin()).abs())
        };
        let ratio = run(10) / run(20);
        // 2⁵ = 32
        assert!((24.0..40.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let prob = Problem::new(1.0, 1.0, 1.0).unwrap();
        let s = pp([0.0, 2.0, 0.0], [0.3, 0.0, 0.6]);
        let at = |tol: f64| {
            let cfg = IntegratorConfig { rel_tol: tol, abs_tol: tol, ..Default::default() };
            integrate_planar(&s, &prob, 5.0, &cfg).unwrap().states.last().unwrap().q
        };
        let reference = at(1e-14);
        let e1 = (at(1e-8) - reference).norm();
        let e2 = (at(1e-10) - reference).norm();
        assert!(e2 < e1 / 5.0, "{e1} vs {e2}");
    }

    #[test]
    fn forward_then_backward_returns_to_start() {
        let prob = Problem::new(1.0, 1.0, 1.0).unwrap();
        let s = pp([0.0, 2.0, 0.0], [0.3, 0.0, 0.6]);
        let cfg = IntegratorConfig::default();
        let fwd = integrate_planar(&s, &prob, 10.0, &cfg).unwrap();
        let end = *fwd.states.last().unwrap();
        let back = integrate_planar(&PhasePoint::new(end.q, -end.p), &prob, 10.0, &cfg).unwrap();
        let home = back.states.last().unwrap();
        assert!((home.q - s.q).norm() <= 1e-8);
        assert!((home.p + s.p).norm() <= 1e-8);
    }

    #[test]
    fn equilibrium_on_the_ellipsoid() {
        let prob = Problem::new(1.0, 1.0, 1.0).unwrap();
        let start = lift_velocity(&pp([0.0; 3], [0.0; 3]), &prob.metric()).unwrap();
        let traj = integrate_ellipsoid(&start, &prob, 5.0, &IntegratorConfig::default()).unwrap();
        for s in &traj.states {
            assert!((s.point().as_vec() - Vec4::new(0.0, 0.0, 0.0, 1.0)).max_abs() <= 1e-14);
            assert!(s.velocity().max_abs() <= 1e-14);
        }
    }

    #[test]
    fn free_intrinsic_flow_keeps_speed() {
        let prob = Problem::new(0.0, 0.0, 1.0).unwrap();
        let metric = prob.metric();
        let start = lift_velocity(&pp([0.4, -1.0, 0.7], [0.5, 0.2, -0.9]), &metric).unwrap();
        let speed0 = metric.norm(start.velocity());
        let traj = integrate_ellipsoid(&start, &prob, 10.0, &IntegratorConfig::default()).unwrap();
        for s in &traj.states {
            assert!((metric.norm(s.velocity()) - speed0).abs() <= 1e-10);
        }
    }

    #[test]
    fn drift_report_examples() {
        let mut t: Trajectory<()> = Trajectory::new(PLANAR_LABELS);
        assert!(drift_report(&t).is_none());
        for i in 0..4 {
            t.push(i as f64, (), [2.0, -3.0, 0.5]);
        }
        let r = drift_report(&t).unwrap();
        assert_eq!(r.max_relative_drift, [0.0; 3]);
        assert_eq!((r.min_step, r.max_step), (1.0, 1.0));

        let mut t: Trajectory<()> = Trajectory::new(PLANAR_LABELS);
        t.push(0.0, (), [1.0, 0.0, 0.0]);
        t.push(1.0, (), [1.0 + 1e-9, 0.0, 0.0]);
        let r = drift_report(&t).unwrap();
        assert!((r.max_relative_drift[0] - 1e-9).abs() < 1e-15);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |t: f64| Vec4::new(t * t * t, 1.0 - t, 2.0 * t * t, 0.5);
        let d = |t: f64| Vec4::new(3.0 * t * t, -1.0, 4.0 * t, 0.0);
        let (t0, t1) = (0.3, 1.1);
        for s in [0.3, 0.5, 0.77, 1.1] {
            let v = cubic_hermite(t0, t1, f(t0), d(t0), f(t1), d(t1), s);
            assert!((v - f(s)).max_abs() < 1e-14);
        }
    }
}
