//! Motion of the centrally projected point `Q = π(q)` on the ellipsoid.
//!
//! Time is reparametrized by `dτ/dt = ℓ(Q)² = W²`; primes denote `d/dτ`.
//! The lifted velocity is `Q′ = q̇‖q‖_* − q (Q, q̇)_*`, which is
//! `*`-orthogonal to `Q`. The tangential part of `Q″` depends on `Q` alone:
//!
//! ```text
//! F_tan(Q) = P_Q[ Σ_j m_j c_j / ‖Q − c_j W‖³ ],   c_± = (±a, 0, 0, 1)
//! ```
//!
//! and the motion conserves the ellipsoidal energy
//!
//! ```text
//! G = ‖Q′‖_*² − (2/(1+a²)) Σ_j m_j u_j / √(1 − u_j²),   u_j = (c_j, Q)/√(1+a²).
//! ```
//!
//! The normal part of `Q″` is fixed by differentiating `(Q, Q′)_* = 0`, which
//! gives the intrinsic ODE `Q″ = F_tan(Q) − ‖Q′‖_*² Q`.

use alloc::vec::Vec;

use crate::dynamics::{euler_integral_e, hamiltonian_j, theta, PhasePoint, Problem, COLLISION_GUARD};
use crate::error::{Error, Result};
use crate::geometry::{project, unproject, EllipsoidPoint, StarMetric};
use crate::integrators::{dopri_step, OdeSystem, PlanarSystem, Trajectory, ELLIPSOID_LABELS};
use crate::lstsq;
use crate::sampling::{PhaseBox, SweepRng};
use crate::vector::{Vec3, Vec4};

/// Tangency tolerance accepted by [`EllipsoidState::new`].
pub const TANGENCY_TOL: f64 = 1e-10;

/// Time step of the central difference used to estimate `Q″` from the
/// spatial flow.
pub const QPRIME_FD_STEP: f64 = 1e-5;

/// Seed of the velocity family used by [`qprime_independence_residual`].
const QPRIME_VELOCITY_SEED: u64 = 0x51de_5eed;

/// Resampling attempts made by [`fit_integral_relation`].
const FIT_ATTEMPTS: usize = 5;

/// A point of the ellipsoid together with its `τ`-velocity `Q′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidState {
    point: EllipsoidPoint,
    velocity: Vec4,
}

impl EllipsoidState {
    pub fn new(point: EllipsoidPoint, velocity: Vec4, metric: &StarMetric) -> Result<Self> {
        if !velocity.is_finite() {
            return Err(Error::InvalidInput("non-finite velocity"));
        }
        let residual = metric.inner(point.as_vec(), velocity);
        if residual.abs() > TANGENCY_TOL {
            return Err(Error::NotTangent { residual });
        }
        Ok(Self { point, velocity })
    }

    /// Skips all checks; used on integrator states that are validated by
    /// the caller's constraint monitoring.
    pub(crate) fn from_parts_unchecked(q: Vec4, velocity: Vec4) -> Self {
        Self { point: EllipsoidPoint::from_raw(q), velocity }
    }

    pub fn point(&self) -> EllipsoidPoint {
        self.point
    }

    pub fn velocity(&self) -> Vec4 {
        self.velocity
    }
}

/// Coefficients of `G ≈ λ_J J + λ_E E + λ_Θ² Θ² + λ_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralRelation {
    pub lambda_j: f64,
    pub lambda_e: f64,
    pub lambda_t2: f64,
    pub lambda_0: f64,
    /// Largest `|G − fit|` over the samples used.
    pub max_residual: f64,
    pub samples: usize,
}

impl IntegralRelation {
    pub fn evaluate(&self, j: f64, e: f64, theta: f64) -> f64 {
        self.lambda_j * j + self.lambda_e * e + self.lambda_t2 * theta * theta + self.lambda_0
    }
}

/// Lifts a phase point to `(π(q), Q′)`.
pub fn lift_velocity(pp: &PhasePoint, metric: &StarMetric) -> Result<EllipsoidState> {
    if !(pp.q.is_finite() && pp.p.is_finite()) {
        return Err(Error::InvalidInput("non-finite phase point"));
    }
    let q = pp.q.lift();
    let q_dot = pp.p.lift_direction();
    let point = project(q, metric)?;
    let norm = metric.norm(q);
    let velocity = q_dot * norm - q * metric.inner(point.as_vec(), q_dot);
    Ok(EllipsoidState { point, velocity })
}

/// `‖Q′‖_*²` expanded in Cartesian terms (only for `a = 1`):
/// `ẋ² + ẏ²/2 + ż²/2 + (xẏ−yẋ)²/2 + (yż−zẏ)²/4 + (zẋ−xż)²/2`.
pub fn qprime_norm_formula(pp: &PhasePoint, metric: &StarMetric) -> Result<f64> {
    if metric.a() != 1.0 {
        return Err(Error::UnsupportedParameter { a: metric.a() });
    }
    let Vec3 { x, y, z } = pp.q;
    let Vec3 { x: vx, y: vy, z: vz } = pp.p;
    let lz = x * vy - y * vx;
    let lx = y * vz - z * vy;
    let ly = z * vx - x * vz;
    Ok(vx * vx + 0.5 * (vy * vy + vz * vz) + 0.5 * lz * lz + 0.25 * lx * lx + 0.5 * ly * ly)
}

/// The 4D centers `c_± = (±a, 0, 0, 1)` paired with their masses.
fn centers4(prob: &Problem) -> [(Vec4, f64); 2] {
    let a = prob.a();
    [
        (Vec4::new(-a, 0.0, 0.0, 1.0), prob.m_minus()),
        (Vec4::new(a, 0.0, 0.0, 1.0), prob.m_plus()),
    ]
}

/// The `Q′`-independent tangential part of `Q″`.
pub fn tangential_field(point: &EllipsoidPoint, prob: &Problem) -> Result<Vec4> {
    let q = point.as_vec();
    let mut raw = Vec4::ZERO;
    for (c, m) in centers4(prob) {
        // Q − c W has zero w-component; its Euclidean norm is the 3D one
        let d = (q - c * q.w).xyz().norm();
        if d < COLLISION_GUARD {
            return Err(Error::NearCollision { distance: d });
        }
        raw += c * (m / (d * d * d));
    }
    Ok(prob.metric().tangent_part(q, raw))
}

/// Potential part of `G`: `−(2/(1+a²)) Σ_j m_j u_j/√(1 − u_j²)`.
pub fn potential_on_ellipsoid(point: &EllipsoidPoint, prob: &Problem) -> Result<f64> {
    let s = prob.metric().one_plus_a_sq();
    let scale = 1.0 / libm::sqrt(s);
    let q = point.as_vec();
    let mut sum = 0.0;
    for (c, m) in centers4(prob) {
        let u = c.dot(q) * scale;
        let u_sq = u * u;
        // on E_a, (1+a²)(1 − u²) = ‖Q − c W‖²; guard on the latter, which
        // does not cancel near the ray
        if u_sq >= 1.0 || (q - c * q.w).xyz().norm() < COLLISION_GUARD {
            return Err(Error::CenterRay { u_sq });
        }
        sum += m * u / libm::sqrt(1.0 - u_sq);
    }
    Ok(-2.0 / s * sum)
}

/// The ellipsoidal energy `G = ‖Q′‖_*² + potential_on_ellipsoid(Q)`.
pub fn ellipsoidal_energy_g(state: &EllipsoidState, prob: &Problem) -> Result<f64> {
    let kinetic = prob.metric().norm_sq(state.velocity);
    Ok(kinetic + potential_on_ellipsoid(&state.point, prob)?)
}

/// `G(lift(pp)) − (J + E/2 − Θ²/4)`, defined for `a = 1` only.
pub fn relation_residual(pp: &PhasePoint, prob: &Problem) -> Result<f64> {
    if prob.a() != 1.0 {
        return Err(Error::UnsupportedParameter { a: prob.a() });
    }
    let g = ellipsoidal_energy_g(&lift_velocity(pp, &prob.metric())?, prob)?;
    let j = hamiltonian_j(pp, prob)?;
    let e = euler_integral_e(pp, prob)?;
    let t = theta(pp, prob);
    Ok(g - (j + 0.5 * e - 0.25 * t * t))
}

/// Least-squares fit of `G` against `(J, E, Θ², 1)` over `sample_count`
/// seeded phase points from the default [`PhaseBox`].
pub fn fit_integral_relation(prob: &Problem, sample_count: usize, seed: u64) -> Result<IntegralRelation> {
    if sample_count < 8 {
        return Err(Error::InvalidInput("fit needs at least 8 samples"));
    }
    let metric = prob.metric();
    let mut rng = SweepRng::new(seed);
    let phase_box = PhaseBox::default();
    for _ in 0..FIT_ATTEMPTS {
        let mut rows = Vec::with_capacity(sample_count);
        let mut g = Vec::with_capacity(sample_count);
        while rows.len() < sample_count {
            let pp = phase_box.sample(&mut rng, prob);
            let Ok(state) = lift_velocity(&pp, &metric) else { continue };
            let Ok(gv) = ellipsoidal_energy_g(&state, prob) else { continue };
            let t = theta(&pp, prob);
            rows.push([hamiltonian_j(&pp, prob)?, euler_integral_e(&pp, prob)?, t * t, 1.0]);
            g.push(gv);
        }
        let x = match lstsq::solve(&rows, &g) {
            Ok(x) => x,
            Err(Error::RankDeficient) => continue,
            Err(e) => return Err(e),
        };
        let rel = IntegralRelation {
            lambda_j: x[0],
            lambda_e: x[1],
            lambda_t2: x[2],
            lambda_0: x[3],
            max_residual: 0.0,
            samples: sample_count,
        };
        let max_residual = rows
            .iter()
            .zip(&g)
            .map(|(r, gv)| (gv - (x[0] * r[0] + x[1] * r[1] + x[2] * r[2] + x[3])).abs())
            .fold(0.0, f64::max);
        return Ok(IntegralRelation { max_residual, ..rel });
    }
    Err(Error::RankDeficient)
}

/// Right-hand side `(Q′, Q″)` of the intrinsic ODE on the ellipsoid.
pub fn intrinsic_step_rhs(state: &EllipsoidState, prob: &Problem) -> Result<(Vec4, Vec4)> {
    let v = state.velocity;
    let speed_sq = prob.metric().norm_sq(v);
    let field = tangential_field(&state.point, prob)?;
    Ok((v, field - state.point.as_vec() * speed_sq))
}

/// `τ(t_i) = ∫₀^{t_i} ℓ(Q(s))² ds` on the trajectory grid.
///
/// Each interval uses the endpoint-corrected trapezoid rule
/// `h(f₀+f₁)/2 + h²(f₀′−f₁′)/12`, exact for cubics, with `f = 1/‖q‖_*²` and
/// `f′ = −2 (q, q̇)_*/‖q‖_*⁴` taken from the states.
pub fn time_reparametrize(traj: &Trajectory<PhasePoint>, metric: &StarMetric) -> Vec<f64> {
    let rate = |pp: &PhasePoint| {
        let q = pp.q.lift();
        let n_sq = metric.norm_sq(q);
        let f = 1.0 / n_sq;
        let df = -2.0 * metric.inner(q, pp.p.lift_direction()) * f * f;
        (f, df)
    };
    let mut out = Vec::with_capacity(traj.len());
    let Some(first) = traj.states.first() else { return out };
    let mut tau = 0.0;
    out.push(tau);
    let mut prev = rate(first);
    for (w, s) in traj.times.windows(2).zip(traj.states.iter().skip(1)) {
        let h = w[1] - w[0];
        let cur = rate(s);
        tau += 0.5 * h * (prev.0 + cur.0) + h * h / 12.0 * (prev.1 - cur.1);
        out.push(tau);
        prev = cur;
    }
    out
}

/// Projects a spatial trajectory onto the ellipsoid, in the time `τ`.
pub fn project_trajectory(traj: &Trajectory<PhasePoint>, prob: &Problem) -> Result<Trajectory<EllipsoidState>> {
    let metric = prob.metric();
    let taus = time_reparametrize(traj, &metric);
    let mut out = Trajectory::new(ELLIPSOID_LABELS);
    for (tau, pp) in taus.into_iter().zip(&traj.states) {
        let state = lift_velocity(pp, &metric)?;
        let q = state.point.as_vec();
        let diag = [
            ellipsoidal_energy_g(&state, prob)?,
            metric.norm(q) - 1.0,
            metric.inner(q, state.velocity),
        ];
        out.push(tau, state, diag);
    }
    out.accepted_steps = traj.accepted_steps;
    out.rejected_steps = traj.rejected_steps;
    Ok(out)
}

/// Tangential part of `Q″` estimated from the spatial flow through `pp`:
/// `Q′` is differenced over `t ± δ` and rescaled by `dt/dτ = ‖q‖_*²`.
pub fn finite_difference_tangential(pp: &PhasePoint, prob: &Problem) -> Result<Vec4> {
    let metric = prob.metric();
    let sys = PlanarSystem { prob, guard: COLLISION_GUARD };
    let y = pp.to_array();
    let k1 = sys.rhs(&y)?;
    let h = QPRIME_FD_STEP;
    let ahead = PhasePoint::from_array(dopri_step(&sys, &y, &k1, h)?.y);
    let behind = PhasePoint::from_array(dopri_step(&sys, &y, &k1, -h)?.y);
    let v_ahead = lift_velocity(&ahead, &metric)?.velocity;
    let v_behind = lift_velocity(&behind, &metric)?.velocity;
    let dv_dt = (v_ahead - v_behind) * (0.5 / h);
    let q = pp.q.lift();
    let accel = dv_dt * metric.norm_sq(q);
    let point = project(q, &metric)?;
    Ok(metric.tangent_part(point.as_vec(), accel))
}

/// Largest pairwise `*`-distance between finite-differenced tangential
/// accelerations of `samples` distinct spatial velocities through `π⁻¹(Q)`.
pub fn qprime_independence_residual(point: &EllipsoidPoint, prob: &Problem, samples: usize) -> Result<f64> {
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two velocity samples"));
    }
    let metric = prob.metric();
    let q = unproject(point)?.xyz();
    let mut rng = SweepRng::new(QPRIME_VELOCITY_SEED);
    let mut fields = Vec::with_capacity(samples);
    for _ in 0..samples {
        let p = rng.in_ball(3.0);
        fields.push(finite_difference_tangential(&PhasePoint::new(q, p), prob)?);
    }
    let mut worst = 0.0f64;
    for (i, a) in fields.iter().enumerate() {
        for b in &fields[i + 1..] {
            worst = worst.max(metric.norm(*a - *b));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::SQRT_2;

    fn pp(q: [f64; 3], p: [f64; 3]) -> PhasePoint {
        PhasePoint::new(Vec3::from_array(q), Vec3::from_array(p))
    }

    fn unit_masses() -> Problem {
        Problem::new(1.0, 1.0, 1.0).unwrap()
    }

    fn point(v: Vec4, prob: &Problem) -> EllipsoidPoint {
        EllipsoidPoint::new(v, &prob.metric()).unwrap()
    }

    #[test]
    fn lift_examples() {
        let m = unit_masses().metric();
        let s = lift_velocity(&pp([0.0, 1.0, 0.0], [0.0, 0.0, 1.0]), &m).unwrap();
        let expected = Vec4::new(0.0, 0.0, 1.5f64.sqrt(), 0.0);
        assert!((s.velocity() - expected).max_abs() < 1e-15);
        assert!((m.norm_sq(s.velocity()) - 0.75).abs() < 1e-15);

        let s = lift_velocity(&pp([2.0, -1.0, 3.0], [0.0; 3]), &m).unwrap();
        assert_eq!(s.velocity(), Vec4::ZERO);
    }

    #[test]
    fn lift_is_tangent() {
        let mut rng = SweepRng::new(61);
        for a in [0.5, 1.0, 2.0] {
            let prob = unit_masses().with_a(a).unwrap();
            let m = prob.metric();
            for _ in 0..1000 {
                let s = lift_velocity(&PhaseBox::default().sample(&mut rng, &prob), &m).unwrap();
                assert!(m.inner(s.point().as_vec(), s.velocity()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn state_constructor_checks_tangency() {
        let m = unit_masses().metric();
        let p = EllipsoidPoint::new(Vec4::new(0.0, 0.0, 0.0, 1.0), &m).unwrap();
        assert!(EllipsoidState::new(p, Vec4::new(1.0, 0.0, 0.0, 0.0), &m).is_ok());
        assert!(matches!(
            EllipsoidState::new(p, Vec4::new(0.0, 0.0, 0.0, 1e-6), &m),
            Err(Error::NotTangent { .. })
        ));
    }

    #[test]
    fn norm_formula_examples() {
        let m = unit_masses().metric();
        let v = qprime_norm_formula(&pp([0.0, 1.0, 0.0], [0.0, 0.0, 1.0]), &m).unwrap();
        assert!((v - 0.75).abs() < 1e-15);
        assert_eq!(qprime_norm_formula(&pp([1.0, 2.0, 3.0], [0.0; 3]), &m).unwrap(), 0.0);
        let m2 = StarMetric::new(2.0).unwrap();
        assert!(matches!(
            qprime_norm_formula(&pp([0.0; 3], [0.0; 3]), &m2),
            Err(Error::UnsupportedParameter { .. })
        ));
    }

    #[test]
    fn tangential_field_examples() {
        let top = Vec4::new(0.0, 0.0, 0.0, 1.0);
        let f = tangential_field(&point(top, &unit_masses()), &unit_masses()).unwrap();
        assert_eq!(f, Vec4::ZERO);

        let free = Problem::new(0.0, 0.0, 1.0).unwrap();
        let mut rng = SweepRng::new(67);
        for _ in 0..50 {
            let s = lift_velocity(&PhaseBox::default().sample(&mut rng, &free), &free.metric()).unwrap();
            assert_eq!(tangential_field(&s.point(), &free).unwrap().max_abs(), 0.0);
        }

        let single = Problem::new(1.0, 0.0, 1.0).unwrap();
        let f = tangential_field(&point(top, &single), &single).unwrap();
        assert!((f - Vec4::new(-1.0, 0.0, 0.0, 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn tangential_field_guards_center_rays() {
        let prob = unit_masses();
        // π((1, 0, 0, 1)) sits on the ray through c₊
        let on_ray = project(Vec4::new(1.0, 0.0, 0.0, 1.0), &prob.metric()).unwrap();
        assert!(matches!(tangential_field(&on_ray, &prob), Err(Error::NearCollision { .. })));
        let r = potential_on_ellipsoid(&on_ray, &prob);
        assert!(matches!(r, Err(Error::CenterRay { .. })), "{r:?}");
    }

    #[test]
    fn tangential_field_is_tangent() {
        let mut rng = SweepRng::new(71);
        for a in [0.5, 1.0, 2.0] {
            let prob = Problem::new(0.7, 1.9, a).unwrap();
            let m = prob.metric();
            for _ in 0..500 {
                let s = lift_velocity(&PhaseBox::default().sample(&mut rng, &prob), &m).unwrap();
                let f = tangential_field(&s.point(), &prob).unwrap();
                assert!(m.inner(s.point().as_vec(), f).abs() <= 1e-12 * f.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn energy_examples() {
        let prob = unit_masses();
        let m = prob.metric();
        let s = lift_velocity(&pp([0.0, 1.0, 0.0], [0.0, 0.0, 1.0]), &m).unwrap();
        let g = ellipsoidal_energy_g(&s, &prob).unwrap();
        assert!((g - (0.75 - SQRT_2)).abs() < 1e-15);
        assert!((g + 0.664214).abs() < 1e-6);

        let s = lift_velocity(&pp([0.0; 3], [0.0; 3]), &m).unwrap();
        assert!((ellipsoidal_energy_g(&s, &prob).unwrap() + 2.0).abs() < 1e-15);

        let free = Problem::new(0.0, 0.0, 1.0).unwrap();
        let s = lift_velocity(&pp([0.3, 0.1, 0.0], [0.0; 3]), &m).unwrap();
        assert_eq!(ellipsoidal_energy_g(&s, &free).unwrap(), 0.0);
    }

    #[test]
    fn potential_examples() {
        let prob = unit_masses();
        let m = prob.metric();
        let at = |q: [f64; 3]| {
            potential_on_ellipsoid(&project(Vec3::from_array(q).lift(), &m).unwrap(), &prob).unwrap()
        };
        assert!((at([0.0; 3]) + 2.0).abs() < 1e-15);
        assert!((at([0.0, 1.0, 0.0]) + SQRT_2).abs() < 1e-15);
        let free = Problem::new(0.0, 0.0, 1.0).unwrap();
        let p = project(Vec4::new(0.2, 0.3, 0.4, 1.0), &m).unwrap();
        assert_eq!(potential_on_ellipsoid(&p, &free).unwrap(), 0.0);
    }

    #[test]
    fn relation_examples() {
        let prob = unit_masses();
        assert!(relation_residual(&pp([0.0, 1.0, 0.0], [0.0, 0.0, 1.0]), &prob).unwrap().abs() <= 1e-12);
        assert!(relation_residual(&pp([0.0; 3], [0.0; 3]), &prob).unwrap().abs() <= 1e-12);
        let wide = prob.with_a(2.0).unwrap();
        assert!(matches!(
            relation_residual(&pp([0.0; 3], [0.0; 3]), &wide),
            Err(Error::UnsupportedParameter { .. })
        ));
    }

    #[test]
    fn intrinsic_rhs_examples() {
        let prob = unit_masses();
        let m = prob.metric();
        let s = lift_velocity(&pp([0.0; 3], [0.0; 3]), &m).unwrap();
        let (v, acc) = intrinsic_step_rhs(&s, &prob).unwrap();
        assert_eq!((v, acc), (Vec4::ZERO, Vec4::ZERO));

        let s = lift_velocity(&pp([0.4, 1.3, -0.2], [0.0; 3]), &m).unwrap();
        let (_, acc) = intrinsic_step_rhs(&s, &prob).unwrap();
        assert_eq!(acc, tangential_field(&s.point(), &prob).unwrap());

        let free = Problem::new(0.0, 0.0, 1.0).unwrap();
        let s = lift_velocity(&pp([0.4, 1.3, -0.2], [1.0, -0.5, 0.25]), &m).unwrap();
        let (_, acc) = intrinsic_step_rhs(&s, &free).unwrap();
        let expected = s.point().as_vec() * -m.norm_sq(s.velocity());
        assert!((acc - expected).max_abs() < 1e-15);
    }

    #[test]
    fn fit_rejects_small_samples() {
        assert!(matches!(fit_integral_relation(&unit_masses(), 7, 1), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn qprime_independence_examples() {
        let prob = unit_masses();
        let p = project(Vec4::new(0.0, 1.0, 0.0, 1.0), &prob.metric()).unwrap();
        assert!(qprime_independence_residual(&p, &prob, 10).unwrap() <= 1e-6);
        assert!(qprime_independence_residual(&p, &prob, 1).is_err());

        let free = Problem::new(0.0, 0.0, 1.0).unwrap();
        assert!(qprime_independence_residual(&p, &free, 10).unwrap() <= 1e-6);
    }

    #[test]
    fn finite_difference_matches_field() {
        let prob = Problem::new(1.0, 1.0, 1.0).unwrap();
        let m = prob.metric();
        let mut rng = SweepRng::new(73);
        for _ in 0..50 {
            let s = PhaseBox::default().sample(&mut rng, &prob);
            let fd = finite_difference_tangential(&s, &prob).unwrap();
            let field = tangential_field(&project(s.q.lift(), &m).unwrap(), &prob).unwrap();
            assert!(m.norm(fd - field) <= 1e-6, "{:?} vs {:?}", fd, field);
        }
    }

    #[test]
    fn reparametrization_of_a_resting_trajectory() {
        let prob = unit_masses();
        let mut traj = Trajectory::new(crate::integrators::PLANAR_LABELS);
        for i in 0..6 {
            traj.push(i as f64 * 0.5, pp([0.0; 3], [0.0; 3]), [0.0; 3]);
        }
        let tau = time_reparametrize(&traj, &prob.metric());
        for (t, s) in traj.times.iter().zip(&tau) {
            assert_eq!(t, s);
        }
    }
}
