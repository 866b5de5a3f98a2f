//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use twocenter_core::sampling::{PhaseBox, SweepRng};
use twocenter_core::verify::*;
use twocenter_core::*;

const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn unit_problem() -> Problem {
    Problem::new(1.0, 1.0, 1.0).unwrap()
}

fn relation_identity() -> Outcome {
    let start = Instant::now();
    let worst = relation_sweep(&unit_problem(), 10_000, SEED).unwrap();
    let elapsed = start.elapsed();
    outcome(
        worst <= RELATION_TOL && elapsed < Duration::from_secs(1),
        format!("max |G - (J + E/2 - Theta^2/4)| = {worst:.3e} (tol {RELATION_TOL:.0e}), {elapsed:.2?}"),
    )
}

fn first_integrals() -> Outcome {
    let cfg = IntegratorConfig::default();
    let start = Instant::now();
    let report = planar_drift(&default_start(), &unit_problem(), 50.0, &cfg).unwrap();
    let elapsed = start.elapsed();
    let worst = report.max_relative_drift.iter().copied().fold(0.0, f64::max);
    let [j, t, e] = report.max_relative_drift;
    outcome(
        worst <= FIRST_INTEGRAL_DRIFT_TOL && elapsed < Duration::from_secs(5),
        format!("drift J {j:.3e}, Theta {t:.3e}, E {e:.3e} (tol {FIRST_INTEGRAL_DRIFT_TOL:.0e}), {elapsed:.2?}"),
    )
}

fn ellipsoidal_energy() -> Outcome {
    let run = ellipsoid_run(&default_start(), &unit_problem(), 5.0, &IntegratorConfig::default()).unwrap();
    outcome(
        run.g_drift <= G_DRIFT_TOL,
        format!(
            "G drift {:.3e} (tol {G_DRIFT_TOL:.0e}), constraint residuals {:.1e}/{:.1e} over {} steps",
            run.g_drift, run.max_norm_residual, run.max_tangency_residual, run.samples
        ),
    )
}

fn two_routes() -> Outcome {
    let check = two_route(&default_start(), &unit_problem(), 5.0, &IntegratorConfig::default()).unwrap();
    outcome(
        check.max_distance <= TWO_ROUTE_TOL && check.compared_points > 0,
        format!("max *-distance {:.3e} (tol {TWO_ROUTE_TOL:.0e}) at {} points", check.max_distance, check.compared_points),
    )
}

fn qprime_independent() -> Outcome {
    let check = qprime_independence(&default_start(), &unit_problem(), 10, 50, SEED).unwrap();
    outcome(
        check.pairwise <= QPRIME_TOL && check.versus_field <= QPRIME_TOL,
        format!(
            "pairwise {:.3e}, versus field {:.3e} (tol {QPRIME_TOL:.0e})",
            check.pairwise, check.versus_field
        ),
    )
}

fn general_a() -> Outcome {
    let cfg = IntegratorConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for a in [0.5, 2.0] {
        let prob = unit_problem().with_a(a).unwrap();
        let run = ellipsoid_run(&default_start(), &prob, 5.0, &cfg).unwrap();
        pass &= run.g_drift <= G_DRIFT_TOL;
        parts.push(format!("G drift a={a}: {:.3e}", run.g_drift));
    }
    let fit = fit_integral_relation(&unit_problem(), 200, SEED).unwrap();
    let expected = [1.0, 0.5, -0.25, 0.0];
    let got = [fit.lambda_j, fit.lambda_e, fit.lambda_t2, fit.lambda_0];
    let coeff_err = got.iter().zip(expected).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max);
    pass &= fit.max_residual <= FIT_RESIDUAL_TOL && coeff_err <= FIT_COEFFICIENT_TOL;
    parts.push(format!("fit residual {:.3e}, coefficient error {coeff_err:.3e}", fit.max_residual));
    outcome(pass, parts.join("; "))
}

fn kepler() -> Outcome {
    // x (m₋ − m₊) ≠ 0 here, so the residual is first order in a
    let prob = Problem::new(1.0, 0.0, 1.0).unwrap();
    let pp = PhasePoint::new(Vec3::new(1.0, 1.0, 0.0), Vec3::new(0.3, 0.5, 0.2));
    let check = kepler_limit(&pp, &prob, KEPLER_A_SMALL).unwrap();
    let (lo, hi) = KEPLER_RATIO_RANGE;
    let ratio = check.ratio.unwrap_or(f64::NAN);
    outcome(
        check.residual <= KEPLER_RESIDUAL_TOL && (lo..=hi).contains(&ratio),
        format!("|E - |q x p|^2| = {:.3e} (tol {KEPLER_RESIDUAL_TOL:.0e}), halving ratio {ratio:.4}", check.residual),
    )
}

fn geometry_suite() -> Outcome {
    let mut rng = SweepRng::new(SEED);
    let prob = unit_problem();
    let metric = prob.metric();
    let phase_box = PhaseBox::default();
    let (mut duality, mut proj, mut coords, mut norm_formula) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let pp = phase_box.sample(&mut rng, &prob);
        let q = pp.q.lift();
        duality = duality.max(duality_residual(q, &metric).unwrap().abs());
        let back = unproject(&project(q, &metric).unwrap()).unwrap();
        proj = proj.max((back - q).max_abs());
        let ep = to_ellipsoidal(pp.q, &prob).unwrap();
        let q2 = from_ellipsoidal(&ep, &prob).unwrap();
        coords = coords.max((q2 - pp.q).norm() / pp.q.norm().max(1.0));
        let lifted = lift_velocity(&pp, &metric).unwrap();
        let formula = qprime_norm_formula(&pp, &metric).unwrap();
        let direct = metric.norm_sq(lifted.velocity());
        norm_formula = norm_formula.max((formula - direct).abs() / direct.max(1.0));
    }
    outcome(
        duality <= 1e-13 && proj <= 1e-12 && coords <= 1e-12 && norm_formula <= 1e-12,
        format!(
            "duality {duality:.3e}, projection roundtrip {proj:.3e}, coordinate roundtrip {coords:.3e}, |Q'|^2 formula {norm_formula:.3e}"
        ),
    )
}

fn pullback() -> Outcome {
    let mut rng = SweepRng::new(SEED);
    let prob = Problem::new(0.7, 1.3, 1.0).unwrap();
    let metric = prob.metric();
    let phase_box = PhaseBox::default();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = phase_box.sample(&mut rng, &prob).q;
        let (r_minus, r_plus) = prob.center_distances(q).unwrap();
        let closed = prob.m_minus() * (q.x - 1.0) / r_minus - prob.m_plus() * (q.x + 1.0) / r_plus;
        let on_ellipsoid = potential_on_ellipsoid(&project(q.lift(), &metric).unwrap(), &prob).unwrap();
        worst = worst.max((on_ellipsoid - closed).abs());
    }
    outcome(worst <= 1e-12, format!("max |U(pi(q)) - closed form| = {worst:.3e} (tol 1e-12)"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("relation identity at a=1", relation_identity),
        ("first-integral conservation", first_integrals),
        ("ellipsoidal energy conservation", ellipsoidal_energy),
        ("two-route equivalence", two_routes),
        ("Q'-independence", qprime_independent),
        ("general-a conservation and fit", general_a),
        ("Kepler limit", kepler),
        ("geometry suite", geometry_suite),
        ("pullback identity", pullback),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("{} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failures += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
