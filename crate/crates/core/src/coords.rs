//! Classical ellipsoidal (prolate spheroidal) position coordinates.
//!
//! `α = (‖q+c‖ + ‖q−c‖)/2`, `β = (‖q+c‖ − ‖q−c‖)/2` and `ϑ = arg(z, −y)`,
//! i.e. `z = ρ cos ϑ`, `y = −ρ sin ϑ` with `ρ` the distance from the center
//! axis. `α` and `β` are stored divided by `a`, so `α ≥ 1` and `|β| ≤ 1` for
//! every `a`.

use core::f64::consts::TAU;

use crate::dynamics::Problem;
use crate::error::{Error, Result};
use crate::vector::Vec3;

/// Slack allowed on `α ≥ 1`, `|β| ≤ 1` before an input is rejected.
const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidalPosition {
    pub alpha: f64,
    pub beta: f64,
    /// In `[0, 2π)`; `0` on the center axis.
    pub theta_angle: f64,
    /// `y = z = 0`, where `ϑ` is undefined.
    pub degenerate: bool,
}

impl EllipsoidalPosition {
    pub fn new(alpha: f64, beta: f64, theta_angle: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && theta_angle.is_finite()) {
            return Err(Error::InvalidInput("non-finite ellipsoidal coordinate"));
        }
        if alpha < 1.0 - RANGE_SLACK || beta.abs() > 1.0 + RANGE_SLACK {
            return Err(Error::InvalidInput("ellipsoidal coordinates need alpha >= 1 and |beta| <= 1"));
        }
        Ok(Self { alpha, beta, theta_angle: wrap_angle(theta_angle), degenerate: false })
    }
}

pub(crate) fn wrap_angle(angle: f64) -> f64 {
    let r = angle % TAU;
    let r = if r < 0.0 { r + TAU } else { r };
    // r + TAU can round up to exactly TAU
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed angular difference folded into `(−π, π]`.
pub(crate) fn angle_difference(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > core::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

pub fn to_ellipsoidal(q: Vec3, prob: &Problem) -> Result<EllipsoidalPosition> {
    let (r_minus, r_plus) = prob.center_distances(q)?;
    let two_a = 2.0 * prob.a();
    let alpha = (r_minus + r_plus) / two_a;
    let beta = (r_minus - r_plus) / two_a;
    let degenerate = q.y == 0.0 && q.z == 0.0;
    let theta_angle = if degenerate { 0.0 } else { wrap_angle(libm::atan2(-q.y, q.z)) };
    Ok(EllipsoidalPosition { alpha, beta, theta_angle, degenerate })
}

pub fn from_ellipsoidal(ep: &EllipsoidalPosition, prob: &Problem) -> Result<Vec3> {
    let EllipsoidalPosition { alpha, beta, theta_angle, .. } = *ep;
    EllipsoidalPosition::new(alpha, beta, theta_angle)?;
    let a = prob.a();
    let x = a * alpha * beta;
    let rho = a * libm::sqrt(((alpha * alpha - 1.0) * (1.0 - beta * beta)).max(0.0));
    let (s, c) = (libm::sin(theta_angle), libm::cos(theta_angle));
    Ok(Vec3::new(x, -rho * s, rho * c))
}

/// Outcome of rotating a point about the center axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationCheck {
    /// `max(|Δα|, |Δβ|)`.
    pub coordinate_change: f64,
    /// `|ϑ_rotated − ϑ − angle|` folded mod 2π; zero for axis points.
    pub angle_shift_error: f64,
}

pub fn rotational_invariance_check(q: Vec3, prob: &Problem, angle: f64) -> Result<RotationCheck> {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    let rotated = Vec3::new(q.x, c * q.y - s * q.z, s * q.y + c * q.z);
    let before = to_ellipsoidal(q, prob)?;
    let after = to_ellipsoidal(rotated, prob)?;
    let coordinate_change =
        (after.alpha - before.alpha).abs().max((after.beta - before.beta).abs());
    let angle_shift_error = if before.degenerate || after.degenerate {
        0.0
    } else {
        angle_difference(after.theta_angle, before.theta_angle + angle).abs()
    };
    Ok(RotationCheck { coordinate_change, angle_shift_error })
}
