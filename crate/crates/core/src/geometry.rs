//! The `*`-metric on R⁴, the ellipsoid `E_a = {‖Q‖_* = 1}` and the central
//! projection from the affine slice `S = R³ × {1}` onto its `W > 0` sheet.
//!
//! With centers at `(±a, 0, 0)` the metric has weights
//! `(1, 1/(1+a²), 1/(1+a²), 1)`; for `a = 1` this is `(1, 1/2, 1/2, 1)`.

use crate::error::{Error, Result};
use crate::vector::Vec4;

/// Tolerance within which [`EllipsoidPoint::new`] renormalizes its input.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// Smallest `W` accepted when dividing back onto the slice `w = 1`.
pub const MIN_BRANCH_W: f64 = 1e-150;

/// Diagonal metric `‖v‖_*² = x² + b(y² + z²) + w²` with `b = 1/(1+a²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarMetric {
    a: f64,
    transverse: f64,
}

impl StarMetric {
    pub fn new(a: f64) -> Result<Self> {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::InvalidInput("center half-distance a must be finite and > 0"));
        }
        Ok(Self { a, transverse: 1.0 / (1.0 + a * a) })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `1 + a²`, the semi-axis² of the ellipsoid along y and z.
    pub fn one_plus_a_sq(&self) -> f64 {
        1.0 + self.a * self.a
    }

    pub fn weights(&self) -> [f64; 4] {
        [1.0, self.transverse, self.transverse, 1.0]
    }

    /// Unchecked inner product; callers validate finiteness.
    pub fn inner(&self, u: Vec4, v: Vec4) -> f64 {
        u.x * v.x + self.transverse * (u.y * v.y + u.z * v.z) + u.w * v.w
    }

    pub fn norm_sq(&self, v: Vec4) -> f64 {
        self.inner(v, v)
    }

    pub fn norm(&self, v: Vec4) -> f64 {
        libm::sqrt(self.norm_sq(v))
    }

    /// `*`-orthogonal projection onto the tangent space of the ellipsoid at
    /// `q` (which must satisfy `‖q‖_* = 1`): `v − (q, v)_* q`.
    pub fn tangent_part(&self, q: Vec4, v: Vec4) -> Vec4 {
        v - q * self.inner(q, v)
    }
}

fn ensure_finite(v: Vec4) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput("non-finite vector component"))
    }
}

pub fn star_norm(v: Vec4, metric: &StarMetric) -> Result<f64> {
    ensure_finite(v)?;
    Ok(metric.norm(v))
}

pub fn star_inner(u: Vec4, v: Vec4, metric: &StarMetric) -> Result<f64> {
    ensure_finite(u)?;
    ensure_finite(v)?;
    Ok(metric.inner(u, v))
}

/// A point of `E_a` on the `W > 0` sheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidPoint(Vec4);

impl EllipsoidPoint {
    /// Accepts `v` if `|‖v‖_* − 1| ≤ 1e-9` (renormalizing it) and `W > 0`.
    pub fn new(v: Vec4, metric: &StarMetric) -> Result<Self> {
        ensure_finite(v)?;
        let norm = metric.norm(v);
        if (norm - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::NotOnEllipsoid { norm });
        }
        if v.w <= 0.0 {
            return Err(Error::WrongBranch { w: v.w });
        }
        Ok(Self(v * (1.0 / norm)))
    }

    pub(crate) fn from_raw(v: Vec4) -> Self {
        Self(v)
    }

    pub fn as_vec(&self) -> Vec4 {
        self.0
    }

    /// The linear form `ℓ(Q) = W`.
    pub fn ell(&self) -> f64 {
        self.0.w
    }
}

/// Central projection `q ↦ q/‖q‖_*` of a point of the slice `w = 1`.
pub fn project(q: Vec4, metric: &StarMetric) -> Result<EllipsoidPoint> {
    ensure_finite(q)?;
    if q.w != 1.0 {
        return Err(Error::InvalidInput("projected point must lie on the slice w = 1"));
    }
    // w = 1 keeps the norm >= 1, so the division is always safe.
    let norm = metric.norm(q);
    Ok(EllipsoidPoint(q * (1.0 / norm)))
}

/// Inverse of [`project`]: `Q ↦ Q/ℓ(Q)`.
pub fn unproject(point: &EllipsoidPoint) -> Result<Vec4> {
    let q = point.as_vec();
    if q.w <= MIN_BRANCH_W {
        return Err(Error::WrongBranch { w: q.w });
    }
    let inv = 1.0 / q.w;
    let out = Vec4::new(q.x * inv, q.y * inv, q.z * inv, 1.0);
    if !out.is_finite() {
        return Err(Error::WrongBranch { w: q.w });
    }
    Ok(out)
}

/// `ℓ(π(q))·‖q‖_* − 1`, which vanishes up to roundoff.
pub fn duality_residual(q: Vec4, metric: &StarMetric) -> Result<f64> {
    let point = project(q, metric)?;
    Ok(point.ell() * metric.norm(q) - 1.0)
}
