//! The two-fixed-center problem in R³: centers at `(±a, 0, 0)` with masses
//! `m₋`, `m₊`, unit gravitational constant.

use crate::error::{Error, Result};
use crate::geometry::StarMetric;
use crate::vector::Vec3;

/// Distance below which field evaluations refuse to proceed.
pub const COLLISION_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem {
    m_minus: f64,
    m_plus: f64,
    a: f64,
}

impl Problem {
    pub fn new(m_minus: f64, m_plus: f64, a: f64) -> Result<Self> {
        if !(m_minus.is_finite() && m_plus.is_finite()) || m_minus < 0.0 || m_plus < 0.0 {
            return Err(Error::InvalidInput("masses must be finite and non-negative"));
        }
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::InvalidInput("center half-distance a must be finite and > 0"));
        }
        Ok(Self { m_minus, m_plus, a })
    }

    pub fn m_minus(&self) -> f64 {
        self.m_minus
    }

    pub fn m_plus(&self) -> f64 {
        self.m_plus
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Same masses, different center half-distance.
    pub fn with_a(&self, a: f64) -> Result<Self> {
        Self::new(self.m_minus, self.m_plus, a)
    }

    /// `[c₋, c₊] = [(−a, 0, 0), (a, 0, 0)]`.
    pub fn centers(&self) -> [Vec3; 2] {
        [Vec3::new(-self.a, 0.0, 0.0), Vec3::new(self.a, 0.0, 0.0)]
    }

    /// `[m₋, m₊]`, paired with [`Problem::centers`].
    pub fn masses(&self) -> [f64; 2] {
        [self.m_minus, self.m_plus]
    }

    /// Exactly one of the two masses vanishes.
    pub fn is_kepler(&self) -> bool {
        (self.m_minus == 0.0) != (self.m_plus == 0.0)
    }

    pub fn metric(&self) -> StarMetric {
        StarMetric::new(self.a).expect("a validated at construction")
    }

    /// Distances `(‖q − c₋‖, ‖q − c₊‖)`, erroring inside the collision guard.
    pub fn center_distances(&self, q: Vec3) -> Result<(f64, f64)> {
        self.center_distances_guarded(q, COLLISION_GUARD)
    }

    pub(crate) fn center_distances_guarded(&self, q: Vec3, guard: f64) -> Result<(f64, f64)> {
        if !q.is_finite() {
            return Err(Error::InvalidInput("non-finite position"));
        }
        let [cm, cp] = self.centers();
        let r_minus = (q - cm).norm();
        let r_plus = (q - cp).norm();
        let closest = r_minus.min(r_plus);
        if closest < guard {
            return Err(Error::NearCollision { distance: closest });
        }
        Ok((r_minus, r_plus))
    }
}

/// Position `q` and velocity `p = dq/dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub q: Vec3,
    pub p: Vec3,
}

impl PhasePoint {
    pub const fn new(q: Vec3, p: Vec3) -> Self {
        Self { q, p }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.q.x, self.q.y, self.q.z, self.p.x, self.p.y, self.p.z]
    }

    pub fn from_array(s: [f64; 6]) -> Self {
        Self::new(Vec3::new(s[0], s[1], s[2]), Vec3::new(s[3], s[4], s[5]))
    }

    /// Rotates position and velocity about the x axis.
    pub fn rotate_about_axis(self, angle: f64) -> Self {
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        let rot = |v: Vec3| Vec3::new(v.x, c * v.y - s * v.z, s * v.y + c * v.z);
        Self::new(rot(self.q), rot(self.p))
    }
}

pub(crate) fn acceleration_guarded(q: Vec3, prob: &Problem, guard: f64) -> Result<Vec3> {
    let (r_minus, r_plus) = prob.center_distances_guarded(q, guard)?;
    let [cm, cp] = prob.centers();
    let k_minus = prob.m_minus / (r_minus * r_minus * r_minus);
    let k_plus = prob.m_plus / (r_plus * r_plus * r_plus);
    Ok((q - cm) * -k_minus - (q - cp) * k_plus)
}

/// `q̈ = −m₋(q−c₋)/‖q−c₋‖³ − m₊(q−c₊)/‖q−c₊‖³`.
///
/// The fourth component of the embedded ODE on `R³ × {1}` is identically
/// zero and is not represented.
pub fn acceleration(pp: &PhasePoint, prob: &Problem) -> Result<Vec3> {
    acceleration_guarded(pp.q, prob, COLLISION_GUARD)
}

/// `J = ‖p‖²/2 − m₋/‖q−c₋‖ − m₊/‖q−c₊‖`.
pub fn hamiltonian_j(pp: &PhasePoint, prob: &Problem) -> Result<f64> {
    let (r_minus, r_plus) = prob.center_distances(pp.q)?;
    Ok(0.5 * pp.p.norm_sq() - prob.m_minus / r_minus - prob.m_plus / r_plus)
}

/// `Θ`, the x-component of `q × p`. The unit axis is used for every `a`.
pub fn theta(pp: &PhasePoint, _prob: &Problem) -> f64 {
    pp.q.y * pp.p.z - pp.q.z * pp.p.y
}

/// Euler's integral `E = ‖q×p‖² + (c·p)² + 2 q·c (m₋/‖q+c‖ − m₊/‖q−c‖)`
/// with `c = (a, 0, 0)`.
pub fn euler_integral_e(pp: &PhasePoint, prob: &Problem) -> Result<f64> {
    let (r_minus, r_plus) = prob.center_distances(pp.q)?;
    let a = prob.a;
    let l = pp.q.cross(pp.p);
    let cp = a * pp.p.x;
    let qc = a * pp.q.x;
    Ok(l.norm_sq() + cp * cp + 2.0 * qc * (prob.m_minus / r_minus - prob.m_plus / r_plus))
}

/// `|E_{a_small} − ‖q×p‖²|`: distance of Euler's integral from the squared
/// angular momentum once the two centers are pulled to within `2·a_small`.
/// Linear in `a_small` when `x (m₋ − m₊) ≠ 0`, quadratic otherwise.
pub fn kepler_limit_check(pp: &PhasePoint, prob: &Problem, a_small: f64) -> Result<f64> {
    let merged = prob.with_a(a_small)?;
    let e = euler_integral_e(pp, &merged)?;
    Ok((e - pp.q.cross(pp.p).norm_sq()).abs())
}
