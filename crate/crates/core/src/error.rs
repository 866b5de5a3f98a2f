use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    /// The point lies on the `W <= 0` sheet, or so close to `W = 0` that
    /// unprojecting would overflow.
    #[error("ellipsoid point off the W > 0 branch (W = {w:e})")]
    WrongBranch { w: f64 },
    #[error("point not on the ellipsoid (|Q|_* = {norm})")]
    NotOnEllipsoid { norm: f64 },
    #[error("state is tangent-inconsistent ((Q, Q')_* = {residual:e})")]
    NotTangent { residual: f64 },
    #[error("near collision with a center (distance {distance:e})")]
    NearCollision { distance: f64 },
    /// `u_j² >= 1`: Q sits on the projection ray of a center.
    #[error("ellipsoidal potential undefined on a center ray (u^2 = {u_sq})")]
    CenterRay { u_sq: f64 },
    #[error("operation only defined for a = 1 (got a = {a})")]
    UnsupportedParameter { a: f64 },
    #[error("least-squares design matrix is rank deficient")]
    RankDeficient,
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("constraint residual {residual:e} exceeded integrity bound")]
    ConstraintIntegrity { residual: f64 },
}
