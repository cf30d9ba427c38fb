//! Crate-wide error type.

use serde::Serialize;

/// Stage at which a twist certification attempt gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TwistStage {
    /// Slow rotation numbers on the boundary level lines never straddled 1.
    Rot2,
    /// No admissible integer separating the fast rotation numbers.
    Nu,
    /// Fast rotation number on the inner radius never cleared the integer.
    Rot1,
    /// Final margin re-check on the full grid failed.
    Validate,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("vortex strengths must satisfy kappa1, kappa2, kappa1 + kappa2 all nonzero (got kappa1 = {kappa1}, kappa2 = {kappa2})")]
    InvalidStrengths { kappa1: f64, kappa2: f64 },

    #[error("radial power exponent must exceed 1 (got p = {p})")]
    InvalidExponent { p: f64 },

    #[error("singular configuration: vortex separation {separation:e} below the collision guard")]
    SingularConfiguration { separation: f64 },

    #[error("state lies outside the domain")]
    OutsideDomain,

    #[error("operation requires normalized strengths kappa1 + kappa2 = 1 (got sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("minimization of h did not reach |grad h| <= {tol:e} (best achieved {best:e})")]
    NoConvergence { tol: f64, best: f64 },

    #[error("integration step size underflow at t = {t}")]
    StepFailure { t: f64 },

    #[error("integration step budget exhausted at t = {t}")]
    BudgetExceeded { t: f64 },

    #[error("trajectory left the domain at t = {t}")]
    DomainExit { t: f64 },

    #[error("angle lift could not be disambiguated; trajectory passes too close to the center")]
    LiftAmbiguity,

    #[error("non-transversal section crossing at t = {t} (|angular rate| = {rate:e})")]
    NonTransversal { t: f64, rate: f64 },

    #[error("level {c} not bracketed along the ray at angle {theta}; level line is not star-shaped about the given center")]
    RayRootNotBracketed { c: f64, theta: f64 },

    #[error("gradient of h vanishes on the level (|grad h| = {norm:e})")]
    GradientVanishes { norm: f64 },

    #[error("Hessian of h is not positive definite")]
    NotPositiveDefinite,

    #[error("cannot certify twist (stage {stage:?}); best margin reached: {best_margin:e}")]
    CannotCertify { stage: TwistStage, best_margin: f64 },

    #[error("seed separation out of range: |w1| = {r1:e} not inside (0, {b1:e})")]
    SeparationOutOfRange { r1: f64, b1: f64 },

    #[error("shooting Jacobian is rank deficient")]
    SingularJacobian,

    #[error("no residual decrease after {halvings} step halvings (residual {residual:e})")]
    NoDecrease { halvings: u32, residual: f64 },

    #[error("shooting iteration budget ({iterations}) exhausted (residual {residual:e})")]
    ShootingBudgetExceeded { iterations: u32, residual: f64 },

    #[error("family verification requires at least {required} converged orbits (got {got})")]
    InsufficientFamily { required: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
