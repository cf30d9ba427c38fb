//! The two-vortex Hamiltonian, its vector field, the linear change of
//! variables separating fast and slow motion, and the derived quantities used
//! by the twist certification: the slow-gradient remainder and the fast
//! angular rate.
//!
//! State conventions: `z = (z1, z2)` is the physical pair, `w = A z` with
//!
//! ```text
//! w1 = sqrt(|k1 k2|) E_sigma (z1 - z2),    w2 = k1 z1 + k2 z2,
//! ```
//!
//! where `E_sigma = diag(sigma, 1)` and `sigma = sgn(k1 k2)`. For normalized
//! strengths (`k1 + k2 = 1`) `w2` is the center of vorticity and the `w`
//! system is again Hamiltonian with a `-(k1 k2 / pi) log |w1|` singular term.

use crate::domain::DomainModel;
use crate::error::{Error, Result};
use crate::flow::{Field, FieldError};
use crate::geometry::Point2;
use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Two vortices may not approach each other closer than this.
pub const COLLISION_GUARD: f64 = 1e-30;

/// Tolerance on `|k1 + k2 - 1|` for operations defined only in the
/// normalized frame.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Vortex strengths with the derived transform data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VortexConfig {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa_sum: f64,
    pub sigma: i8,
    #[serde(skip)]
    pub a: Matrix4<f64>,
    #[serde(skip)]
    pub a_inv: Matrix4<f64>,
}

impl VortexConfig {
    pub fn new(kappa1: f64, kappa2: f64) -> Result<Self> {
        let kappa_sum = kappa1 + kappa2;
        if kappa1 == 0.0
            || kappa2 == 0.0
            || kappa_sum == 0.0
            || !kappa1.is_finite()
            || !kappa2.is_finite()
        {
            return Err(Error::InvalidStrengths { kappa1, kappa2 });
        }
        let sigma: i8 = if kappa1 * kappa2 > 0.0 { 1 } else { -1 };
        let s = (kappa1 * kappa2).abs().sqrt();
        let sg = sigma as f64;
        #[rustfmt::skip]
        let a = Matrix4::new(
            s * sg, 0.0,    -s * sg, 0.0,
            0.0,    s,      0.0,     -s,
            kappa1, 0.0,    kappa2,  0.0,
            0.0,    kappa1, 0.0,     kappa2,
        );
        let k = kappa_sum;
        #[rustfmt::skip]
        let a_inv = Matrix4::new(
            kappa2 * sg / (s * k),  0.0,               1.0 / k, 0.0,
            0.0,                    kappa2 / (s * k),  0.0,     1.0 / k,
            -kappa1 * sg / (s * k), 0.0,               1.0 / k, 0.0,
            0.0,                    -kappa1 / (s * k), 0.0,     1.0 / k,
        );
        Ok(VortexConfig { kappa1, kappa2, kappa_sum, sigma, a, a_inv })
    }

    /// `sqrt(|k1 k2|)`.
    pub fn s(&self) -> f64 {
        (self.kappa1 * self.kappa2).abs().sqrt()
    }

    pub fn kappa_product(&self) -> f64 {
        self.kappa1 * self.kappa2
    }

    pub fn is_normalized(&self) -> bool {
        (self.kappa_sum - 1.0).abs() <= NORMALIZATION_TOL
    }

    /// The configuration with strengths divided by their sum. A solution of
    /// the normalized system at time `t` is a solution of the original one at
    /// time `t / (k1 + k2)`.
    pub fn normalized(&self) -> VortexConfig {
        VortexConfig::new(self.kappa1 / self.kappa_sum, self.kappa2 / self.kappa_sum)
            .expect("normalization preserves validity")
    }

    /// Apply `E_sigma = diag(sigma, 1)`.
    pub fn e_sigma(&self, v: Point2) -> Point2 {
        if self.sigma < 0 {
            Point2::new(-v.x, v.y)
        } else {
            v
        }
    }
}

/// Physical pair state `(z1, z2)`, `z1 != z2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairState {
    pub z1: Point2,
    pub z2: Point2,
}

impl PairState {
    pub fn new(z1: Point2, z2: Point2) -> Self {
        PairState { z1, z2 }
    }

    pub fn separation(&self) -> f64 {
        (self.z1 - self.z2).norm()
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.z1.x, self.z1.y, self.z2.x, self.z2.y]
    }

    pub fn from_array(y: &[f64; 4]) -> Self {
        PairState::new(Point2::new(y[0], y[1]), Point2::new(y[2], y[3]))
    }
}

/// Transformed state `(w1, w2)`, `w1 != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WState {
    pub w1: Point2,
    pub w2: Point2,
}

impl WState {
    pub fn new(w1: Point2, w2: Point2) -> Self {
        WState { w1, w2 }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.w1.x, self.w1.y, self.w2.x, self.w2.y]
    }

    pub fn from_array(y: &[f64; 4]) -> Self {
        WState::new(Point2::new(y[0], y[1]), Point2::new(y[2], y[3]))
    }
}

pub fn to_w(config: &VortexConfig, state: &PairState) -> WState {
    let s = config.s();
    let w1 = config.e_sigma(state.z1 - state.z2) * s;
    let w2 = state.z1 * config.kappa1 + state.z2 * config.kappa2;
    WState::new(w1, w2)
}

pub fn from_w(config: &VortexConfig, w: &WState) -> PairState {
    let s = config.s();
    let k = config.kappa_sum;
    let d = config.e_sigma(w.w1) / s;
    let z1 = (w.w2 + d * config.kappa2) / k;
    let z2 = (w.w2 - d * config.kappa1) / k;
    PairState::new(z1, z2)
}

fn check_state(model: &DomainModel, state: &PairState) -> Result<()> {
    let sep = state.separation();
    if sep <= COLLISION_GUARD {
        return Err(Error::SingularConfiguration { separation: sep });
    }
    if !model.inside(state.z1) || !model.inside(state.z2) {
        return Err(Error::OutsideDomain);
    }
    Ok(())
}

/// The pair Hamiltonian
/// `H = -(k1 k2 / pi) ln|z1 - z2| - 2 k1 k2 g(z1, z2) - k1^2 h(z1) - k2^2 h(z2)`.
pub fn eval_h_pair(model: &DomainModel, config: &VortexConfig, state: &PairState) -> Result<f64> {
    check_state(model, state)?;
    let kk = config.kappa_product();
    let sep = state.separation();
    Ok(-(kk / PI) * sep.ln()
        - 2.0 * kk * model.eval_g(state.z1, state.z2)
        - config.kappa1 * config.kappa1 * model.eval_h(state.z1)
        - config.kappa2 * config.kappa2 * model.eval_h(state.z2))
}

/// The Hamiltonian expressed through the transformed state; the singular term
/// is evaluated from `|w1|` directly so no cancellation occurs at small
/// separations.
pub fn eval_h_w(model: &DomainModel, config: &VortexConfig, w: &WState) -> Result<f64> {
    let r1 = w.w1.norm();
    if r1 <= COLLISION_GUARD {
        return Err(Error::SingularConfiguration { separation: r1 });
    }
    let state = from_w(config, w);
    if !model.inside(state.z1) || !model.inside(state.z2) {
        return Err(Error::OutsideDomain);
    }
    let kk = config.kappa_product();
    Ok(-(kk / PI) * (r1 / config.s()).ln()
        - 2.0 * kk * model.eval_g(state.z1, state.z2)
        - config.kappa1 * config.kappa1 * model.eval_h(state.z1)
        - config.kappa2 * config.kappa2 * model.eval_h(state.z2))
}

/// Regular (non-singular) parts of the two vortex velocities.
fn regular_velocities(model: &DomainModel, config: &VortexConfig, state: &PairState) -> (Point2, Point2) {
    let (k1, k2) = (config.kappa1, config.kappa2);
    let r1 = (model.grad1_g(state.z1, state.z2) * (-2.0 * k2) - model.grad_h(state.z1) * k1).jay();
    let r2 = (model.grad2_g(state.z1, state.z2) * (-2.0 * k1) - model.grad_h(state.z2) * k2).jay();
    (r1, r2)
}

/// Velocities `(dz1/dt, dz2/dt)` of the pair system.
pub fn z_field(model: &DomainModel, config: &VortexConfig, state: &PairState) -> Result<(Point2, Point2)> {
    check_state(model, state)?;
    let d = state.z1 - state.z2;
    let d2 = d.norm_sq();
    let (mut v1, mut v2) = regular_velocities(model, config, state);
    v1 = v1 + (d * (-config.kappa2 / (PI * d2))).jay();
    v2 = v2 + (d * (config.kappa1 / (PI * d2))).jay();
    Ok((v1, v2))
}

/// Velocities `(dw1/dt, dw2/dt)` of the transformed system, obtained by
/// pushing the pair field through the linear transform. The singular
/// interaction term is evaluated analytically in the `w1` variable.
pub fn w_field(model: &DomainModel, config: &VortexConfig, w: &WState) -> Result<(Point2, Point2)> {
    let r1sq = w.w1.norm_sq();
    if r1sq.sqrt() <= COLLISION_GUARD {
        return Err(Error::SingularConfiguration { separation: r1sq.sqrt() });
    }
    let state = from_w(config, w);
    if !model.inside(state.z1) || !model.inside(state.z2) {
        return Err(Error::OutsideDomain);
    }
    let (r1, r2) = regular_velocities(model, config, &state);
    let coef = -config.kappa_product() * config.kappa_sum / PI;
    let dw1 = w.w1.jay() * (coef / r1sq) + config.e_sigma(r1 - r2) * config.s();
    let dw2 = r1 * config.kappa1 + r2 * config.kappa2;
    Ok((dw1, dw2))
}

/// Deviation of the slow-variable gradient from the single-vortex field:
/// `Q(w) = grad_{w2} H_w(w) + grad h(w2)`. Defined for normalized strengths.
pub fn remainder_q(model: &DomainModel, config: &VortexConfig, w: &WState) -> Result<Point2> {
    if !config.is_normalized() {
        return Err(Error::NotNormalized { sum: config.kappa_sum });
    }
    let state = from_w(config, w);
    check_state(model, &state)?;
    let kk = config.kappa_product();
    let gsum = model.grad1_g(state.z1, state.z2) + model.grad2_g(state.z1, state.z2);
    let grad_w2 = gsum * (-2.0 * kk)
        - model.grad_h(state.z1) * (config.kappa1 * config.kappa1)
        - model.grad_h(state.z2) * (config.kappa2 * config.kappa2);
    Ok(grad_w2 + model.grad_h(w.w2))
}

/// Angular rate of the fast variable in polar coordinates,
/// `f(R1, R2, Th1, Th2) = k1 k2 / (pi R1^2) + <k, e(Th1)> / R1`,
/// with the coupling vector `k` assembled from the `g`- and `h`-gradients at
/// the reconstructed vortex positions. Defined for normalized strengths.
pub fn fast_angular_rate(
    model: &DomainModel,
    config: &VortexConfig,
    r1: f64,
    r2: f64,
    th1: f64,
    th2: f64,
) -> Result<f64> {
    if !config.is_normalized() {
        return Err(Error::NotNormalized { sum: config.kappa_sum });
    }
    if r1 <= 0.0 {
        return Err(Error::InvalidInput(format!("fast radius must be positive, got {r1}")));
    }
    let (k1, k2) = (config.kappa1, config.kappa2);
    let s = config.s();
    let e1 = Point2::unit(th1);
    let e2 = Point2::unit(th2);
    let z1 = e1 * (k2 / s * r1) + e2 * r2;
    let z2 = e1 * (-k1 / s * r1) + e2 * r2;
    if !model.inside(z1) || !model.inside(z2) {
        return Err(Error::OutsideDomain);
    }
    let coupling = (model.grad1_g(z1, z2) * k2 - model.grad2_g(z1, z2) * k1) * (2.0 * s)
        + model.grad_h(z1) * (k1 * s)
        - model.grad_h(z2) * (k2 * s);
    Ok(k1 * k2 / (PI * r1 * r1) + coupling.dot(e1) / r1)
}

/// Angular impulse `k1 |z1|^2 + k2 |z2|^2`, conserved in rotation-symmetric
/// domains.
pub fn angular_impulse(config: &VortexConfig, state: &PairState) -> f64 {
    config.kappa1 * state.z1.norm_sq() + config.kappa2 * state.z2.norm_sq()
}

fn field_guard(model: &DomainModel, state: &PairState) -> std::result::Result<(), FieldError> {
    if state.separation() <= COLLISION_GUARD {
        return Err(FieldError::Singular);
    }
    if !model.inside(state.z1) || !model.inside(state.z2) {
        return Err(FieldError::Outside);
    }
    Ok(())
}

/// The pair system as an integrable 4-dimensional field.
pub struct ZPairField<'a> {
    pub model: &'a DomainModel,
    pub config: &'a VortexConfig,
}

impl<'a> Field<4> for ZPairField<'a> {
    fn eval(&self, y: &[f64; 4]) -> std::result::Result<[f64; 4], FieldError> {
        let state = PairState::from_array(y);
        field_guard(self.model, &state)?;
        let (v1, v2) = z_field(self.model, self.config, &state).map_err(|_| FieldError::Singular)?;
        Ok([v1.x, v1.y, v2.x, v2.y])
    }

    fn max_step_hint(&self, y: &[f64; 4]) -> f64 {
        // resolve at most an eighth of a fast pair turn per step
        let state = PairState::from_array(y);
        let d2 = (state.z1 - state.z2).norm_sq();
        PI * PI * d2 / (4.0 * self.config.kappa_sum.abs())
    }
}

/// The transformed system as an integrable 4-dimensional field.
pub struct WPairField<'a> {
    pub model: &'a DomainModel,
    pub config: &'a VortexConfig,
}

impl<'a> Field<4> for WPairField<'a> {
    fn eval(&self, y: &[f64; 4]) -> std::result::Result<[f64; 4], FieldError> {
        let w = WState::from_array(y);
        if w.w1.norm() <= COLLISION_GUARD {
            return Err(FieldError::Singular);
        }
        let state = from_w(self.config, &w);
        field_guard(self.model, &state)?;
        let (v1, v2) = w_field(self.model, self.config, &w).map_err(|_| FieldError::Singular)?;
        Ok([v1.x, v1.y, v2.x, v2.y])
    }

    fn max_step_hint(&self, y: &[f64; 4]) -> f64 {
        let r1sq = y[0] * y[0] + y[1] * y[1];
        let rate_scale = (self.config.kappa_product() * self.config.kappa_sum).abs();
        PI * PI * r1sq / (4.0 * rate_scale)
    }
}

/// The single-vortex (center of vorticity) system
/// `dz/dt = -(k1 + k2) J grad h(z)`.
pub struct CenterField<'a> {
    pub model: &'a DomainModel,
    pub kappa_sum: f64,
}

impl<'a> Field<2> for CenterField<'a> {
    fn eval(&self, y: &[f64; 2]) -> std::result::Result<[f64; 2], FieldError> {
        let z = Point2::new(y[0], y[1]);
        if !self.model.inside(z) {
            return Err(FieldError::Outside);
        }
        let v = model_center_velocity(self.model, self.kappa_sum, z);
        Ok([v.x, v.y])
    }
}

pub(crate) fn model_center_velocity(model: &DomainModel, kappa_sum: f64, z: Point2) -> Point2 {
    model.grad_h(z).jay() * (-kappa_sum)
}
