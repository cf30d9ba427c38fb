//! Domain models: the symmetric regular part `g` of a hydrodynamic Green's
//! function, the Robin function `h(z) = g(z, z)`, their derivatives, and the
//! harmonic center.
//!
//! Three model kinds are provided. The unit disk carries the closed forms
//!
//! ```text
//! g(z, w) = -ln(1 - 2<z, w> + |z|^2 |w|^2) / (4 pi),
//! h(z)    = -ln(1 - |z|^2) / (2 pi),
//! ```
//!
//! a synthetic radial-power model `h(z) = |z|^(2p)` gives level lines with a
//! closed-form period, and [`UserModel`] accepts any symmetric C^2 function
//! (derivatives default to central finite differences).

use crate::error::{Error, Result};
use crate::geometry::Point2;
use nalgebra::Matrix2;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

type Scalar2 = Arc<dyn Fn(Point2, Point2) -> f64 + Send + Sync>;
type Grad2 = Arc<dyn Fn(Point2, Point2) -> Point2 + Send + Sync>;
type Grad1 = Arc<dyn Fn(Point2) -> Point2 + Send + Sync>;
type Inside = Arc<dyn Fn(Point2) -> bool + Send + Sync>;

/// Relative step for central finite differences on user models.
const FD_GRAD_STEP: f64 = 1e-5;
/// Relative step for Hessian differences (applied to the gradient).
const FD_HESS_STEP: f64 = 1e-4;

/// A user-supplied symmetric C^2 regular part. Derivatives fall back to
/// central finite differences unless analytic closures are provided; the
/// membership test defaults to the whole plane.
#[derive(Clone)]
pub struct UserModel {
    g: Scalar2,
    grad1: Option<Grad2>,
    grad_h: Option<Grad1>,
    inside: Option<Inside>,
    rotation_symmetric: bool,
}

impl UserModel {
    pub fn new(g: impl Fn(Point2, Point2) -> f64 + Send + Sync + 'static) -> Self {
        UserModel { g: Arc::new(g), grad1: None, grad_h: None, inside: None, rotation_symmetric: false }
    }

    /// Declare that `g(Rz, Rw) = g(z, w)` for every rotation `R` about the
    /// origin.
    pub fn with_rotation_symmetry(mut self) -> Self {
        self.rotation_symmetric = true;
        self
    }

    /// Analytic gradient of `g` in its first argument. The second-argument
    /// gradient follows from symmetry.
    pub fn with_grad1(mut self, grad1: impl Fn(Point2, Point2) -> Point2 + Send + Sync + 'static) -> Self {
        self.grad1 = Some(Arc::new(grad1));
        self
    }

    pub fn with_grad_h(mut self, grad_h: impl Fn(Point2) -> Point2 + Send + Sync + 'static) -> Self {
        self.grad_h = Some(Arc::new(grad_h));
        self
    }

    pub fn with_inside(mut self, inside: impl Fn(Point2) -> bool + Send + Sync + 'static) -> Self {
        self.inside = Some(Arc::new(inside));
        self
    }
}

impl fmt::Debug for UserModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserModel").finish_non_exhaustive()
    }
}

/// The geometric data of the domain: `g`, `h` and their derivatives.
#[derive(Debug, Clone)]
pub enum DomainModel {
    UnitDisk,
    RadialPower { p: f64 },
    UserG(UserModel),
}

impl DomainModel {
    /// Unit disk with its hydrodynamic Green's function regular part.
    pub fn unit_disk() -> Self {
        DomainModel::UnitDisk
    }

    /// Synthetic radial model `g(z, w) = (|z|^(2p) + |w|^(2p)) / 2`, so
    /// `h(z) = |z|^(2p)`. Requires `p > 1`.
    pub fn radial_power(p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidExponent { p });
        }
        Ok(DomainModel::RadialPower { p })
    }

    pub fn user(model: UserModel) -> Self {
        DomainModel::UserG(model)
    }

    pub fn eval_g(&self, z: Point2, w: Point2) -> f64 {
        match self {
            DomainModel::UnitDisk => {
                let u = 1.0 - 2.0 * z.dot(w) + z.norm_sq() * w.norm_sq();
                -u.ln() / (4.0 * PI)
            }
            DomainModel::RadialPower { p } => {
                0.5 * (z.norm_sq().powf(*p) + w.norm_sq().powf(*p))
            }
            DomainModel::UserG(m) => (m.g)(z, w),
        }
    }

    pub fn eval_h(&self, z: Point2) -> f64 {
        match self {
            DomainModel::UnitDisk => -(1.0 - z.norm_sq()).ln() / (2.0 * PI),
            DomainModel::RadialPower { p } => z.norm_sq().powf(*p),
            DomainModel::UserG(m) => (m.g)(z, z),
        }
    }

    /// Gradient of `g` with respect to the first argument.
    pub fn grad1_g(&self, z: Point2, w: Point2) -> Point2 {
        match self {
            DomainModel::UnitDisk => {
                let u = 1.0 - 2.0 * z.dot(w) + z.norm_sq() * w.norm_sq();
                (w - z * w.norm_sq()) / (2.0 * PI * u)
            }
            DomainModel::RadialPower { p } => z * (*p * z.norm_sq().powf(*p - 1.0)),
            DomainModel::UserG(m) => {
                if let Some(grad1) = &m.grad1 {
                    grad1(z, w)
                } else {
                    let s = FD_GRAD_STEP * (1.0 + z.norm());
                    let gx = ((m.g)(z + Point2::new(s, 0.0), w) - (m.g)(z - Point2::new(s, 0.0), w)) / (2.0 * s);
                    let gy = ((m.g)(z + Point2::new(0.0, s), w) - (m.g)(z - Point2::new(0.0, s), w)) / (2.0 * s);
                    Point2::new(gx, gy)
                }
            }
        }
    }

    /// Gradient of `g` with respect to the second argument; by symmetry this
    /// is `grad1_g` with swapped arguments.
    pub fn grad2_g(&self, z: Point2, w: Point2) -> Point2 {
        self.grad1_g(w, z)
    }

    pub fn grad_h(&self, z: Point2) -> Point2 {
        match self {
            DomainModel::UnitDisk => z / (PI * (1.0 - z.norm_sq())),
            DomainModel::RadialPower { p } => z * (2.0 * *p * z.norm_sq().powf(*p - 1.0)),
            DomainModel::UserG(m) => {
                if let Some(grad_h) = &m.grad_h {
                    grad_h(z)
                } else if m.grad1.is_some() {
                    // chain rule through h(z) = g(z, z)
                    self.grad1_g(z, z) + self.grad2_g(z, z)
                } else {
                    let s = FD_GRAD_STEP * (1.0 + z.norm());
                    let hx = (self.eval_h(z + Point2::new(s, 0.0)) - self.eval_h(z - Point2::new(s, 0.0))) / (2.0 * s);
                    let hy = (self.eval_h(z + Point2::new(0.0, s)) - self.eval_h(z - Point2::new(0.0, s))) / (2.0 * s);
                    Point2::new(hx, hy)
                }
            }
        }
    }

    pub fn hess_h(&self, z: Point2) -> Matrix2<f64> {
        match self {
            DomainModel::UnitDisk => {
                let u = 1.0 - z.norm_sq();
                let outer = Matrix2::new(z.x * z.x, z.x * z.y, z.x * z.y, z.y * z.y);
                (Matrix2::identity() / u + outer * (2.0 / (u * u))) / PI
            }
            DomainModel::RadialPower { p } => {
                let p = *p;
                let r2 = z.norm_sq();
                let outer = Matrix2::new(z.x * z.x, z.x * z.y, z.x * z.y, z.y * z.y);
                let diag = if p == 1.0 { 1.0 } else { r2.powf(p - 1.0) };
                let cross = if r2 == 0.0 { 0.0 } else { 4.0 * p * (p - 1.0) * r2.powf(p - 2.0) };
                Matrix2::identity() * (2.0 * p * diag) + outer * cross
            }
            DomainModel::UserG(_) => {
                let s = FD_HESS_STEP * (1.0 + z.norm());
                let gxp = self.grad_h(z + Point2::new(s, 0.0));
                let gxm = self.grad_h(z - Point2::new(s, 0.0));
                let gyp = self.grad_h(z + Point2::new(0.0, s));
                let gym = self.grad_h(z - Point2::new(0.0, s));
                let dxx = (gxp.x - gxm.x) / (2.0 * s);
                let dyy = (gyp.y - gym.y) / (2.0 * s);
                // symmetrize the mixed entry
                let dxy = 0.5 * ((gxp.y - gxm.y) / (2.0 * s) + (gyp.x - gym.x) / (2.0 * s));
                Matrix2::new(dxx, dxy, dxy, dyy)
            }
        }
    }

    pub fn inside(&self, z: Point2) -> bool {
        match self {
            DomainModel::UnitDisk => z.norm_sq() < 1.0,
            DomainModel::RadialPower { .. } => true,
            DomainModel::UserG(m) => m.inside.as_ref().map_or(true, |f| f(z)),
        }
    }

    /// Whether `g` is invariant under simultaneous rotation of both
    /// arguments about the origin. Rotation-symmetric models carry a rigid
    /// rotation symmetry of the pair dynamics, which the orbit shooting must
    /// pin with an extra phase condition.
    pub fn is_rotation_symmetric(&self) -> bool {
        match self {
            DomainModel::UnitDisk | DomainModel::RadialPower { .. } => true,
            DomainModel::UserG(m) => m.rotation_symmetric,
        }
    }
}

/// Result of the harmonic-center search: the minimizer of `h` and its value.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicCenter {
    pub z0: Point2,
    pub value: f64,
    pub grad_norm: f64,
}

/// Locate the minimum of `h` by damped Newton descent from `seed`, stopping
/// when `|grad h| <= tol`.
pub fn harmonic_center(model: &DomainModel, seed: Point2, tol: f64) -> Result<HarmonicCenter> {
    const MAX_ITERS: usize = 200;
    if !model.inside(seed) {
        return Err(Error::OutsideDomain);
    }
    let mut z = seed;
    let mut g = model.grad_h(z);
    let mut gn = g.norm();
    let mut best = gn;
    for _ in 0..MAX_ITERS {
        if gn <= tol {
            return Ok(HarmonicCenter { z0: z, value: model.eval_h(z), grad_norm: gn });
        }
        let hess = model.hess_h(z);
        let det = hess[(0, 0)] * hess[(1, 1)] - hess[(0, 1)] * hess[(1, 0)];
        let newton = if det.abs() > 1e-300 && hess[(0, 0)] + hess[(1, 1)] > 0.0 {
            let inv = Matrix2::new(hess[(1, 1)], -hess[(0, 1)], -hess[(1, 0)], hess[(0, 0)]) / det;
            Point2::new(-(inv[(0, 0)] * g.x + inv[(0, 1)] * g.y), -(inv[(1, 0)] * g.x + inv[(1, 1)] * g.y))
        } else {
            // Hessian unusable: plain descent scaled to a modest step
            -g * (0.1 * (1.0 + z.norm()) / gn)
        };
        let mut lambda = 1.0;
        let mut advanced = false;
        for _ in 0..25 {
            let trial = z + newton * lambda;
            if model.inside(trial) {
                let gt = model.grad_h(trial);
                if gt.norm() < gn {
                    z = trial;
                    g = gt;
                    gn = g.norm();
                    best = best.min(gn);
                    advanced = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !advanced {
            return Err(Error::NoConvergence { tol, best });
        }
    }
    if gn <= tol {
        return Ok(HarmonicCenter { z0: z, value: model.eval_h(z), grad_norm: gn });
    }
    Err(Error::NoConvergence { tol, best })
}
