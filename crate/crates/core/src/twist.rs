//! Rotation numbers of the fast and slow components over one slow period,
//! and certification of the opposite-inequality (twist) pattern on the
//! product of a fast annulus with the band between two level lines.

use crate::domain::DomainModel;
use crate::dynamics::{fast_angular_rate, VortexConfig, WPairField, WState};
use crate::error::{Error, Result, TwistStage};
use crate::flow::{lift_increments, IntegratorSettings, LiftSpec};
use crate::geometry::Point2;
use crate::levelset::{trace_level, BandCertificate, LevelOrbit, Monotone};
use crate::par::par_map;
use serde::Serialize;
use std::f64::consts::TAU;

/// Grid densities and search budgets for twist certification.
#[derive(Debug, Clone)]
pub struct TwistGrids {
    /// Sample points per boundary level line.
    pub n_boundary: usize,
    /// Fast-angle samples.
    pub n_theta1: usize,
    /// Fast radii sampled in `[a1, b1]` for the final margin check.
    pub n_radii: usize,
    /// Geometric halvings allowed when shrinking `b1` and `a1`.
    pub shrink_budget: u32,
    /// Required clearance when selecting the twist integer.
    pub nu_margin: f64,
    pub settings: IntegratorSettings,
}

impl Default for TwistGrids {
    fn default() -> Self {
        TwistGrids {
            n_boundary: 16,
            n_theta1: 8,
            n_radii: 4,
            shrink_budget: 40,
            nu_margin: 0.05,
            settings: IntegratorSettings::with_tols(1e-8, 1e-10),
        }
    }
}

impl TwistGrids {
    /// Same grids with all three densities doubled.
    pub fn doubled(&self) -> Self {
        TwistGrids {
            n_boundary: self.n_boundary * 2,
            n_theta1: self.n_theta1 * 2,
            n_radii: self.n_radii * 2,
            ..self.clone()
        }
    }
}

/// The level-line data a twist certification runs against.
#[derive(Debug, Clone)]
pub struct TwistLevels {
    /// The time window: minimal period of the mid level in the normalized
    /// frame.
    pub t_window: f64,
    /// Monotone direction of the period function across the band.
    pub direction: Monotone,
    pub star_center: Point2,
    /// Inner boundary level line (level `c1 < c`).
    pub curve_lo: LevelOrbit,
    /// The mid level line (level `c`).
    pub curve_mid: LevelOrbit,
    /// Outer boundary level line (level `d1 > c`).
    pub curve_hi: LevelOrbit,
}

/// Measured clearances of the four twist inequalities; all strictly positive
/// in a valid certificate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TwistMargins {
    pub rot1_inner: f64,
    pub rot1_outer: f64,
    pub rot2_lo: f64,
    pub rot2_hi: f64,
}

impl TwistMargins {
    pub fn min(&self) -> f64 {
        self.rot1_inner.min(self.rot1_outer).min(self.rot2_lo).min(self.rot2_hi)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridEcho {
    pub n_boundary: usize,
    pub n_theta1: usize,
    pub n_radii: usize,
}

/// A positive twist certificate: on `|w1| = a1` the fast rotation number
/// clears the integer `nu` from one side, on `|w1| = b1` from the other, and
/// the slow rotation number straddles 1 across the two boundary level lines,
/// all measured on the recorded sample grids.
#[derive(Debug, Clone, Serialize)]
pub struct TwistCertificate {
    pub c: f64,
    pub c1: f64,
    pub d1: f64,
    pub a1: f64,
    pub b1: f64,
    pub nu: i64,
    pub sigma: i8,
    /// Extreme fast rotation number on the inner radius (minimum for
    /// `sigma > 0`, maximum for `sigma < 0`).
    pub rot1_inner_extreme: f64,
    /// Extreme fast rotation number on the outer radius (maximum for
    /// `sigma > 0`, minimum for `sigma < 0`).
    pub rot1_outer_extreme: f64,
    pub rot2_lo_range: (f64, f64),
    pub rot2_hi_range: (f64, f64),
    pub margins: TwistMargins,
    pub grids: GridEcho,
    pub t_window: f64,
    pub t_direction: Monotone,
    pub star_center: Point2,
    /// Normalized strengths the certification ran with.
    pub kappa1: f64,
    pub kappa2: f64,
}

/// Fast and slow rotation numbers of the transformed flow from `w` over
/// `[0, t_window]`: continuous-argument increments of `w1` (about the
/// origin) and of `w2` (about the star center), divided by `2 pi`. Requires
/// normalized strengths.
pub fn rotation_pair(
    model: &DomainModel,
    config: &VortexConfig,
    w: &WState,
    t_window: f64,
    star_center: Point2,
    settings: &IntegratorSettings,
) -> Result<(f64, f64)> {
    if !config.is_normalized() {
        return Err(Error::NotNormalized { sum: config.kappa_sum });
    }
    let field = WPairField { model, config };
    let specs = [
        LiftSpec { ix: 0, iy: 1, center: (0.0, 0.0) },
        LiftSpec { ix: 2, iy: 3, center: (star_center.x, star_center.y) },
    ];
    let inc = lift_increments(&field, w.as_array(), t_window, &specs, settings)?;
    Ok((inc[0] / TAU, inc[1] / TAU))
}

/// Fast rotation number over the window; see [`rotation_pair`].
pub fn rot1(
    model: &DomainModel,
    config: &VortexConfig,
    w: &WState,
    t_window: f64,
    star_center: Point2,
    settings: &IntegratorSettings,
) -> Result<f64> {
    rotation_pair(model, config, w, t_window, star_center, settings).map(|r| r.0)
}

/// Slow rotation number over the window; see [`rotation_pair`].
pub fn rot2(
    model: &DomainModel,
    config: &VortexConfig,
    w: &WState,
    t_window: f64,
    star_center: Point2,
    settings: &IntegratorSettings,
) -> Result<f64> {
    rotation_pair(model, config, w, t_window, star_center, settings).map(|r| r.1)
}

fn subsample(curve: &LevelOrbit, n: usize) -> Vec<Point2> {
    let len = curve.samples.len();
    (0..n).map(|i| curve.samples[i * len / n]).collect()
}

fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![b];
    }
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Rotation pairs over the product grid (w2 points) x (theta1) x (radii).
/// `None` marks grid points where the integration failed (left the domain or
/// hit the collision guard); shrink stages treat those as margin failures.
fn rot_grid(
    model: &DomainModel,
    config: &VortexConfig,
    pts: &[Point2],
    radii: &[f64],
    thetas: &[f64],
    t_window: f64,
    star_center: Point2,
    settings: &IntegratorSettings,
) -> Vec<Option<(f64, f64)>> {
    let mut items: Vec<WState> = Vec::with_capacity(pts.len() * radii.len() * thetas.len());
    for pt in pts {
        for &r in radii {
            for &th in thetas {
                items.push(WState::new(Point2::unit(th) * r, *pt));
            }
        }
    }
    par_map(&items, |w| rotation_pair(model, config, w, t_window, star_center, settings).ok())
}

fn fold_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// rot2 margins for both boundary lines at the given radii; `None` when any
/// grid integration failed.
#[allow(clippy::too_many_arguments)]
fn rot2_margins(
    model: &DomainModel,
    config: &VortexConfig,
    lo_pts: &[Point2],
    hi_pts: &[Point2],
    radii: &[f64],
    thetas: &[f64],
    t_window: f64,
    star_center: Point2,
    direction: Monotone,
    settings: &IntegratorSettings,
) -> Option<(f64, f64, (f64, f64), (f64, f64))> {
    let lo = rot_grid(model, config, lo_pts, radii, thetas, t_window, star_center, settings);
    let hi = rot_grid(model, config, hi_pts, radii, thetas, t_window, star_center, settings);
    if lo.iter().chain(hi.iter()).any(Option::is_none) {
        return None;
    }
    let lo_range = fold_range(lo.iter().map(|r| r.unwrap().1));
    let hi_range = fold_range(hi.iter().map(|r| r.unwrap().1));
    // T decreasing: slower-than-window period inside (rot2 < 1 on the inner
    // line), faster outside (rot2 > 1 on the outer line); reversed otherwise
    let (m_lo, m_hi) = match direction {
        Monotone::Decreasing => (1.0 - lo_range.1, hi_range.0 - 1.0),
        Monotone::Increasing => (lo_range.0 - 1.0, 1.0 - hi_range.1),
    };
    Some((m_lo, m_hi, lo_range, hi_range))
}

/// Twist certification against pre-traced level lines. The outer fast radius
/// shrinks geometrically until the slow inequalities hold on the sampled
/// grids, the twist integer is chosen just past the fast rotation numbers on
/// that radius, and the inner radius then shrinks until the fast inequality
/// clears the integer; the returned certificate carries the margins measured
/// on the full grid.
pub fn certify_twist_with_levels(
    model: &DomainModel,
    config: &VortexConfig,
    levels: &TwistLevels,
    trial_b1: f64,
    grids: &TwistGrids,
) -> Result<TwistCertificate> {
    if !(trial_b1 > 0.0) {
        return Err(Error::InvalidInput(format!("trial outer radius must be positive, got {trial_b1}")));
    }
    let cfg = config.normalized();
    let sigma = cfg.sigma;
    let t = levels.t_window;
    let star = levels.star_center;
    let settings = &grids.settings;
    let thetas = theta_grid(grids.n_theta1);
    let lo_pts = subsample(&levels.curve_lo, grids.n_boundary);
    let hi_pts = subsample(&levels.curve_hi, grids.n_boundary);
    let mid_pts = subsample(&levels.curve_mid, grids.n_boundary);
    let all_pts: Vec<Point2> =
        lo_pts.iter().chain(mid_pts.iter()).chain(hi_pts.iter()).copied().collect();

    // Stage 1: shrink the outer radius until the slow inequalities hold.
    let mut b1 = trial_b1;
    let mut best = f64::NEG_INFINITY;
    let mut found_b1 = false;
    for _ in 0..=grids.shrink_budget {
        let probe = [b1, 0.5 * b1];
        match rot2_margins(model, &cfg, &lo_pts, &hi_pts, &probe, &thetas, t, star, levels.direction, settings)
        {
            Some((m_lo, m_hi, _, _)) => {
                let m = m_lo.min(m_hi);
                best = best.max(m);
                if m > 0.0 {
                    found_b1 = true;
                    break;
                }
            }
            None => {}
        }
        b1 *= 0.5;
    }
    if !found_b1 {
        return Err(Error::CannotCertify { stage: TwistStage::Rot2, best_margin: best });
    }

    // Stage 2: pick the twist integer just past the outer fast rotation
    // numbers.
    let outer = rot_grid(model, &cfg, &all_pts, &[b1], &thetas, t, star, settings);
    if outer.iter().any(Option::is_none) {
        return Err(Error::CannotCertify { stage: TwistStage::Nu, best_margin: f64::NEG_INFINITY });
    }
    let outer_rot1: Vec<f64> = outer.iter().map(|r| r.unwrap().0).collect();
    let (outer_min, outer_max) = fold_range(outer_rot1.iter().copied());
    let nu = if sigma > 0 {
        (outer_max + grids.nu_margin).ceil()
    } else {
        (outer_min - grids.nu_margin).floor()
    };
    if !nu.is_finite() {
        return Err(Error::CannotCertify { stage: TwistStage::Nu, best_margin: f64::NEG_INFINITY });
    }
    let nu = nu as i64;
    let nu_f = nu as f64;

    // Stage 3: shrink the inner radius until the fast inequality clears nu,
    // using the pointwise angular-rate bound as a cheap pre-check.
    let mut a1 = 0.5 * b1;
    let mut best_inner = f64::NEG_INFINITY;
    let mut inner_rot1: Vec<f64> = Vec::new();
    let mut found_a1 = false;
    let rate_bound = TAU * nu_f / t;
    for _ in 0..=grids.shrink_budget {
        let mut precheck_ok = true;
        'pre: for pt in &all_pts {
            let (r2, th2) = (pt.norm(), pt.angle());
            for &th1 in &thetas {
                for r in [a1, 0.5 * a1] {
                    match fast_angular_rate(model, &cfg, r, r2, th1, th2) {
                        Ok(f) => {
                            let clears = if sigma > 0 { f > rate_bound } else { f < rate_bound };
                            if !clears {
                                precheck_ok = false;
                                break 'pre;
                            }
                        }
                        Err(_) => {
                            precheck_ok = false;
                            break 'pre;
                        }
                    }
                }
            }
        }
        if precheck_ok {
            let inner = rot_grid(model, &cfg, &all_pts, &[a1], &thetas, t, star, settings);
            if inner.iter().all(Option::is_some) {
                inner_rot1 = inner.iter().map(|r| r.unwrap().0).collect();
                let (inner_min, inner_max) = fold_range(inner_rot1.iter().copied());
                let m = if sigma > 0 { inner_min - nu_f } else { nu_f - inner_max };
                best_inner = best_inner.max(m);
                if m > 0.0 {
                    found_a1 = true;
                    break;
                }
            }
        }
        a1 *= 0.5;
    }
    if !found_a1 {
        return Err(Error::CannotCertify { stage: TwistStage::Rot1, best_margin: best_inner });
    }

    // Stage 4: margins on the full grid.
    let radii = log_spaced(a1, b1, grids.n_radii);
    let full = rot2_margins(
        model, &cfg, &lo_pts, &hi_pts, &radii, &thetas, t, star, levels.direction, settings,
    )
    .ok_or(Error::CannotCertify { stage: TwistStage::Validate, best_margin: f64::NEG_INFINITY })?;
    let (rot2_lo_m, rot2_hi_m, lo_range, hi_range) = full;
    let (inner_min, inner_max) = fold_range(inner_rot1.iter().copied());
    let margins = TwistMargins {
        rot1_inner: if sigma > 0 { inner_min - nu_f } else { nu_f - inner_max },
        rot1_outer: if sigma > 0 { nu_f - outer_max } else { outer_min - nu_f },
        rot2_lo: rot2_lo_m,
        rot2_hi: rot2_hi_m,
    };
    if !(margins.min() > 0.0) {
        return Err(Error::CannotCertify { stage: TwistStage::Validate, best_margin: margins.min() });
    }
    Ok(TwistCertificate {
        c: levels.curve_mid.c,
        c1: levels.curve_lo.c,
        d1: levels.curve_hi.c,
        a1,
        b1,
        nu,
        sigma,
        rot1_inner_extreme: if sigma > 0 { inner_min } else { inner_max },
        rot1_outer_extreme: if sigma > 0 { outer_max } else { outer_min },
        rot2_lo_range: lo_range,
        rot2_hi_range: hi_range,
        margins,
        grids: GridEcho {
            n_boundary: grids.n_boundary,
            n_theta1: grids.n_theta1,
            n_radii: grids.n_radii,
        },
        t_window: t,
        t_direction: levels.direction,
        star_center: star,
        kappa1: cfg.kappa1,
        kappa2: cfg.kappa2,
    })
}

/// Full twist certification on the band `c1 < c < d1` of a positive level
/// certificate: traces the three level lines in the normalized frame and
/// runs [`certify_twist_with_levels`].
pub fn certify_twist(
    model: &DomainModel,
    config: &VortexConfig,
    band: &BandCertificate,
    c1: f64,
    c: f64,
    d1: f64,
    trial_b1: f64,
    grids: &TwistGrids,
) -> Result<TwistCertificate> {
    if !band.positive {
        return Err(Error::InvalidInput(
            "twist certification requires a positive level-band certificate".into(),
        ));
    }
    if !(band.c0 <= c1 && c1 < c && c < d1 && d1 <= band.d0) {
        return Err(Error::InvalidInput(format!(
            "need {} <= c1 < c < d1 <= {} (got c1 = {c1}, c = {c}, d1 = {d1})",
            band.c0, band.d0
        )));
    }
    let direction = band
        .monotone
        .ok_or_else(|| Error::InvalidInput("band certificate has no monotone direction".into()))?;
    let cfg_n = config.normalized();
    let n_curve = (4 * grids.n_boundary).max(64);
    let curve_lo = trace_level(model, &cfg_n, c1, band.star_center, n_curve)?;
    let curve_mid = trace_level(model, &cfg_n, c, band.star_center, n_curve)?;
    let curve_hi = trace_level(model, &cfg_n, d1, band.star_center, n_curve)?;
    let levels = TwistLevels {
        t_window: curve_mid.period,
        direction,
        star_center: band.star_center,
        curve_lo,
        curve_mid,
        curve_hi,
    };
    certify_twist_with_levels(model, config, &levels, trial_b1, grids)
}
