//! Level lines of the Robin function: tracing, the period function of the
//! center-of-vorticity flow, star-shape certification, and the small-level
//! period limit from the Hessian at the minimum.

use crate::domain::DomainModel;
use crate::dynamics::{CenterField, VortexConfig};
use crate::error::{Error, Result};
use crate::flow::{period_by_first_return, IntegratorSettings, LiftSpec};
use crate::geometry::Point2;
use crate::par::par_map;
use serde::Serialize;
use std::f64::consts::TAU;

/// A traced level line `h = c`, star-shaped about `star_center`, together
/// with the minimal period of the level solution running along it.
#[derive(Debug, Clone, Serialize)]
pub struct LevelOrbit {
    pub c: f64,
    /// Closed polyline ordered by ray angle about the star center.
    pub samples: Vec<Point2>,
    /// Ray angles of the samples.
    pub angles: Vec<f64>,
    /// Ray radii of the samples.
    pub radii: Vec<f64>,
    /// Minimal period of the level solution through `samples[0]`.
    pub period: f64,
    pub star_center: Point2,
    /// Minimum over samples of the normalized ray transversality
    /// `<grad h, z - z0> / (|grad h| |z - z0|)`; positive certifies strict
    /// star-shapedness on the sample grid.
    pub star_margin: f64,
    pub winding: i32,
}

const RAY_ROOT_TOL: f64 = 1e-12;

/// Solve `h(center + t e(theta)) = c` for `t > 0` by bracketing and
/// safeguarded Newton-bisection.
fn ray_root(model: &DomainModel, center: Point2, theta: f64, c: f64, warm: Option<f64>) -> Result<f64> {
    let dir = Point2::unit(theta);
    let f = |t: f64| model.eval_h(center + dir * t) - c;
    let inside = |t: f64| model.inside(center + dir * t);
    if !inside(0.0) || f(0.0) >= 0.0 {
        return Err(Error::RayRootNotBracketed { c, theta });
    }
    // expand outward until the level is crossed, halving back toward the
    // domain boundary whenever the probe exits
    let mut t_lo = 0.0;
    let mut t_hi = warm.unwrap_or(0.1 * (1.0 + center.norm()));
    while !inside(t_hi) {
        t_hi *= 0.5;
        if t_hi < 1e-12 {
            return Err(Error::RayRootNotBracketed { c, theta });
        }
    }
    let mut expansions = 0;
    while f(t_hi) < 0.0 {
        t_lo = t_hi;
        let mut next = t_hi * 1.6 + 1e-12;
        let mut shrink = 0;
        while !inside(next) {
            next = 0.5 * (t_hi + next);
            shrink += 1;
            if shrink > 80 {
                return Err(Error::RayRootNotBracketed { c, theta });
            }
        }
        if next - t_hi < 1e-15 * (1.0 + t_hi) {
            return Err(Error::RayRootNotBracketed { c, theta });
        }
        t_hi = next;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::RayRootNotBracketed { c, theta });
        }
    }
    // Newton from the bracket midpoint, falling back to bisection
    let mut t = 0.5 * (t_lo + t_hi);
    for _ in 0..100 {
        let ft = f(t);
        if ft > 0.0 {
            t_hi = t;
        } else {
            t_lo = t;
        }
        if ft.abs() <= RAY_ROOT_TOL * (1.0 + c.abs()) || (t_hi - t_lo) <= 1e-15 * (1.0 + t_hi) {
            return Ok(t);
        }
        let slope = model.grad_h(center + dir * t).dot(dir);
        let newton = if slope != 0.0 { t - ft / slope } else { f64::NAN };
        t = if newton.is_finite() && newton > t_lo && newton < t_hi {
            newton
        } else {
            0.5 * (t_lo + t_hi)
        };
    }
    Ok(t)
}

/// Trace the level line `h = c` by solving for its radius on `n_samples`
/// equispaced rays from `star_center`, then measure the minimal period of the
/// level solution by first return to the starting ray.
pub fn trace_level(
    model: &DomainModel,
    config: &VortexConfig,
    c: f64,
    star_center: Point2,
    n_samples: usize,
) -> Result<LevelOrbit> {
    if n_samples < 8 {
        return Err(Error::InvalidInput(format!("need at least 8 ray samples, got {n_samples}")));
    }
    let mut samples = Vec::with_capacity(n_samples);
    let mut angles = Vec::with_capacity(n_samples);
    let mut radii = Vec::with_capacity(n_samples);
    let mut warm = None;
    let mut star_margin = f64::INFINITY;
    let mut min_speed = f64::INFINITY;
    for i in 0..n_samples {
        let theta = TAU * i as f64 / n_samples as f64;
        let r = ray_root(model, star_center, theta, c, warm)?;
        warm = Some(r);
        let z = star_center + Point2::unit(theta) * r;
        let grad = model.grad_h(z);
        let gn = grad.norm();
        if gn < 1e-10 {
            return Err(Error::GradientVanishes { norm: gn });
        }
        // ray transversality of the level tangent J grad h equals the
        // normalized radial component of grad h
        let margin = grad.dot(z - star_center) / (gn * r);
        star_margin = star_margin.min(margin);
        min_speed = min_speed.min(config.kappa_sum.abs() * gn);
        samples.push(z);
        angles.push(theta);
        radii.push(r);
    }
    // winding of the sample polygon about the star center
    let mut winding = 0.0;
    for i in 0..n_samples {
        let a = samples[i] - star_center;
        let b = samples[(i + 1) % n_samples] - star_center;
        winding += (a.cross(b)).atan2(a.dot(b));
    }
    let winding = (winding / TAU).round() as i32;

    // first return of the level solution to the starting ray
    let perimeter: f64 = (0..n_samples)
        .map(|i| (samples[(i + 1) % n_samples] - samples[i]).norm())
        .sum();
    let t_max = 8.0 * perimeter / min_speed;
    let field = CenterField { model, kappa_sum: config.kappa_sum };
    let spec = LiftSpec { ix: 0, iy: 1, center: (star_center.x, star_center.y) };
    let settings = IntegratorSettings::default();
    let period = period_by_first_return(&field, [samples[0].x, samples[0].y], spec, t_max, &settings)?;

    Ok(LevelOrbit { c, samples, angles, radii, period, star_center, star_margin, winding })
}

/// Monotone direction of the period function across a level grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotone {
    Increasing,
    Decreasing,
}

/// The period function sampled on a grid of levels.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodSeries {
    /// `(c, T(c))` pairs in grid order.
    pub points: Vec<(f64, f64)>,
    /// Strict monotone direction, if any (differences all of one sign and
    /// larger than 1e-10 in magnitude).
    pub monotone: Option<Monotone>,
}

fn monotone_direction(values: &[f64]) -> Option<Monotone> {
    if values.len() < 2 {
        return None;
    }
    let mut dir: Option<Monotone> = None;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= 1e-10 {
            return None;
        }
        let this = if d > 0.0 { Monotone::Increasing } else { Monotone::Decreasing };
        match dir {
            None => dir = Some(this),
            Some(prev) if prev != this => return None,
            _ => {}
        }
    }
    dir
}

/// Period function on a strictly increasing grid of levels, star center at
/// the harmonic center found from `seed`.
pub fn period_function(
    model: &DomainModel,
    config: &VortexConfig,
    c_grid: &[f64],
    n_samples: usize,
    seed: Point2,
) -> Result<PeriodSeries> {
    let center = crate::domain::harmonic_center(model, seed, 1e-10)?;
    period_function_from(model, config, center.z0, c_grid, n_samples)
}

/// Period function with an explicit star center.
pub fn period_function_from(
    model: &DomainModel,
    config: &VortexConfig,
    star_center: Point2,
    c_grid: &[f64],
    n_samples: usize,
) -> Result<PeriodSeries> {
    if c_grid.len() < 2 {
        return Err(Error::InvalidInput("period function needs at least two levels".into()));
    }
    if c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("level grid must be strictly increasing".into()));
    }
    let traced: Vec<Result<LevelOrbit>> =
        par_map(c_grid, |&c| trace_level(model, config, c, star_center, n_samples));
    let mut points = Vec::with_capacity(c_grid.len());
    for orbit in traced {
        let orbit = orbit?;
        points.push((orbit.c, orbit.period));
    }
    let periods: Vec<f64> = points.iter().map(|p| p.1).collect();
    Ok(PeriodSeries { points, monotone: monotone_direction(&periods) })
}

/// Limit of the period function at a non-degenerate minimum `z0` of `h`:
/// `2 pi / (|k1 + k2| sqrt(det hess h(z0)))`.
pub fn hessian_period_limit(model: &DomainModel, config: &VortexConfig, z0: Point2) -> Result<f64> {
    let hess = model.hess_h(z0);
    let det = hess[(0, 0)] * hess[(1, 1)] - hess[(0, 1)] * hess[(1, 0)];
    if !(det > 0.0) || !(hess[(0, 0)] + hess[(1, 1)] > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(TAU / (config.kappa_sum.abs() * det.sqrt()))
}

/// Grid parameters for the level-band certificate.
#[derive(Debug, Clone)]
pub struct BandGrid {
    pub levels: Vec<f64>,
    pub n_samples: usize,
    pub margin_floor: f64,
}

impl BandGrid {
    /// Equispaced levels spanning `[c0, d0]`.
    pub fn linspace(c0: f64, d0: f64, n_levels: usize, n_samples: usize) -> Self {
        let levels = (0..n_levels)
            .map(|i| c0 + (d0 - c0) * i as f64 / (n_levels - 1) as f64)
            .collect();
        BandGrid { levels, n_samples, margin_floor: 1e-3 }
    }
}

/// Certificate that on `[c0, d0]` the level lines are strictly star-shaped
/// about the star center and the period function is strictly monotone, both
/// sampled on the recorded grid.
#[derive(Debug, Clone, Serialize)]
pub struct BandCertificate {
    pub c0: f64,
    pub d0: f64,
    pub c: f64,
    pub grid: Vec<f64>,
    #[serde(rename = "T")]
    pub t_values: Vec<f64>,
    pub star_margin: Vec<f64>,
    pub monotone: Option<Monotone>,
    pub min_margin: f64,
    pub margin_floor: f64,
    pub positive: bool,
    pub star_center: Point2,
    #[serde(skip)]
    pub orbits: Vec<LevelOrbit>,
}

/// Trace all grid levels and certify star-shapedness plus strict period
/// monotonicity across the band `c0 < c < d0`.
pub fn certify_band(
    model: &DomainModel,
    config: &VortexConfig,
    c: f64,
    c0: f64,
    d0: f64,
    star_center: Point2,
    grid: &BandGrid,
) -> Result<BandCertificate> {
    if !(c0 < c && c < d0) {
        return Err(Error::InvalidInput(format!("need c0 < c < d0, got {c0}, {c}, {d0}")));
    }
    if grid.levels.iter().any(|&l| l < c0 - 1e-12 || l > d0 + 1e-12) {
        return Err(Error::InvalidInput("band grid levels must lie within [c0, d0]".into()));
    }
    let traced: Vec<Result<LevelOrbit>> =
        par_map(&grid.levels, |&l| trace_level(model, config, l, star_center, grid.n_samples));
    let mut orbits = Vec::with_capacity(traced.len());
    for orbit in traced {
        orbits.push(orbit?);
    }
    let t_values: Vec<f64> = orbits.iter().map(|o| o.period).collect();
    let star_margin: Vec<f64> = orbits.iter().map(|o| o.star_margin).collect();
    let min_margin = star_margin.iter().copied().fold(f64::INFINITY, f64::min);
    let monotone = monotone_direction(&t_values);
    let windings_ok = orbits.iter().all(|o| o.winding == 1);
    let positive = min_margin > grid.margin_floor && monotone.is_some() && windings_ok;
    Ok(BandCertificate {
        c0,
        d0,
        c,
        grid: grid.levels.clone(),
        t_values,
        star_margin,
        monotone,
        min_margin,
        margin_floor: grid.margin_floor,
        positive,
        star_center,
        orbits,
    })
}

/// Interpolated period of the mid level `c` from a traced orbit at exactly
/// that level, tracing it if the grid did not include it.
pub fn level_orbit_at(
    model: &DomainModel,
    config: &VortexConfig,
    cert: &BandCertificate,
    c: f64,
    n_samples: usize,
) -> Result<LevelOrbit> {
    if let Some(orbit) = cert.orbits.iter().find(|o| (o.c - c).abs() <= 1e-14 * (1.0 + c.abs())) {
        return Ok(orbit.clone());
    }
    trace_level(model, config, c, cert.star_center, n_samples)
}
