//! Periodic pair solutions: seeding from a twist certificate, Gauss-Newton
//! shooting with a phase condition, action evaluation, family sweeps indexed
//! by the fast rotation number, and verification of the family asymptotics.

use crate::domain::DomainModel;
use crate::dynamics::{eval_h_w, from_w, w_field, VortexConfig, WPairField, WState};
use crate::error::{Error, Result};
use crate::flow::{flow_map, integrate, lift_angles, IntegratorSettings, Trajectory};
use crate::geometry::Point2;
use crate::levelset::{trace_level, LevelOrbit};
use crate::par::par_map;
use crate::twist::TwistCertificate;
use nalgebra::{SMatrix, SVector};
use serde::Serialize;
use std::f64::consts::{PI, TAU};

/// Gauss-Newton shooting parameters.
#[derive(Debug, Clone)]
pub struct ShootingSettings {
    /// Convergence threshold on `|flow_map(w, T) - w|`.
    pub tol: f64,
    pub max_iters: u32,
    pub max_halvings: u32,
    pub integrator: IntegratorSettings,
}

impl Default for ShootingSettings {
    fn default() -> Self {
        ShootingSettings {
            tol: 1e-9,
            max_iters: 30,
            max_halvings: 8,
            integrator: IntegratorSettings::with_tols(1e-11, 1e-13),
        }
    }
}

/// Sampled series along a converged orbit (in the normalized frame).
#[derive(Debug, Clone, Serialize)]
pub struct OrbitDiagnostics {
    pub times: Vec<f64>,
    /// Slow component `w2(t)` (the center of vorticity).
    pub center: Vec<Point2>,
    /// Physical difference `z1(t) - z2(t)`.
    pub difference: Vec<Point2>,
    /// Continuous lift of the fast angle.
    pub theta_fast: Vec<f64>,
    /// `|w1(0)|^2` times the instantaneous fast angular rate.
    pub fast_rate_scaled: Vec<f64>,
    /// Hamiltonian along the sampled states.
    pub energy: Vec<f64>,
    /// Range of `h(w2(t))` (confinement within the level band).
    pub h_w2_min: f64,
    pub h_w2_max: f64,
}

/// A refined periodic solution of the transformed system with its residual,
/// conserved-quantity drift, rotation indices, action value, and sampled
/// diagnostic series.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodicOrbit {
    pub kappa1: f64,
    pub kappa2: f64,
    pub c: f64,
    pub period: f64,
    pub w0: WState,
    pub residual: f64,
    pub iterations: u32,
    /// Max Hamiltonian deviation over the orbit, relative to `1 + |H(0)|`.
    pub energy_drift: f64,
    /// Fast rotation number over one period (an integer on a closed orbit).
    pub nu_measured: i64,
    /// Slow winding number over one period.
    pub center_winding: i64,
    /// Initial separation of the two vortices `|z1(0) - z2(0)|`.
    pub d0: f64,
    /// Initial fast radius `|w1(0)|`; the asymptotic rate and rotation-number
    /// statements are exact in this variable.
    pub fast_radius0: f64,
    pub action: f64,
    /// Minimum over p in 2..=12 of `|flow_map(w0, T/p) - w0|`.
    pub min_subperiod_gap: f64,
    pub diagnostics: OrbitDiagnostics,
}

impl PeriodicOrbit {
    /// Copy with the diagnostic series decimated to at most `max_rows`
    /// samples (for serialization).
    pub fn downsampled(&self, max_rows: usize) -> PeriodicOrbit {
        let n = self.diagnostics.times.len();
        if n <= max_rows || max_rows == 0 {
            return self.clone();
        }
        let stride = n.div_ceil(max_rows);
        let pick = |v: &Vec<f64>| v.iter().copied().step_by(stride).collect::<Vec<_>>();
        let pick_p = |v: &Vec<Point2>| v.iter().copied().step_by(stride).collect::<Vec<_>>();
        let d = &self.diagnostics;
        PeriodicOrbit {
            diagnostics: OrbitDiagnostics {
                times: pick(&d.times),
                center: pick_p(&d.center),
                difference: pick_p(&d.difference),
                theta_fast: pick(&d.theta_fast),
                fast_rate_scaled: pick(&d.fast_rate_scaled),
                energy: pick(&d.energy),
                h_w2_min: d.h_w2_min,
                h_w2_max: d.h_w2_max,
            },
            ..self.clone()
        }
    }
}

/// Initial state for the orbit with fast rotation index `nu`, built from the
/// asymptotic superposition: slow component on the mid level line, fast
/// radius solving `|k1 k2| T / (2 pi^2 |w1|^2) = |nu|`. One measurement of
/// the actual rotation number calibrates the constant offset of that
/// relation, so the refined radius starts inside the basin of the intended
/// index.
pub fn seed_orbit(
    model: &DomainModel,
    config: &VortexConfig,
    cert: &TwistCertificate,
    nu: i64,
) -> Result<WState> {
    if nu == 0 || nu.signum() != cert.nu.signum() || nu.abs() < cert.nu.abs() {
        return Err(Error::InvalidInput(format!(
            "seed index must have the certified sign and at least the certified magnitude {}; got {nu}",
            cert.nu
        )));
    }
    let cfg = config.normalized();
    let sigma = cfg.sigma as f64;
    let lead = cfg.kappa_product().abs() * cert.t_window / (2.0 * PI * PI);
    let r1 = (lead / nu.abs() as f64).sqrt();
    if !(r1 > 0.0 && r1 < cert.b1) {
        return Err(Error::SeparationOutOfRange { r1, b1: cert.b1 });
    }
    let curve = trace_level(model, &cfg, cert.c, cert.star_center, 32)?;
    let w2 = curve.samples[0];

    // rot1(R) = sigma * lead / R^2 + b up to higher order; measure b once
    let probe = WState::new(Point2::new(r1, 0.0), w2);
    let settings = IntegratorSettings::with_tols(1e-9, 1e-11);
    let (rot1, _) =
        crate::twist::rotation_pair(model, &cfg, &probe, cert.t_window, cert.star_center, &settings)?;
    let offset = rot1 - sigma * lead / (r1 * r1);
    let denom = sigma * (nu as f64 - offset);
    let r1 = if denom > 0.0 { (lead / denom).sqrt() } else { r1 };
    if !(r1 > 0.0 && r1 < cert.b1) {
        return Err(Error::SeparationOutOfRange { r1, b1: cert.b1 });
    }
    Ok(WState::new(Point2::new(r1, 0.0), w2))
}

/// Pinning rows of the bordered system: the flow direction at the anchor
/// (removes time translation) and, on rotation-symmetric domains, the rigid
/// rotation direction (removes the second unit multiplier of the time-T
/// map). Rows are normalized; the rotation row is zero when unused.
struct PhaseRows {
    anchor: [f64; 4],
    rows: [[f64; 4]; 2],
}

impl PhaseRows {
    fn new(model: &DomainModel, config: &VortexConfig, anchor: &WState) -> Result<PhaseRows> {
        let (v1, v2) = w_field(model, config, anchor)?;
        let mut flow_row = [v1.x, v1.y, v2.x, v2.y];
        let n = flow_row.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut flow_row {
            *x /= n;
        }
        let mut rot_row = [0.0; 4];
        if model.is_rotation_symmetric() {
            rot_row = [-anchor.w1.y, anchor.w1.x, -anchor.w2.y, anchor.w2.x];
            let n = rot_row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                for x in &mut rot_row {
                    *x /= n;
                }
            }
        }
        Ok(PhaseRows { anchor: anchor.as_array(), rows: [flow_row, rot_row] })
    }

    fn residuals(&self, y: &[f64; 4]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, row) in self.rows.iter().enumerate() {
            out[k] = (0..4).map(|i| (y[i] - self.anchor[i]) * row[i]).sum();
        }
        out
    }
}

/// Residual of the periodicity system: the 4 components of
/// `flow_map(w, T) - w` followed by the phase conditions.
fn shooting_residual(
    field: &WPairField,
    y: &[f64; 4],
    t: f64,
    phases: &PhaseRows,
    settings: &IntegratorSettings,
) -> Result<(SVector<f64, 6>, f64)> {
    let fy = flow_map(field, *y, t, settings)?;
    let mut g = SVector::<f64, 6>::zeros();
    let mut norm_f = 0.0;
    for i in 0..4 {
        g[i] = fy[i] - y[i];
        norm_f += g[i] * g[i];
    }
    let ph = phases.residuals(y);
    g[4] = ph[0];
    g[5] = ph[1];
    Ok((g, norm_f.sqrt()))
}

/// Finite-difference Jacobian of the time-`t` map with steps small enough
/// that the fast phase moves by well under a radian per probe.
fn shooting_jacobian(
    field: &WPairField,
    y: &[f64; 4],
    t: f64,
    settings: &IntegratorSettings,
) -> Result<SMatrix<f64, 4, 4>> {
    let w = WState::from_array(y);
    let r1 = w.w1.norm();
    let (dw1, _) = w_field(field.model, field.config, &w)?;
    let turns = (w.w1.cross(dw1) / w.w1.norm_sq() * t / TAU).abs().max(1.0);
    let fast_step = (0.05 * r1 / (4.0 * PI * turns)).max(1e-12);
    let steps = [fast_step, fast_step, 1e-6 * (1.0 + y[2].abs()), 1e-6 * (1.0 + y[3].abs())];
    let mut jac = SMatrix::<f64, 4, 4>::zeros();
    for j in 0..4 {
        let mut yp = *y;
        yp[j] += steps[j];
        let mut ym = *y;
        ym[j] -= steps[j];
        let fp = flow_map(field, yp, t, settings)?;
        let fm = flow_map(field, ym, t, settings)?;
        for i in 0..4 {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * steps[j]);
        }
    }
    Ok(jac)
}

/// Refine a guess into a `t_period`-periodic solution by damped Gauss-Newton
/// on the bordered system (periodicity residual plus phase conditions that
/// remove the time-translation direction and, on rotation-symmetric domains,
/// the rigid-rotation direction).
pub fn refine_orbit(
    model: &DomainModel,
    config: &VortexConfig,
    guess: &WState,
    t_period: f64,
    c: f64,
    star_center: Point2,
    shoot: &ShootingSettings,
) -> Result<PeriodicOrbit> {
    let cfg = config.normalized();
    let field = WPairField { model, config: &cfg };
    let phases = PhaseRows::new(model, &cfg, guess)?;
    let settings = &shoot.integrator;

    let mut y = guess.as_array();
    let (mut g, mut resid) = shooting_residual(&field, &y, t_period, &phases, settings)?;
    let mut iterations = 0u32;
    while resid > shoot.tol {
        if iterations >= shoot.max_iters {
            return Err(Error::ShootingBudgetExceeded { iterations, residual: resid });
        }
        iterations += 1;
        let m = shooting_jacobian(&field, &y, t_period, settings)?;
        let mut j6 = SMatrix::<f64, 6, 4>::zeros();
        for i in 0..4 {
            for jj in 0..4 {
                j6[(i, jj)] = m[(i, jj)] - if i == jj { 1.0 } else { 0.0 };
            }
        }
        for jj in 0..4 {
            j6[(4, jj)] = phases.rows[0][jj];
            j6[(5, jj)] = phases.rows[1][jj];
        }
        let svd = j6.svd(true, true);
        let (sv_max, sv_min) = (svd.singular_values.max(), svd.singular_values.min());
        if !(sv_min > 1e-12 * sv_max) {
            return Err(Error::SingularJacobian);
        }
        // rank-truncated least squares keeps noise out of near-null directions
        let delta = svd.solve(&(-g), 1e-10 * sv_max).map_err(|_| Error::SingularJacobian)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        let g_norm = g.norm();
        for _ in 0..=shoot.max_halvings {
            let mut trial = y;
            for i in 0..4 {
                trial[i] += lambda * delta[i];
            }
            if let Ok((gt, rt)) = shooting_residual(&field, &trial, t_period, &phases, settings) {
                if gt.norm() < g_norm {
                    y = trial;
                    g = gt;
                    resid = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoDecrease { halvings: shoot.max_halvings, residual: resid });
        }
    }

    assemble_orbit(model, &cfg, WState::from_array(&y), t_period, c, star_center, resid, iterations, shoot)
}

#[allow(clippy::too_many_arguments)]
fn assemble_orbit(
    model: &DomainModel,
    cfg: &VortexConfig,
    w0: WState,
    t_period: f64,
    c: f64,
    star_center: Point2,
    residual: f64,
    iterations: u32,
    shoot: &ShootingSettings,
) -> Result<PeriodicOrbit> {
    let field = WPairField { model, config: cfg };
    let settings = &shoot.integrator;
    let traj = integrate(&field, w0.as_array(), t_period, settings)?;
    let (fast_lift, slow_lift) = lift_angles(&traj, (star_center.x, star_center.y))?;
    let nu_measured = (fast_lift.total() / TAU).round() as i64;
    let center_winding = (slow_lift.total() / TAU).round() as i64;

    let h0 = eval_h_w(model, cfg, &w0)?;
    let energy_drift = traj.drift(|s| eval_h_w(model, cfg, &WState::from_array(s)).unwrap_or(f64::NAN))
        / (1.0 + h0.abs());

    let mut min_gap = f64::INFINITY;
    for p in 2..=12u32 {
        let hit = flow_map(&field, w0.as_array(), t_period / p as f64, settings)?;
        let mut gap = 0.0;
        for i in 0..4 {
            gap += (hit[i] - w0.as_array()[i]).powi(2);
        }
        min_gap = min_gap.min(gap.sqrt());
    }

    let action = action_of_trajectory(model, cfg, &traj, 1)?;
    let r1_0 = w0.w1.norm();

    // diagnostic series on the lift sampling, decimated to roughly a dozen
    // samples per fast turn
    let n_lift = fast_lift.times.len();
    let target = ((nu_measured.unsigned_abs() as usize) * 14).clamp(2000, 400_000).min(n_lift);
    let stride = (n_lift / target).max(1);
    let mut times = Vec::new();
    let mut center = Vec::new();
    let mut difference = Vec::new();
    let mut theta_fast = Vec::new();
    let mut fast_rate_scaled = Vec::new();
    let mut energy = Vec::new();
    let (mut h_min, mut h_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for idx in (0..n_lift).step_by(stride) {
        let t = fast_lift.times[idx];
        let y = traj.sample(t);
        let w = WState::from_array(&y);
        let state = from_w(cfg, &w);
        let (dw1, _) = w_field(model, cfg, &w)?;
        let rate = w.w1.cross(dw1) / w.w1.norm_sq();
        times.push(t);
        center.push(w.w2);
        difference.push(state.z1 - state.z2);
        theta_fast.push(fast_lift.values[idx]);
        fast_rate_scaled.push(r1_0 * r1_0 * rate);
        energy.push(eval_h_w(model, cfg, &w)?);
        let hw2 = model.eval_h(w.w2);
        h_min = h_min.min(hw2);
        h_max = h_max.max(hw2);
    }

    Ok(PeriodicOrbit {
        kappa1: cfg.kappa1,
        kappa2: cfg.kappa2,
        c,
        period: t_period,
        w0,
        residual,
        iterations,
        energy_drift,
        nu_measured,
        center_winding,
        d0: from_w(cfg, &w0).separation(),
        fast_radius0: r1_0,
        action,
        min_subperiod_gap: min_gap,
        diagnostics: OrbitDiagnostics {
            times,
            center,
            difference,
            theta_fast,
            fast_rate_scaled,
            energy,
            h_w2_min: h_min,
            h_w2_max: h_max,
        },
    })
}

const GL4_NODES: [f64; 4] = [
    0.06943184420297371,
    0.33000947820757187,
    0.6699905217924281,
    0.9305681557970262,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.17392742256872692,
    0.32607257743127305,
    0.32607257743127305,
    0.17392742256872692,
];

/// Action functional along a stored trajectory,
/// `A = 1/2 sum_j int k_j <dz_j/dt, J z_j> dt - int H dt`,
/// by Gauss quadrature of the dense interpolant (velocities from the
/// interpolant derivative). `subdiv` splits each integrator step into that
/// many quadrature panels; doubling it refines the quadrature.
pub fn action_of_trajectory(
    model: &DomainModel,
    config: &VortexConfig,
    traj: &Trajectory<4>,
    subdiv: usize,
) -> Result<f64> {
    let subdiv = subdiv.max(1);
    let mut total = 0.0;
    for step in traj.steps() {
        for k in 0..subdiv {
            let t_lo = step.t0 + step.h * k as f64 / subdiv as f64;
            let width = step.h / subdiv as f64;
            for (node, weight) in GL4_NODES.iter().zip(GL4_WEIGHTS) {
                let t = t_lo + width * node;
                let y = step.eval(t);
                let dy = step.eval_deriv(t);
                let w = WState::from_array(&y);
                let state = from_w(config, &w);
                // the transform is linear, so velocities map the same way
                let vel = from_w(config, &WState::from_array(&dy));
                let kin = 0.5
                    * (config.kappa1 * vel.z1.dot(state.z1.jay())
                        + config.kappa2 * vel.z2.dot(state.z2.jay()));
                let h = eval_h_w(model, config, &w)?;
                total += weight * width * (kin - h);
            }
        }
    }
    Ok(total)
}

/// Outcome of a family sweep over fast rotation indices.
#[derive(Debug, Serialize)]
pub struct FamilyReport {
    pub orbits: Vec<PeriodicOrbit>,
    /// `(nu, error message)` for members that failed to converge.
    pub failures: Vec<(i64, String)>,
}

/// Seed and refine one orbit per entry of `nu_list` (members run in
/// parallel); failures are recorded and the sweep continues.
pub fn sweep_family(
    model: &DomainModel,
    config: &VortexConfig,
    cert: &TwistCertificate,
    nu_list: &[i64],
    shoot: &ShootingSettings,
) -> FamilyReport {
    let results: Vec<(i64, Result<PeriodicOrbit>)> = par_map(nu_list, |&nu| {
        let run = seed_orbit(model, config, cert, nu).and_then(|seed| {
            refine_orbit(model, config, &seed, cert.t_window, cert.c, cert.star_center, shoot)
        });
        (nu, run)
    });
    let mut orbits = Vec::new();
    let mut failures = Vec::new();
    for (nu, r) in results {
        match r {
            Ok(orbit) => orbits.push(orbit),
            Err(e) => failures.push((nu, e.to_string())),
        }
    }
    FamilyReport { orbits, failures }
}

/// Per-orbit measurements and the derived pass/fail flags for the family
/// asymptotics.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyVerification {
    pub nu: Vec<i64>,
    pub fast_radius0: Vec<f64>,
    /// Phase-aligned sup-norm distance of the center series from the level
    /// solution.
    pub center_sup_errors: Vec<f64>,
    /// sup over the period of the physical separation `|z1 - z2|`.
    pub separation_sups: Vec<f64>,
    /// max over the period of `| |w1(0)|^2 theta1_dot - k1 k2 / pi |`.
    pub fast_rate_errors: Vec<f64>,
    pub actions: Vec<f64>,
    pub center_decreasing: bool,
    pub separation_decreasing: bool,
    pub center_final_third: bool,
    pub separation_final_third: bool,
    pub fast_rate_decreasing: bool,
    /// Final fast-rate error at most 5 percent of `|k1 k2| / pi`.
    pub fast_rate_final_ok: bool,
    /// Tail of the action sequence monotone with the divergence sign
    /// opposite to `sgn(k1 k2)`.
    pub action_tail_ok: bool,
    /// max deviation of the rescaled fast radius from 1 over the capped
    /// window for the smallest orbit.
    pub circle_error: f64,
    pub circle_ok: bool,
    /// Relative gap between |nu| and the leading rotation-number formula at
    /// the smallest orbit.
    pub rot1_leading_rel_err: f64,
    pub rot1_leading_ok: bool,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Verify the family asymptotics against the traced mid level line: the
/// center series converges to the level solution, the separation shrinks,
/// the scaled fast rate approaches `k1 k2 / pi`, the action tail diverges
/// opposite to the sign of `k1 k2`, and the rescaled fast variable stays on
/// the unit circle over the capped fast window.
pub fn verify_family(
    model: &DomainModel,
    config: &VortexConfig,
    orbits: &[PeriodicOrbit],
    level: &LevelOrbit,
) -> Result<FamilyVerification> {
    if orbits.len() < 3 {
        return Err(Error::InsufficientFamily { required: 3, got: orbits.len() });
    }
    let cfg = config.normalized();
    let mut sorted: Vec<&PeriodicOrbit> = orbits.iter().collect();
    sorted.sort_by_key(|o| o.nu_measured.abs());
    let t_period = sorted[0].period;

    // reference level solution over one period with dense output
    let zfield = crate::dynamics::CenterField { model, kappa_sum: cfg.kappa_sum };
    let z0 = level.samples[0];
    let settings = IntegratorSettings::default();
    let ztraj = integrate(&zfield, [z0.x, z0.y], t_period, &settings)?;

    let mut nu = Vec::new();
    let mut fast_radius0 = Vec::new();
    let mut center_sup_errors = Vec::new();
    let mut separation_sups = Vec::new();
    let mut fast_rate_errors = Vec::new();
    let mut actions = Vec::new();
    let kk = cfg.kappa_product();
    for orbit in &sorted {
        nu.push(orbit.nu_measured);
        fast_radius0.push(orbit.fast_radius0);
        actions.push(orbit.action);
        let d = &orbit.diagnostics;

        // phase alignment: golden-section refine around the best grid sample
        let c0 = d.center[0];
        let m = 4096;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..m {
            let s = t_period * i as f64 / m as f64;
            let zs = ztraj.sample(s);
            let dist = (c0 - Point2::new(zs[0], zs[1])).norm_sq();
            if dist < best.0 {
                best = (dist, s);
            }
        }
        let dist_at = |s: f64| {
            let s = s.rem_euclid(t_period);
            let zs = ztraj.sample(s);
            (c0 - Point2::new(zs[0], zs[1])).norm_sq()
        };
        let (mut lo, mut hi) = (best.1 - t_period / m as f64, best.1 + t_period / m as f64);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
        let (mut f1, mut f2) = (dist_at(x1), dist_at(x2));
        for _ in 0..60 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = dist_at(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = dist_at(x2);
            }
        }
        let s_star = 0.5 * (lo + hi);

        let mut sup_center: f64 = 0.0;
        let mut sup_sep: f64 = 0.0;
        let mut sup_rate: f64 = 0.0;
        for (i, &t) in d.times.iter().enumerate() {
            let zs = ztraj.sample((t + s_star).rem_euclid(t_period));
            sup_center = sup_center.max((d.center[i] - Point2::new(zs[0], zs[1])).norm());
            sup_sep = sup_sep.max(d.difference[i].norm());
            sup_rate = sup_rate.max((d.fast_rate_scaled[i] - kk / PI).abs());
        }
        center_sup_errors.push(sup_center);
        separation_sups.push(sup_sep);
        fast_rate_errors.push(sup_rate);
    }

    // rescaled fast variable of the smallest orbit over at most ten fast
    // turns: |u(s)| = |w1(t)| / |w1(0)| must hug 1
    let smallest = sorted[sorted.len() - 1];
    let r0 = smallest.fast_radius0;
    let t_cap = t_period.min(10.0 * TAU * PI * r0 * r0 / kk.abs());
    let sfield = WPairField { model, config: &cfg };
    let straj = integrate(&sfield, smallest.w0.as_array(), t_cap, &IntegratorSettings::with_tols(1e-11, 1e-13))?;
    let mut circle_error: f64 = 0.0;
    let n_probe = 4000;
    for i in 0..=n_probe {
        let t = t_cap * i as f64 / n_probe as f64;
        let y = straj.sample(t);
        let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
        circle_error = circle_error.max((r / r0 - 1.0).abs());
    }
    let _ = &sfield;

    let lead = kk.abs() * t_period / (2.0 * PI * PI * r0 * r0);
    let rot1_leading_rel_err = (smallest.nu_measured.abs() as f64 - lead).abs() / lead;

    let sigma = if kk > 0.0 { 1.0 } else { -1.0 };
    let n = actions.len();
    let action_tail_ok = (n - 2..n)
        .map(|i| actions[i] - actions[i - 1])
        .all(|d| d.signum() == -sigma && d != 0.0);

    let ratio_third = |v: &Vec<f64>| v[v.len() - 1] <= v[0] / 3.0;
    Ok(FamilyVerification {
        nu,
        fast_radius0,
        center_decreasing: strictly_decreasing(&center_sup_errors),
        separation_decreasing: strictly_decreasing(&separation_sups),
        center_final_third: ratio_third(&center_sup_errors),
        separation_final_third: ratio_third(&separation_sups),
        fast_rate_decreasing: strictly_decreasing(&fast_rate_errors),
        fast_rate_final_ok: *fast_rate_errors.last().unwrap() <= 0.05 * kk.abs() / PI,
        action_tail_ok,
        circle_error,
        circle_ok: circle_error <= 0.05,
        rot1_leading_rel_err,
        rot1_leading_ok: rot1_leading_rel_err <= 0.02,
        center_sup_errors,
        separation_sups,
        fast_rate_errors,
        actions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::UserModel;
    use approx::assert_relative_eq;

    fn zero_g() -> DomainModel {
        DomainModel::user(UserModel::new(|_, _| 0.0).with_grad1(|_, _| Point2::ZERO).with_grad_h(|_| Point2::ZERO))
    }

    #[test]
    fn exact_periodic_input_returns_unchanged() {
        // with g == 0 the fast pair is exactly periodic with period
        // 2 pi^2 R^2 / |k1 k2| (normalized strengths)
        let model = zero_g();
        let cfg = VortexConfig::new(0.5, 0.5).unwrap();
        let r = 0.07;
        let t = 2.0 * PI * PI * r * r / 0.25;
        let exact = WState::new(Point2::new(r, 0.0), Point2::new(0.3, -0.2));
        let shoot = ShootingSettings::default();
        let orbit = refine_orbit(&model, &cfg, &exact, t, 0.0, Point2::ZERO, &shoot).unwrap();
        assert_eq!(orbit.iterations, 0, "exact input needs no iterations");
        assert!(orbit.residual <= shoot.tol);
        assert_eq!(orbit.nu_measured, 1);
        assert_eq!(orbit.w0, exact);
    }

    #[test]
    fn degenerate_slow_component_reports_singular_jacobian() {
        // g == 0 leaves the slow component entirely free, so the bordered
        // shooting system is rank deficient once an actual step is needed
        let model = zero_g();
        let cfg = VortexConfig::new(0.5, 0.5).unwrap();
        let r = 0.07;
        let t = 2.0 * PI * PI * r * r / 0.25;
        let mut perturbed = WState::new(Point2::new(r, 0.0), Point2::new(0.3, -0.2));
        perturbed.w1.x += 1e-3;
        let shoot = ShootingSettings::default();
        match refine_orbit(&model, &cfg, &perturbed, t, 0.0, Point2::ZERO, &shoot) {
            Err(Error::SingularJacobian) => {}
            other => panic!("expected SingularJacobian, got {other:?}"),
        }
    }

    #[test]
    fn action_of_constant_trajectory_is_minus_t_times_h() {
        let disk = DomainModel::unit_disk();
        let cfg = VortexConfig::new(0.5, 0.5).unwrap();
        let w = WState::new(Point2::new(0.2, 0.0), Point2::new(0.3, 0.1));
        let t_end = 2.5;
        let traj = Trajectory::constant(w.as_array(), t_end);
        let a = action_of_trajectory(&disk, &cfg, &traj, 1).unwrap();
        let h = eval_h_w(&disk, &cfg, &w).unwrap();
        assert_relative_eq!(a, -t_end * h, max_relative = 1e-12);
    }

    #[test]
    fn action_quadrature_refinement_is_stable() {
        let disk = DomainModel::unit_disk();
        let cfg = VortexConfig::new(0.5, 0.5).unwrap();
        let field = WPairField { model: &disk, config: &cfg };
        let w0 = WState::new(Point2::new(0.05, 0.0), Point2::new(0.5, 0.0));
        let traj = integrate(&field, w0.as_array(), 1.0, &IntegratorSettings::default()).unwrap();
        let a1 = action_of_trajectory(&disk, &cfg, &traj, 1).unwrap();
        let a2 = action_of_trajectory(&disk, &cfg, &traj, 2).unwrap();
        assert!((a2 - a1).abs() <= 1e-8 * a1.abs().max(1.0), "{a1} vs {a2}");
    }

    #[test]
    fn seed_rejects_wrong_indices() {
        let cert = TwistCertificate {
            c: 0.1,
            c1: 0.09,
            d1: 0.11,
            a1: 0.01,
            b1: 0.05,
            nu: 54,
            sigma: 1,
            rot1_inner_extreme: 213.0,
            rot1_outer_extreme: 53.1,
            rot2_lo_range: (0.93, 0.94),
            rot2_hi_range: (1.06, 1.07),
            margins: crate::twist::TwistMargins {
                rot1_inner: 159.0,
                rot1_outer: 0.9,
                rot2_lo: 0.06,
                rot2_hi: 0.06,
            },
            grids: crate::twist::GridEcho { n_boundary: 16, n_theta1: 8, n_radii: 4 },
            t_window: 10.530632823523026,
            t_direction: crate::levelset::Monotone::Decreasing,
            star_center: Point2::ZERO,
            kappa1: 0.5,
            kappa2: 0.5,
        };
        let disk = DomainModel::unit_disk();
        let cfg = VortexConfig::new(0.5, 0.5).unwrap();
        assert!(seed_orbit(&disk, &cfg, &cert, 10).is_err(), "below certified magnitude");
        assert!(seed_orbit(&disk, &cfg, &cert, -54).is_err(), "wrong sign");
        let seed = seed_orbit(&disk, &cfg, &cert, 54).unwrap();
        assert!(seed.w1.norm() < cert.b1);
        // doubling the index halves the squared radius up to the measured
        // offset calibration
        let seed2 = seed_orbit(&disk, &cfg, &cert, 108).unwrap();
        assert_relative_eq!(seed2.w1.norm_sq(), seed.w1.norm_sq() / 2.0, max_relative = 2e-2);
    }
}
