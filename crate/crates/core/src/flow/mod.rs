//! High-accuracy trajectory integration with dense output, continuous angle
//! lifts, section-crossing detection, and flow-map Jacobians.

mod dopri5;

pub use dopri5::DenseStep;

use crate::error::{Error, Result};
use crate::geometry::wrap_diff;
use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Why a vector field refused to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldError {
    /// Collision guard tripped.
    Singular,
    /// State left the domain.
    Outside,
}

/// An autonomous vector field on R^N with an optional step-size hint used to
/// resolve fast rotation (each step should cover less than an eighth of a
/// turn).
pub trait Field<const N: usize> {
    fn eval(&self, y: &[f64; N]) -> std::result::Result<[f64; N], FieldError>;

    fn max_step_hint(&self, _y: &[f64; N]) -> f64 {
        f64::INFINITY
    }
}

/// Plain closures integrate too.
pub struct FnField<F>(pub F);

impl<F, const N: usize> Field<N> for FnField<F>
where
    F: Fn(&[f64; N]) -> std::result::Result<[f64; N], FieldError>,
{
    fn eval(&self, y: &[f64; N]) -> std::result::Result<[f64; N], FieldError> {
        (self.0)(y)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings { rel_tol: 1e-10, abs_tol: 1e-12, max_step: f64::INFINITY, max_steps: 4_000_000 }
    }
}

impl IntegratorSettings {
    pub fn with_tols(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorSettings { rel_tol, abs_tol, ..Default::default() }
    }

    /// Same settings with both tolerances scaled by `factor`.
    pub fn scaled_tols(&self, factor: f64) -> Self {
        IntegratorSettings { rel_tol: self.rel_tol * factor, abs_tol: self.abs_tol * factor, ..*self }
    }
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], s: &IntegratorSettings) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = s.abs_tol + s.rel_tol * y0[i].abs().max(y1[i].abs());
        let q = err[i] / sc;
        acc += q * q;
    }
    (acc / N as f64).sqrt()
}

fn map_field_error(e: FieldError, t: f64) -> Error {
    match e {
        FieldError::Singular => Error::StepFailure { t },
        FieldError::Outside => Error::DomainExit { t },
    }
}

fn initial_step<F: Field<N>, const N: usize>(
    field: &F,
    y0: &[f64; N],
    k1: &[f64; N],
    t_end: f64,
    s: &IntegratorSettings,
) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = s.abs_tol + s.rel_tol * y0[i].abs();
        d0 += (y0[i] / sc).powi(2);
        d1 += (k1[i] / sc).powi(2);
    }
    d0 = (d0 / N as f64).sqrt();
    d1 = (d1 / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let cap = t_end.min(s.max_step).min(field.max_step_hint(y0));
    let h0 = h0.min(cap).max(1e-300);
    // one Euler probe to estimate the second derivative scale
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y0[i] + h0 * k1[i];
    }
    let h = match field.eval(&y1) {
        Ok(f1) => {
            let mut d2 = 0.0;
            for i in 0..N {
                let sc = s.abs_tol + s.rel_tol * y0[i].abs();
                d2 += ((f1[i] - k1[i]) / sc).powi(2);
            }
            d2 = (d2 / N as f64).sqrt() / h0;
            let dm = d1.max(d2);
            if dm > 1e-15 {
                (0.01 / dm).powf(0.2).min(100.0 * h0)
            } else {
                (h0 * 100.0).max(1e-6)
            }
        }
        Err(_) => h0 / 100.0,
    };
    h.min(cap)
}

/// Core adaptive loop. `on_step` receives every accepted step (with its dense
/// interpolant and the absolute local error estimate) and may stop the
/// integration early by returning `false`.
fn drive<F: Field<N>, const N: usize>(
    field: &F,
    y0: [f64; N],
    t_end: f64,
    settings: &IntegratorSettings,
    mut on_step: impl FnMut(&DenseStep<N>, f64) -> Result<bool>,
) -> Result<[f64; N]> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!("integration span must be finite and nonnegative, got {t_end}")));
    }
    let mut y = y0;
    if t_end == 0.0 {
        return Ok(y);
    }
    let mut eval = |state: &[f64; N]| field.eval(state);
    let mut t = 0.0;
    let mut k1 = eval(&y).map_err(|e| map_field_error(e, 0.0))?;
    let mut h = initial_step(field, &y, &k1, t_end, settings);
    let mut trials = 0usize;
    let mut just_rejected = false;
    let tiny = 1e-14 * t_end.max(1.0);

    while t < t_end - tiny {
        let cap = (t_end - t).min(settings.max_step).min(field.max_step_hint(&y));
        h = h.min(cap).max(0.0);
        let floor = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h <= floor {
            return Err(Error::StepFailure { t });
        }
        trials += 1;
        if trials > settings.max_steps {
            return Err(Error::BudgetExceeded { t });
        }
        match dopri5::trial_step(&mut eval, &y, &k1, h) {
            Err(e) => {
                // shrink toward the obstruction; report it if the step dies
                let h_new = h * 0.25;
                if h_new <= floor {
                    return Err(map_field_error(e, t));
                }
                h = h_new;
                just_rejected = true;
            }
            Ok(trial) => {
                let err = error_norm(&trial.err, &y, &trial.y1, settings);
                if err <= 1.0 {
                    let dense = dopri5::dense_step(t, h, &y, &k1, &trial);
                    let err_abs = trial.err.iter().map(|e| e * e).sum::<f64>().sqrt();
                    let keep_going = on_step(&dense, err_abs)?;
                    t += h;
                    y = trial.y1;
                    k1 = trial.k7;
                    if !keep_going {
                        return Ok(y);
                    }
                    let grow_cap = if just_rejected { 1.0 } else { 10.0 };
                    let fac = if err == 0.0 { grow_cap } else { (0.9 * err.powf(-0.2)).clamp(0.2, grow_cap) };
                    h *= fac;
                    just_rejected = false;
                } else {
                    h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                    just_rejected = true;
                }
            }
        }
    }
    Ok(y)
}

/// A stored trajectory: node times and states plus one dense interpolant per
/// accepted step.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    steps: Vec<DenseStep<N>>,
}

impl<const N: usize> Trajectory<N> {
    /// A constant trajectory on `[0, t_end]` (single synthetic segment).
    pub fn constant(y: [f64; N], t_end: f64) -> Self {
        let rcont = [y, [0.0; N], [0.0; N], [0.0; N], [0.0; N]];
        Trajectory {
            times: vec![0.0, t_end],
            states: vec![y, y],
            steps: vec![DenseStep { t0: 0.0, h: t_end, rcont }],
        }
    }

    pub fn start(&self) -> &[f64; N] {
        &self.states[0]
    }

    pub fn end(&self) -> &[f64; N] {
        self.states.last().expect("trajectory has at least one node")
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one node")
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[DenseStep<N>] {
        &self.steps
    }

    fn step_index(&self, t: f64) -> usize {
        let t = t.clamp(0.0, self.end_time());
        match self.steps.binary_search_by(|s| {
            if t < s.t0 {
                std::cmp::Ordering::Greater
            } else if t > s.t1() {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Equal
            }
        }) {
            Ok(i) => i,
            Err(i) => i.min(self.steps.len() - 1),
        }
    }

    /// Dense-output evaluation at any `t` in the integrated span.
    pub fn sample(&self, t: f64) -> [f64; N] {
        let t = t.clamp(0.0, self.end_time());
        self.steps[self.step_index(t)].eval(t)
    }

    /// Time derivative of the dense interpolant at `t`.
    pub fn sample_deriv(&self, t: f64) -> [f64; N] {
        let t = t.clamp(0.0, self.end_time());
        self.steps[self.step_index(t)].eval_deriv(t)
    }

    /// Evaluate a scalar along the stored nodes.
    pub fn node_series(&self, f: impl Fn(&[f64; N]) -> f64) -> Vec<f64> {
        self.states.iter().map(f).collect()
    }

    /// Maximum deviation of a conserved scalar from its initial value over
    /// the stored nodes.
    pub fn drift(&self, f: impl Fn(&[f64; N]) -> f64) -> f64 {
        let e0 = f(&self.states[0]);
        self.states.iter().map(|s| (f(s) - e0).abs()).fold(0.0, f64::max)
    }
}

/// Integrate and store the full trajectory with dense output.
pub fn integrate<F: Field<N>, const N: usize>(
    field: &F,
    y0: [f64; N],
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<Trajectory<N>> {
    let mut traj = Trajectory { times: vec![0.0], states: vec![y0], steps: Vec::new() };
    drive(field, y0, t_end, settings, |step, _| {
        traj.times.push(step.t1());
        traj.states.push(step.eval(step.t1()));
        traj.steps.push(step.clone());
        Ok(true)
    })?;
    // land the final node exactly on t_end
    if let Some(last) = traj.times.last_mut() {
        if (*last - t_end).abs() <= 1e-12 * t_end.max(1.0) {
            *last = t_end;
        }
    }
    Ok(traj)
}

/// Time-`t_end` flow map without storing the trajectory.
pub fn flow_map<F: Field<N>, const N: usize>(
    field: &F,
    y0: [f64; N],
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<[f64; N]> {
    drive(field, y0, t_end, settings, |_, _| Ok(true))
}

/// Flow map together with the accumulated absolute local-error estimate (the
/// sum of the embedded-pair error norms over the accepted steps).
pub fn flow_map_with_estimate<F: Field<N>, const N: usize>(
    field: &F,
    y0: [f64; N],
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<([f64; N], f64)> {
    let mut est = 0.0;
    let y = drive(field, y0, t_end, settings, |_, err_abs| {
        est += err_abs;
        Ok(true)
    })?;
    Ok((y, est))
}

/// Jacobian of the time-`t_end` flow map by central finite differences with
/// per-component step `1e-6 * (1 + |component|)`.
pub fn flow_jacobian<F: Field<N>, const N: usize>(
    field: &F,
    y0: [f64; N],
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<SMatrix<f64, N, N>> {
    let mut jac = SMatrix::<f64, N, N>::zeros();
    for j in 0..N {
        let delta = 1e-6 * (1.0 + y0[j].abs());
        let mut yp = y0;
        yp[j] += delta;
        let mut ym = y0;
        ym[j] -= delta;
        let fp = flow_map(field, yp, t_end, settings)?;
        let fm = flow_map(field, ym, t_end, settings)?;
        for i in 0..N {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * delta);
        }
    }
    Ok(jac)
}

/// Which planar component of the state to lift, and about which center.
#[derive(Debug, Clone, Copy)]
pub struct LiftSpec {
    pub ix: usize,
    pub iy: usize,
    pub center: (f64, f64),
}

const MAX_LIFT_SUBSTEPS: usize = 4096;

fn raw_angle<const N: usize>(y: &[f64; N], spec: &LiftSpec) -> f64 {
    (y[spec.iy] - spec.center.1).atan2(y[spec.ix] - spec.center.0)
}

fn angular_rate<const N: usize>(y: &[f64; N], dy: &[f64; N], spec: &LiftSpec) -> f64 {
    let rx = y[spec.ix] - spec.center.0;
    let ry = y[spec.iy] - spec.center.1;
    let r2 = rx * rx + ry * ry;
    (rx * dy[spec.iy] - ry * dy[spec.ix]) / r2
}

/// Advance a continuous angle lift across one dense step, densifying the
/// sampling until every increment is below pi/2. Returns the lift at the end
/// of the step; intermediate samples go to `sink` when provided.
fn advance_lift<const N: usize>(
    step: &DenseStep<N>,
    spec: &LiftSpec,
    start: f64,
    mut sink: Option<&mut (Vec<f64>, Vec<f64>)>,
) -> Result<f64> {
    // initial substep estimate from the end-point angular rates
    let r0 = angular_rate(&step.eval(step.t0), &step.eval_deriv(step.t0), spec).abs();
    let r1 = angular_rate(&step.eval(step.t1()), &step.eval_deriv(step.t1()), spec).abs();
    let est = step.h * r0.max(r1) * 1.5;
    let mut m = ((est / (PI / 4.0)).ceil() as usize).clamp(1, MAX_LIFT_SUBSTEPS);
    'refine: loop {
        let mut lift = start;
        let mut samples: Vec<(f64, f64)> = Vec::new();
        for j in 1..=m {
            let t = step.t0 + step.h * j as f64 / m as f64;
            let theta = raw_angle(&step.eval(t), spec);
            let d = wrap_diff(theta, lift);
            if d.abs() >= PI / 2.0 {
                if m >= MAX_LIFT_SUBSTEPS {
                    return Err(Error::LiftAmbiguity);
                }
                m = (m * 2).min(MAX_LIFT_SUBSTEPS);
                continue 'refine;
            }
            lift += d;
            if sink.is_some() {
                samples.push((t, lift));
            }
        }
        if let Some((ts, vs)) = sink.as_deref_mut() {
            for (t, v) in samples {
                ts.push(t);
                vs.push(v);
            }
        }
        return Ok(lift);
    }
}

/// A continuous choice of argument along a trajectory, sampled densely enough
/// that consecutive increments stay below pi/2.
#[derive(Debug, Clone)]
pub struct AngleLift {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl AngleLift {
    pub fn start(&self) -> f64 {
        self.values[0]
    }

    pub fn end(&self) -> f64 {
        *self.values.last().expect("lift has samples")
    }

    /// Total continuous angle increment over the sampled window.
    pub fn total(&self) -> f64 {
        self.end() - self.start()
    }

    /// Lift value at time `t` given the raw angle there, anchored to the
    /// nearest earlier sample.
    pub fn value_at(&self, t: f64, theta_raw: f64) -> f64 {
        let idx = match self.times.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let anchor = self.values[idx.min(self.values.len() - 1)];
        anchor + wrap_diff(theta_raw, anchor)
    }
}

/// Continuous lift of the angle of one planar component of the trajectory.
pub fn lift_component<const N: usize>(traj: &Trajectory<N>, spec: LiftSpec) -> Result<AngleLift> {
    let mut times = vec![traj.times[0]];
    let mut values = vec![raw_angle(&traj.states[0], &spec)];
    let mut lift = values[0];
    for step in traj.steps() {
        let mut sink = (Vec::new(), Vec::new());
        lift = advance_lift(step, &spec, lift, Some(&mut sink))?;
        times.extend(sink.0);
        values.extend(sink.1);
    }
    Ok(AngleLift { times, values })
}

/// Continuous lifts of both planar components of a 4-dimensional pair state:
/// the fast component about the origin and the slow component about the star
/// center.
pub fn lift_angles(traj: &Trajectory<4>, star_center: (f64, f64)) -> Result<(AngleLift, AngleLift)> {
    let fast = lift_component(traj, LiftSpec { ix: 0, iy: 1, center: (0.0, 0.0) })?;
    let slow = lift_component(traj, LiftSpec { ix: 2, iy: 3, center: star_center })?;
    Ok((fast, slow))
}

/// Total lift increments over `[0, t_end]` for several components, computed
/// in streaming fashion without storing the trajectory.
pub fn lift_increments<F: Field<N>, const N: usize>(
    field: &F,
    y0: [f64; N],
    t_end: f64,
    specs: &[LiftSpec],
    settings: &IntegratorSettings,
) -> Result<Vec<f64>> {
    let mut lifts: Vec<f64> = specs.iter().map(|s| raw_angle(&y0, s)).collect();
    let starts = lifts.clone();
    drive(field, y0, t_end, settings, |step, _| {
        for (lift, spec) in lifts.iter_mut().zip(specs) {
            *lift = advance_lift(step, spec, *lift, None)?;
        }
        Ok(true)
    })?;
    Ok(lifts.iter().zip(&starts).map(|(l, s)| l - s).collect())
}

/// A refined crossing of a ray section.
#[derive(Debug, Clone, Copy)]
pub struct Crossing {
    pub t: f64,
    /// Sign of the angular rate at the crossing.
    pub orientation: i8,
}

/// Minimum |angular rate| below which a crossing counts as non-transversal.
pub const MIN_CROSSING_RATE: f64 = 1e-8;

/// Locate all crossings of the ray at `section_angle` (from `spec.center`),
/// refined on the dense interpolant to 1e-12 in time. Crossings with angular
/// rate below `min_rate` are rejected as non-transversal.
pub fn section_crossings<F: Field<N>, const N: usize>(
    traj: &Trajectory<N>,
    field: &F,
    spec: LiftSpec,
    section_angle: f64,
    min_rate: f64,
) -> Result<Vec<Crossing>> {
    let lift = lift_component(traj, spec)?;
    let mut out = Vec::new();
    for w in 0..lift.times.len() - 1 {
        let (v0, v1) = (lift.values[w], lift.values[w + 1]);
        let (lo, hi) = if v0 <= v1 { (v0, v1) } else { (v1, v0) };
        // integer turns k with section_angle + 2 pi k inside (lo, hi]
        let k_min = ((lo - section_angle) / TAU).ceil() as i64;
        let k_max = ((hi - section_angle) / TAU).floor() as i64;
        for k in k_min..=k_max {
            let target = section_angle + TAU * k as f64;
            if target <= lo || target > hi {
                continue;
            }
            let (mut ta, mut tb) = (lift.times[w], lift.times[w + 1]);
            let anchor = lift.values[w];
            let g = |t: f64| -> f64 {
                let y = traj.sample(t);
                anchor + wrap_diff(raw_angle(&y, &spec), anchor) - target
            };
            let (mut ga, gb) = (g(ta), g(tb));
            if ga == 0.0 {
                // crossing exactly at the sample
            } else if ga * gb > 0.0 {
                continue;
            }
            for _ in 0..200 {
                if tb - ta <= 1e-12 * tb.abs().max(1.0) {
                    break;
                }
                let tm = 0.5 * (ta + tb);
                let gm = g(tm);
                if ga * gm <= 0.0 {
                    tb = tm;
                } else {
                    ta = tm;
                    ga = gm;
                }
            }
            let t_star = 0.5 * (ta + tb);
            let y = traj.sample(t_star);
            let dy = field.eval(&y).map_err(|e| map_field_error(e, t_star))?;
            let rate = angular_rate(&y, &dy, &spec);
            if rate.abs() < min_rate {
                return Err(Error::NonTransversal { t: t_star, rate });
            }
            out.push(Crossing { t: t_star, orientation: if rate > 0.0 { 1 } else { -1 } });
        }
    }
    out.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    Ok(out)
}

/// First time at which the lifted angle about `spec.center` has advanced by a
/// full turn (in the direction of motion), i.e. the first return to the ray
/// section through the initial point with matching orientation.
pub fn period_by_first_return<F: Field<N>, const N: usize>(
    field: &F,
    y0: [f64; N],
    spec: LiftSpec,
    t_max: f64,
    settings: &IntegratorSettings,
) -> Result<f64> {
    let start = raw_angle(&y0, &spec);
    let mut lift = start;
    let mut hit: Option<f64> = None;
    drive(field, y0, t_max, settings, |step, _| {
        let prev = lift;
        lift = advance_lift(step, &spec, lift, None)?;
        let inc_prev = prev - start;
        let inc = lift - start;
        let target = if inc >= TAU && inc_prev < TAU {
            Some(TAU)
        } else if inc <= -TAU && inc_prev > -TAU {
            Some(-TAU)
        } else {
            None
        };
        if let Some(target) = target {
            let anchor = prev;
            let g = |t: f64| -> f64 {
                // within one step the angle moves less than a half turn per
                // substep; re-anchor progressively toward t
                let mut local = anchor;
                let m = 8;
                for j in 1..=m {
                    let tj = step.t0 + (t - step.t0) * j as f64 / m as f64;
                    local += wrap_diff(raw_angle(&step.eval(tj), &spec), local);
                }
                local - start - target
            };
            let (mut ta, mut tb) = (step.t0, step.t1());
            let mut ga = g(ta);
            for _ in 0..200 {
                if tb - ta <= 1e-13 * tb.abs().max(1.0) {
                    break;
                }
                let tm = 0.5 * (ta + tb);
                let gm = g(tm);
                if ga * gm <= 0.0 {
                    tb = tm;
                } else {
                    ta = tm;
                    ga = gm;
                }
            }
            hit = Some(0.5 * (ta + tb));
            return Ok(false);
        }
        Ok(true)
    })?;
    hit.ok_or(Error::BudgetExceeded { t: t_max })
}
