//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! The expensive pipeline (level-band certificate, twist certificate, orbit
//! family, asymptotics verification) is built once per strength pattern and
//! shared across criteria.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;
use vortex_pair::domain::harmonic_center;
use vortex_pair::dynamics::{
    angular_impulse, eval_h_pair, remainder_q, PairState, VortexConfig, WState, ZPairField,
};
use vortex_pair::flow::{integrate, IntegratorSettings};
use vortex_pair::levelset::{
    certify_band, hessian_period_limit, period_function_from, trace_level, BandCertificate,
    BandGrid, Monotone,
};
use vortex_pair::orbits::{sweep_family, verify_family, FamilyVerification, PeriodicOrbit, ShootingSettings};
use vortex_pair::twist::{certify_twist, certify_twist_with_levels, TwistCertificate, TwistGrids, TwistLevels};
use vortex_pair::{DomainModel, Error, Point2, TwistStage, UserModel};

const LEVEL: f64 = 0.1;
const BAND: (f64, f64) = (0.09, 0.11);
const TRIAL_B1: f64 = 0.05;

fn check(criterion: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} -- {detail}");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn disk() -> &'static DomainModel {
    static DISK: OnceLock<DomainModel> = OnceLock::new();
    DISK.get_or_init(DomainModel::unit_disk)
}

struct Pipeline {
    band: BandCertificate,
    cert: TwistCertificate,
    family: Vec<PeriodicOrbit>,
    verification: FamilyVerification,
    /// Residual after re-refining from a converged orbit displaced by 1e-3.
    basin_residual: f64,
    /// Fixed-point defect of the time-T map at the orbit point translated by
    /// T/3 along the flow.
    translate_residual: f64,
}

/// Full pipeline for equal strengths 1/2, 1/2 (sigma = +1).
fn pipeline() -> &'static Result<Pipeline, String> {
    static PIPE: OnceLock<Result<Pipeline, String>> = OnceLock::new();
    PIPE.get_or_init(|| {
        let model = disk();
        let cfg = VortexConfig::new(0.5, 0.5).map_err(|e| e.to_string())?;
        let center = harmonic_center(model, Point2::new(0.1, 0.1), 1e-10).map_err(|e| e.to_string())?;
        let band = certify_band(
            model,
            &cfg,
            LEVEL,
            BAND.0,
            BAND.1,
            center.z0,
            &BandGrid::linspace(BAND.0, BAND.1, 5, 64),
        )
        .map_err(|e| e.to_string())?;
        let cert = certify_twist(model, &cfg, &band, BAND.0, LEVEL, BAND.1, TRIAL_B1, &TwistGrids::default())
            .map_err(|e| e.to_string())?;
        let nu_list = [cert.nu, 2 * cert.nu, 4 * cert.nu, 12 * cert.nu];
        let report = sweep_family(model, &cfg, &cert, &nu_list, &ShootingSettings::default());
        if !report.failures.is_empty() {
            return Err(format!("family members failed: {:?}", report.failures));
        }
        // the refined rotation index must lock to the seeding index
        for (orbit, nu) in report.orbits.iter().zip(nu_list) {
            if orbit.nu_measured != nu {
                return Err(format!("orbit seeded at nu = {nu} converged with index {}", orbit.nu_measured));
            }
        }
        let level = trace_level(model, &cfg, LEVEL, cert.star_center, 64).map_err(|e| e.to_string())?;
        let verification =
            verify_family(model, &cfg, &report.orbits, &level).map_err(|e| e.to_string())?;

        // basin check: a start displaced by 1e-3 from a converged orbit must
        // come back
        let mut displaced = report.orbits[0].w0;
        displaced.w1.x += 1e-3;
        displaced.w2.y += 1e-3;
        let basin = vortex_pair::orbits::refine_orbit(
            model,
            &cfg,
            &displaced,
            cert.t_window,
            cert.c,
            cert.star_center,
            &ShootingSettings::default(),
        )
        .map_err(|e| e.to_string())?;

        // every time translate of the orbit is itself a fixed point
        let shoot = ShootingSettings::default();
        let field = vortex_pair::dynamics::WPairField { model, config: &cfg };
        let w0 = report.orbits[0].w0.as_array();
        let t_period = report.orbits[0].period;
        let shifted = vortex_pair::flow::flow_map(&field, w0, t_period / 3.0, &shoot.integrator)
            .map_err(|e| e.to_string())?;
        let back = vortex_pair::flow::flow_map(&field, shifted, t_period, &shoot.integrator)
            .map_err(|e| e.to_string())?;
        let translate_residual =
            (0..4).map(|i| (back[i] - shifted[i]).powi(2)).sum::<f64>().sqrt();

        Ok(Pipeline {
            band,
            cert,
            family: report.orbits,
            verification,
            basin_residual: basin.residual,
            translate_residual,
        })
    })
}

struct OppositePipeline {
    cert: TwistCertificate,
    actions: Vec<f64>,
    sigma: i8,
}

/// Smaller pipeline for strengths 3/2, -1/2 (sigma = -1); used by the action
/// criterion.
fn opposite_pipeline() -> &'static Result<OppositePipeline, String> {
    static PIPE: OnceLock<Result<OppositePipeline, String>> = OnceLock::new();
    PIPE.get_or_init(|| {
        let model = disk();
        let cfg = VortexConfig::new(1.5, -0.5).map_err(|e| e.to_string())?;
        let band = certify_band(
            model,
            &cfg,
            LEVEL,
            BAND.0,
            BAND.1,
            Point2::ZERO,
            &BandGrid::linspace(BAND.0, BAND.1, 3, 64),
        )
        .map_err(|e| e.to_string())?;
        let grids = TwistGrids { n_boundary: 8, n_theta1: 4, n_radii: 2, ..TwistGrids::default() };
        let cert = certify_twist(model, &cfg, &band, BAND.0, LEVEL, BAND.1, TRIAL_B1, &grids)
            .map_err(|e| e.to_string())?;
        let nu_list = [cert.nu, 2 * cert.nu, 4 * cert.nu];
        let report = sweep_family(model, &cfg, &cert, &nu_list, &ShootingSettings::default());
        if !report.failures.is_empty() {
            return Err(format!("family members failed: {:?}", report.failures));
        }
        let mut orbits = report.orbits;
        orbits.sort_by_key(|o| o.nu_measured.abs());
        Ok(OppositePipeline {
            cert,
            actions: orbits.iter().map(|o| o.action).collect(),
            sigma: cfg.sigma,
        })
    })
}

#[test]
fn acceptance_01_disk_period_function_oracle() {
    let model = disk();
    let grid = [0.05, 0.1, 0.2, 0.4];
    let mut worst: f64 = 0.0;
    for (k1, k2) in [(0.5, 0.5), (1.0, 1.0)] {
        let cfg = VortexConfig::new(k1, k2).unwrap();
        let series = period_function_from(model, &cfg, Point2::ZERO, &grid, 64).unwrap();
        assert_eq!(series.monotone, Some(Monotone::Decreasing));
        for (c, t) in &series.points {
            let oracle = 2.0 * PI * PI * (-TAU * c).exp() / cfg.kappa_sum.abs();
            worst = worst.max((t - oracle).abs() / oracle);
        }
    }
    check(
        "01 disk period oracle",
        worst <= 1e-6,
        &format!("max relative error {worst:.3e} against 2 pi^2 exp(-2 pi c) / |k1+k2| (tol 1e-6)"),
    );
}

#[test]
fn acceptance_02_small_level_period_limit() {
    let model = disk();
    let cfg = VortexConfig::new(0.5, 0.5).unwrap();
    let limit = hessian_period_limit(model, &cfg, Point2::ZERO).unwrap();
    let orbit = trace_level(model, &cfg, 1e-3, Point2::ZERO, 48).unwrap();
    let rel = (orbit.period - limit).abs() / limit;
    check(
        "02 Hessian period limit",
        rel <= 1e-2,
        &format!("T(m + 1e-3) = {:.6} vs 2 pi^2 / |k1+k2| = {limit:.6}, relative gap {rel:.3e} (tol 1e-2)", orbit.period),
    );
}

#[test]
fn acceptance_03_remainder_decay() {
    let model = disk();
    let cfg = VortexConfig::new(0.5, 0.5).unwrap();
    let curve = trace_level(model, &cfg, LEVEL, Point2::ZERO, 64).unwrap();
    let boundary: Vec<Point2> = (0..16).map(|i| curve.samples[i * curve.samples.len() / 16]).collect();
    let radii = [1e-1, 1e-2, 1e-3];
    let mut sups = Vec::new();
    let mut uniformity = Vec::new();
    for r in radii {
        let per_sample: Vec<f64> = boundary
            .iter()
            .map(|w2| {
                // sup over the fast direction at this radius
                (0..16)
                    .map(|k| {
                        let w1 = Point2::unit(k as f64 * PI / 8.0 + 0.3) * r;
                        remainder_q(model, &cfg, &WState::new(w1, *w2)).unwrap().norm()
                    })
                    .fold(0.0f64, f64::max)
            })
            .collect();
        let sup = per_sample.iter().copied().fold(0.0f64, f64::max);
        let inf = per_sample.iter().copied().fold(f64::INFINITY, f64::min);
        sups.push(sup);
        uniformity.push(sup / inf);
    }
    let decreasing = sups.windows(2).all(|w| w[1] < w[0]);
    let uniform = uniformity.iter().all(|u| *u < 2.0);
    let exponent = (sups[0] / sups[2]).log10() / 2.0;
    check(
        "03 remainder decay",
        decreasing && uniform,
        &format!(
            "sup|Q| = {:.3e}/{:.3e}/{:.3e} at |w1| = 1e-1/1e-2/1e-3 (decay exponent {exponent:.2}); \
             per-radius spread of |Q|/|w1| across the 16 boundary samples: {:.3}/{:.3}/{:.3} (< 2x)",
            sups[0], sups[1], sups[2], uniformity[0], uniformity[1], uniformity[2]
        ),
    );
}

#[test]
fn acceptance_04_twist_certificate_with_grid_doubling() {
    let pipe = pipeline().as_ref().expect("pipeline");
    let m = &pipe.cert.margins;
    let base_ok = m.rot1_inner > 0.0 && m.rot1_outer > 0.0 && m.rot2_lo > 0.0 && m.rot2_hi > 0.0;
    // at the certified inner radius the fast rotation number sits within 20%
    // of its leading-order value
    let lead = 0.25 * pipe.cert.t_window / (2.0 * PI * PI * pipe.cert.a1 * pipe.cert.a1);
    let lead_ok = (pipe.cert.rot1_inner_extreme - lead).abs() <= 0.2 * lead;
    let doubled = certify_twist(
        disk(),
        &VortexConfig::new(0.5, 0.5).unwrap(),
        &pipe.band,
        BAND.0,
        LEVEL,
        BAND.1,
        TRIAL_B1,
        &TwistGrids::default().doubled(),
    );
    let doubled_ok = doubled.as_ref().map(|c| c.margins.min() > 0.0).unwrap_or(false);
    check(
        "04 twist certificate",
        base_ok && lead_ok && doubled_ok,
        &format!(
            "nu = {}, margins (rot1 inner/outer, rot2 lo/hi) = {:.3}/{:.3}/{:.4}/{:.4}; \
             inner rot1 {:.2} vs leading order {lead:.2}; doubled grids: {}",
            pipe.cert.nu,
            m.rot1_inner,
            m.rot1_outer,
            m.rot2_lo,
            m.rot2_hi,
            pipe.cert.rot1_inner_extreme,
            match &doubled {
                Ok(c) => format!("positive, min margin {:.4}", c.margins.min()),
                Err(e) => format!("failed: {e}"),
            }
        ),
    );
}

#[test]
fn acceptance_05_periodic_orbit_quality() {
    let pipe = pipeline().as_ref().expect("pipeline");
    let mut ok = true;
    let mut detail = String::new();
    for orbit in &pipe.family {
        // the slow component stays inside the certified level band
        let confined = orbit.diagnostics.h_w2_min >= pipe.band.c0 - 1e-6
            && orbit.diagnostics.h_w2_max <= pipe.band.d0 + 1e-6;
        let good = orbit.residual <= 1e-9
            && orbit.energy_drift <= 1e-9
            && orbit.center_winding == 1
            && orbit.min_subperiod_gap >= 1e-3
            && confined;
        ok &= good;
        detail.push_str(&format!(
            "nu {}: residual {:.1e}, drift {:.1e}, winding {}, subperiod gap {:.2e}, h(w2) in [{:.4}, {:.4}]; ",
            orbit.nu_measured,
            orbit.residual,
            orbit.energy_drift,
            orbit.center_winding,
            orbit.min_subperiod_gap,
            orbit.diagnostics.h_w2_min,
            orbit.diagnostics.h_w2_max
        ));
    }
    ok &= pipe.basin_residual <= 1e-9;
    ok &= pipe.translate_residual <= 5e-9;
    detail.push_str(&format!(
        "basin re-refinement residual {:.1e}; T/3-translate fixed-point defect {:.1e}",
        pipe.basin_residual, pipe.translate_residual
    ));
    check("05 periodic orbits", ok, &detail);
}

#[test]
fn acceptance_06_fast_rotation_asymptotics() {
    let pipe = pipeline().as_ref().expect("pipeline");
    let v = &pipe.verification;
    let ok = v.fast_rate_decreasing && v.fast_rate_final_ok && v.rot1_leading_ok;
    check(
        "06 fast-rate asymptotics",
        ok,
        &format!(
            "max|r0^2 theta1_dot - k1 k2/pi| over the family: {:?} (strictly decreasing, final <= 5% of {:.4}); \
             rot1 vs leading-order |k1 k2| T / (2 pi^2 r0^2): relative gap {:.4} (tol 2%)",
            v.fast_rate_errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            (0.25f64 / PI),
            v.rot1_leading_rel_err
        ),
    );
}

#[test]
fn acceptance_07_center_and_separation_convergence() {
    let pipe = pipeline().as_ref().expect("pipeline");
    let v = &pipe.verification;
    let ok = v.separation_decreasing
        && v.center_decreasing
        && v.separation_final_third
        && v.center_final_third;
    check(
        "07 center/separation convergence",
        ok,
        &format!(
            "sup|z1-z2| along the family: {:?}; phase-aligned sup|C - Z| : {:?} (both strictly decreasing, final <= 1/3 of first)",
            v.separation_sups.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            v.center_sup_errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn acceptance_08_action_divergence_both_signs() {
    let pipe = pipeline().as_ref().expect("pipeline");
    let opp = opposite_pipeline().as_ref().expect("opposite pipeline");
    let pos_ok = pipe.verification.action_tail_ok;
    let tail_increasing = opp.actions.windows(2).all(|w| w[1] > w[0]);
    let neg_ok = opp.sigma == -1 && tail_increasing;
    check(
        "08 action divergence",
        pos_ok && neg_ok,
        &format!(
            "sigma=+1 actions {:?} (tail decreasing); sigma=-1 actions {:?} (increasing), cert nu = {}",
            pipe.verification.actions.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>(),
            opp.actions.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>(),
            opp.cert.nu
        ),
    );
}

#[test]
fn acceptance_09_rescaled_difference_stays_circular() {
    let pipe = pipeline().as_ref().expect("pipeline");
    let v = &pipe.verification;
    check(
        "09 rescaled difference",
        v.circle_ok,
        &format!("max | |u(s)| - 1 | = {:.3e} over ten fast turns (tol 0.05)", v.circle_error),
    );
}

#[test]
fn acceptance_10_conservation_suite() {
    let model = disk();
    let cfg = VortexConfig::new(0.5, 0.5).unwrap();
    let t_window = 2.0 * PI * PI * (-TAU * LEVEL).exp();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut states = Vec::new();
    while states.len() < 10 {
        let z1 = Point2::new(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7));
        let z2 = Point2::new(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7));
        if z1.norm() < 0.7 && z2.norm() < 0.7 && (z1 - z2).norm() > 0.15 {
            states.push(PairState::new(z1, z2));
        }
    }
    let field = ZPairField { model, config: &cfg };
    let run = |settings: &IntegratorSettings| -> (f64, f64) {
        let mut worst_h: f64 = 0.0;
        let mut worst_i: f64 = 0.0;
        for state in &states {
            let traj = integrate(&field, state.as_array(), t_window, settings).unwrap();
            let h0 = eval_h_pair(model, &cfg, state).unwrap();
            let i0 = angular_impulse(&cfg, state);
            let dh = traj.drift(|y| eval_h_pair(model, &cfg, &PairState::from_array(y)).unwrap())
                / (1.0 + h0.abs());
            let di = traj.drift(|y| angular_impulse(&cfg, &PairState::from_array(y))) / (1.0 + i0.abs());
            worst_h = worst_h.max(dh);
            worst_i = worst_i.max(di);
        }
        (worst_h, worst_i)
    };
    let base = IntegratorSettings::default();
    let (h1, i1) = run(&base);
    let (h2, i2) = run(&base.scaled_tols(0.5));
    let ok = h1 <= 1e-9 && i1 <= 1e-9 && h2 <= 1e-9 / 5.0 && i2 <= 1e-9 / 5.0;
    check(
        "10 conservation suite",
        ok,
        &format!(
            "10 trajectories over [0, {t_window:.2}]: energy drift {h1:.2e}, impulse drift {i1:.2e} (tol 1e-9); \
             halved tolerances: {h2:.2e} / {i2:.2e} against the fivefold-tightened bound 2e-10 \
             (measured reduction {:.1}x / {:.1}x)",
            h1 / h2.max(1e-300),
            i1 / i2.max(1e-300)
        ),
    );
}

#[test]
fn acceptance_11_negative_controls() {
    // isochronous user model: star-shaped levels but a constant period
    let iso = DomainModel::user(
        UserModel::new(|z: Point2, w: Point2| 0.5 * (z.norm_sq() + w.norm_sq()))
            .with_grad1(|z, _| z)
            .with_grad_h(|z| z * 2.0),
    );
    let cfg = VortexConfig::new(0.5, 0.5).unwrap();
    let band = certify_band(&iso, &cfg, 0.1, 0.09, 0.11, Point2::ZERO, &BandGrid::linspace(0.09, 0.11, 5, 32))
        .unwrap();
    let iso_ok = !band.positive && band.monotone.is_none();

    // frozen slow component: certification must give up at the slow stage
    let zero = DomainModel::user(
        UserModel::new(|_, _| 0.0).with_grad1(|_, _| Point2::ZERO).with_grad_h(|_| Point2::ZERO),
    );
    let mk_circle = |c: f64, r: f64| {
        let n = 24;
        LevelOrbit {
            c,
            angles: (0..n).map(|i| TAU * i as f64 / n as f64).collect(),
            radii: vec![r; n],
            samples: (0..n).map(|i| Point2::unit(TAU * i as f64 / n as f64) * r).collect(),
            period: 10.5,
            star_center: Point2::ZERO,
            star_margin: 1.0,
            winding: 1,
        }
    };
    use vortex_pair::levelset::LevelOrbit;
    let levels = TwistLevels {
        t_window: 10.5,
        direction: Monotone::Decreasing,
        star_center: Point2::ZERO,
        curve_lo: mk_circle(0.09, 0.657),
        curve_mid: mk_circle(0.1, 0.683),
        curve_hi: mk_circle(0.11, 0.706),
    };
    let grids = TwistGrids {
        n_boundary: 4,
        n_theta1: 4,
        n_radii: 2,
        shrink_budget: 3,
        ..TwistGrids::default()
    };
    let zero_ok = matches!(
        certify_twist_with_levels(&zero, &cfg, &levels, 0.05, &grids),
        Err(Error::CannotCertify { stage: TwistStage::Rot2, .. })
    );

    // vanishing total strength is rejected at configuration time
    let reject_ok = matches!(VortexConfig::new(1.0, -1.0), Err(Error::InvalidStrengths { .. }));

    check(
        "11 negative controls",
        iso_ok && zero_ok && reject_ok,
        &format!("isochronous non-monotone: {iso_ok}; frozen slow stage: {zero_ok}; k1+k2 = 0 rejected: {reject_ok}"),
    );
}
