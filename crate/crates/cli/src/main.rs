//! Batch front-end: parses a config (file keys overridden by flags),
//! dispatches one scenario, and writes machine-readable JSON plus optional
//! CSV series.
//!
//! Exit codes: 0 success, 1 invalid input, 2 certification failure,
//! 3 solver failure.

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use vortex_pair::domain::harmonic_center;
use vortex_pair::dynamics::VortexConfig;
use vortex_pair::flow::{integrate, IntegratorSettings};
use vortex_pair::levelset::{certify_band, period_function_from, trace_level, BandCertificate, BandGrid};
use vortex_pair::orbits::{refine_orbit, seed_orbit, sweep_family, verify_family, ShootingSettings};
use vortex_pair::report::{write_level_csv, TrajTable};
use vortex_pair::twist::{certify_twist, TwistCertificate, TwistGrids};
use vortex_pair::{DomainModel, Error, Point2, UserModel};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "vortex-pair", version, about = "Two-vortex dynamics in planar domains: level-line periods, twist certificates, periodic-orbit search")]
struct Cli {
    /// TOML file supplying defaults for the global options; flags override.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for JSON/CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Domain kind: disk | radial-power | user.
    #[arg(long, global = true)]
    domain: Option<String>,

    /// Exponent for the radial-power domain.
    #[arg(long, global = true)]
    p: Option<f64>,

    /// Named regular part for the user domain: iso | zero.
    #[arg(long, global = true)]
    user_preset: Option<String>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    kappa1: Option<f64>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    kappa2: Option<f64>,

    /// Seed for randomized sampling (reserved for sampling scenarios).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    rel_tol: Option<f64>,

    #[arg(long, global = true)]
    abs_tol: Option<f64>,

    #[command(subcommand)]
    scenario: Scenario,
}

#[derive(Subcommand, Debug)]
enum Scenario {
    /// Trace one level line of h and measure its minimal period.
    TraceLevel {
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 64)]
        n_samples: usize,
        /// Explicit star center (defaults to the harmonic center).
        #[arg(long, allow_negative_numbers = true)]
        center_x: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        center_y: Option<f64>,
        /// Also write the (theta, r) polyline as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Period function T(c) on a level grid given as start:end:count.
    PeriodFunction {
        #[arg(long)]
        c_grid: String,
        #[arg(long, default_value_t = 64)]
        n_samples: usize,
        #[arg(long, allow_negative_numbers = true)]
        center_x: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        center_y: Option<f64>,
        #[arg(long)]
        csv: bool,
    },
    /// Certify the twist inequalities on the band c1 < c < d1.
    TwistCert {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        d1: f64,
        #[arg(long, default_value_t = 0.05)]
        trial_b1: f64,
        /// Grid densities: boundary points, fast angles, fast radii.
        #[arg(long, value_delimiter = ',', default_values_t = [16, 8, 4])]
        grids: Vec<usize>,
        #[arg(long, default_value_t = 40)]
        budget: u32,
        #[arg(long, allow_negative_numbers = true)]
        center_x: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        center_y: Option<f64>,
    },
    /// Find one periodic orbit with the given fast rotation index.
    FindOrbit {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        d1: f64,
        /// Fast rotation index (defaults to the certified integer).
        #[arg(long)]
        nu: Option<i64>,
        #[arg(long, default_value_t = 0.05)]
        trial_b1: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [16, 8, 4])]
        grids: Vec<usize>,
        #[arg(long, allow_negative_numbers = true)]
        center_x: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        center_y: Option<f64>,
        /// Also export the orbit trajectory as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Seed and refine a family of orbits at multiples of the certified index.
    Sweep {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        d1: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4, 12])]
        nu_mults: Vec<i64>,
        #[arg(long, default_value_t = 0.05)]
        trial_b1: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [16, 8, 4])]
        grids: Vec<usize>,
        #[arg(long, allow_negative_numbers = true)]
        center_x: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        center_y: Option<f64>,
    },
    /// Full pipeline plus verification of the family asymptotics.
    Verify {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        d1: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4, 12])]
        nu_mults: Vec<i64>,
        #[arg(long, default_value_t = 0.05)]
        trial_b1: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [16, 8, 4])]
        grids: Vec<usize>,
        #[arg(long, allow_negative_numbers = true)]
        center_x: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        center_y: Option<f64>,
    },
}

/// TOML config mirror of the global options; the domain lives in a
/// `[domain]` table with keys `kind`, `p` and `user_preset`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSection {
    kind: Option<String>,
    p: Option<f64>,
    user_preset: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    domain: Option<DomainSection>,
    kappa1: Option<f64>,
    kappa2: Option<f64>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
}

struct Resolved {
    model: DomainModel,
    domain_json: Value,
    config: VortexConfig,
    out_dir: PathBuf,
    seed: u64,
    settings: IntegratorSettings,
}

fn build_model(kind: &str, p: Option<f64>, preset: Option<&str>) -> Result<(DomainModel, Value), Error> {
    match kind {
        "disk" => Ok((DomainModel::unit_disk(), json!({"kind": "disk"}))),
        "radial-power" | "radial_power" => {
            let p = p.ok_or_else(|| Error::InvalidInput("radial-power domain needs --p".into()))?;
            Ok((DomainModel::radial_power(p)?, json!({"kind": "radial_power", "p": p})))
        }
        "user" => {
            let preset = preset.ok_or_else(|| {
                Error::InvalidInput("user domain needs --user-preset (iso | zero)".into())
            })?;
            match preset {
                "iso" => Ok((
                    DomainModel::user(
                        UserModel::new(|z: Point2, w: Point2| 0.5 * (z.norm_sq() + w.norm_sq()))
                            .with_grad1(|z, _| z)
                            .with_grad_h(|z| z * 2.0)
                            .with_rotation_symmetry(),
                    ),
                    json!({"kind": "user", "preset": "iso"}),
                )),
                "zero" => Ok((
                    DomainModel::user(
                        UserModel::new(|_, _| 0.0)
                            .with_grad1(|_, _| Point2::ZERO)
                            .with_grad_h(|_| Point2::ZERO)
                            .with_rotation_symmetry(),
                    ),
                    json!({"kind": "user", "preset": "zero"}),
                )),
                other => Err(Error::InvalidInput(format!("unknown user preset '{other}'"))),
            }
        }
        other => Err(Error::InvalidInput(format!("unknown domain kind '{other}'"))),
    }
}

fn resolve(cli: &Cli) -> Result<Resolved, Error> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| Error::InvalidInput(format!("config parse error: {e}")))?
        }
        None => FileConfig::default(),
    };
    let file_domain = file.domain.unwrap_or_default();
    let kind = cli.domain.clone().or(file_domain.kind).unwrap_or_else(|| "disk".into());
    let p = cli.p.or(file_domain.p);
    let preset = cli.user_preset.clone().or(file_domain.user_preset);
    let (model, domain_json) = build_model(&kind, p, preset.as_deref())?;
    let kappa1 = cli.kappa1.or(file.kappa1).unwrap_or(0.5);
    let kappa2 = cli.kappa2.or(file.kappa2).unwrap_or(0.5);
    let config = VortexConfig::new(kappa1, kappa2)?;
    let out_dir = cli.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("."));
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let mut settings = IntegratorSettings::default();
    if let Some(rel) = cli.rel_tol.or(file.rel_tol) {
        if !(rel > 0.0) {
            return Err(Error::InvalidInput(format!("rel_tol must be positive, got {rel}")));
        }
        settings.rel_tol = rel;
    }
    if let Some(abs) = cli.abs_tol.or(file.abs_tol) {
        if !(abs > 0.0) {
            return Err(Error::InvalidInput(format!("abs_tol must be positive, got {abs}")));
        }
        settings.abs_tol = abs;
    }
    Ok(Resolved { model, domain_json, config, out_dir, seed, settings })
}

fn star_center(r: &Resolved, cx: Option<f64>, cy: Option<f64>) -> Result<Point2, Error> {
    match (cx, cy) {
        (Some(x), Some(y)) => Ok(Point2::new(x, y)),
        (None, None) => Ok(harmonic_center(&r.model, Point2::ZERO, 1e-10)?.z0),
        _ => Err(Error::InvalidInput("--center-x and --center-y must be given together".into())),
    }
}

fn parse_grid_spec(spec: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidInput(format!("level grid must be start:end:count, got '{spec}'")));
    }
    let start: f64 = parts[0].parse().map_err(|_| Error::InvalidInput(format!("bad grid start '{}'", parts[0])))?;
    let end: f64 = parts[1].parse().map_err(|_| Error::InvalidInput(format!("bad grid end '{}'", parts[1])))?;
    let count: usize = parts[2].parse().map_err(|_| Error::InvalidInput(format!("bad grid count '{}'", parts[2])))?;
    if count < 2 || !(end > start) {
        return Err(Error::InvalidInput("level grid needs end > start and count >= 2".into()));
    }
    Ok((0..count).map(|i| start + (end - start) * i as f64 / (count - 1) as f64).collect())
}

fn envelope(r: &Resolved, scenario: &str, result: Value, tolerances: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario,
        "domain": r.domain_json,
        "kappa1": r.config.kappa1,
        "kappa2": r.config.kappa2,
        "seed": r.seed,
        "result": result,
        "tolerances": tolerances,
    })
}

fn write_json(path: &Path, value: &Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn twist_grids(grids: &[usize], budget: u32) -> Result<TwistGrids, Error> {
    if grids.len() != 3 || grids.iter().any(|&g| g == 0) {
        return Err(Error::InvalidInput(format!(
            "--grids needs three positive densities (boundary,theta1,radii), got {grids:?}"
        )));
    }
    Ok(TwistGrids {
        n_boundary: grids[0],
        n_theta1: grids[1],
        n_radii: grids[2],
        shrink_budget: budget,
        ..TwistGrids::default()
    })
}

/// Band certificate over `[c1, d1]`; `Err` carries a negative certificate
/// that should be reported with exit code 2.
fn band_or_negative(
    r: &Resolved,
    c: f64,
    c1: f64,
    d1: f64,
    center: Point2,
) -> Result<Result<BandCertificate, BandCertificate>, Error> {
    let grid = BandGrid::linspace(c1, d1, 5, 64);
    let band = certify_band(&r.model, &r.config, c, c1, d1, center, &grid)?;
    if band.positive {
        Ok(Ok(band))
    } else {
        Ok(Err(band))
    }
}

fn certified_twist(
    r: &Resolved,
    c: f64,
    c1: f64,
    d1: f64,
    center: Point2,
    trial_b1: f64,
    grids: &TwistGrids,
) -> Result<(BandCertificate, TwistCertificate), CliFailure> {
    let band = match band_or_negative(r, c, c1, d1, center).map_err(CliFailure::from)? {
        Ok(band) => band,
        Err(band) => {
            return Err(CliFailure::Certification(format!(
                "level band not certified: monotone = {:?}, min star margin = {:.3e}",
                band.monotone, band.min_margin
            )));
        }
    };
    let cert = certify_twist(&r.model, &r.config, &band, c1, c, d1, trial_b1, grids)
        .map_err(CliFailure::from)?;
    Ok((band, cert))
}

enum CliFailure {
    Input(String),
    Certification(String),
    Solver(String),
}

impl From<Error> for CliFailure {
    fn from(e: Error) -> Self {
        match &e {
            Error::InvalidStrengths { .. }
            | Error::InvalidExponent { .. }
            | Error::InvalidInput(_)
            | Error::SeparationOutOfRange { .. } => CliFailure::Input(e.to_string()),
            Error::CannotCertify { .. } => CliFailure::Certification(e.to_string()),
            _ => CliFailure::Solver(e.to_string()),
        }
    }
}

impl CliFailure {
    fn exit_code(&self) -> i32 {
        match self {
            CliFailure::Input(_) => 1,
            CliFailure::Certification(_) => 2,
            CliFailure::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliFailure::Input(m) | CliFailure::Certification(m) | CliFailure::Solver(m) => m,
        }
    }
}

fn band_json(band: &BandCertificate) -> Value {
    serde_json::to_value(band).unwrap_or(Value::Null)
}

fn run(cli: &Cli) -> Result<(), CliFailure> {
    let r = resolve(cli).map_err(CliFailure::from)?;
    fs::create_dir_all(&r.out_dir)
        .map_err(|e| CliFailure::Input(format!("cannot create output dir: {e}")))?;
    match &cli.scenario {
        Scenario::TraceLevel { c, n_samples, center_x, center_y, csv } => {
            let center = star_center(&r, *center_x, *center_y).map_err(CliFailure::from)?;
            let orbit =
                trace_level(&r.model, &r.config, *c, center, *n_samples).map_err(CliFailure::from)?;
            if *csv {
                let path = r.out_dir.join("level.csv");
                let mut buf = Vec::new();
                write_level_csv(&orbit, &mut buf)
                    .map_err(|e| CliFailure::Solver(format!("csv write failed: {e}")))?;
                fs::write(&path, buf).map_err(|e| CliFailure::Input(format!("cannot write csv: {e}")))?;
                println!("wrote {}", path.display());
            }
            let result = json!({
                "c": orbit.c,
                "period": orbit.period,
                "star_center": orbit.star_center,
                "star_margin": orbit.star_margin,
                "winding": orbit.winding,
                "n_samples": orbit.samples.len(),
            });
            let tol = json!({
                "h_on_level_abs": 1e-12,
                "integrator_rel": r.settings.rel_tol,
                "integrator_abs": r.settings.abs_tol,
                "period_time_rel": 1e-13,
            });
            write_json(&r.out_dir.join("trace_level.json"), &envelope(&r, "trace-level", result, tol))
                .map_err(CliFailure::from)?;
            println!("level {} traced: period {:.9}, star margin {:.4}", orbit.c, orbit.period, orbit.star_margin);
            Ok(())
        }
        Scenario::PeriodFunction { c_grid, n_samples, center_x, center_y, csv } => {
            let grid = parse_grid_spec(c_grid).map_err(CliFailure::from)?;
            let center = star_center(&r, *center_x, *center_y).map_err(CliFailure::from)?;
            let series = period_function_from(&r.model, &r.config, center, &grid, *n_samples)
                .map_err(CliFailure::from)?;
            if *csv {
                let path = r.out_dir.join("period_function.csv");
                let mut text = String::from("c,T\n");
                for (c, t) in &series.points {
                    text.push_str(&format!("{:.17e},{:.17e}\n", c, t));
                }
                fs::write(&path, text).map_err(|e| CliFailure::Input(format!("cannot write csv: {e}")))?;
                println!("wrote {}", path.display());
            }
            let result = json!({
                "points": series.points,
                "monotone": series.monotone,
            });
            let tol = json!({
                "h_on_level_abs": 1e-12,
                "integrator_rel": r.settings.rel_tol,
                "integrator_abs": r.settings.abs_tol,
                "period_time_rel": 1e-13,
                "monotone_step_floor": 1e-10,
            });
            write_json(&r.out_dir.join("period_function.json"), &envelope(&r, "period-function", result, tol))
                .map_err(CliFailure::from)?;
            println!("period function on {} levels: monotone = {:?}", series.points.len(), series.monotone);
            Ok(())
        }
        Scenario::TwistCert { c, c1, d1, trial_b1, grids, budget, center_x, center_y } => {
            let center = star_center(&r, *center_x, *center_y).map_err(CliFailure::from)?;
            let tg = twist_grids(grids, *budget).map_err(CliFailure::from)?;
            let band = match band_or_negative(&r, *c, *c1, *d1, center).map_err(CliFailure::from)? {
                Ok(band) => band,
                Err(band) => {
                    let result = json!({"band": band_json(&band), "twist": Value::Null});
                    let tol = json!({"rotation_integrator_rel": tg.settings.rel_tol});
                    write_json(&r.out_dir.join("twist_cert.json"), &envelope(&r, "twist-cert", result, tol))
                        .map_err(CliFailure::from)?;
                    return Err(CliFailure::Certification(format!(
                        "level band not certified: monotone = {:?}, min star margin = {:.3e}",
                        band.monotone, band.min_margin
                    )));
                }
            };
            let cert = certify_twist(&r.model, &r.config, &band, *c1, *c, *d1, *trial_b1, &tg)
                .map_err(CliFailure::from)?;
            let result = json!({
                "band": band_json(&band),
                "twist": serde_json::to_value(&cert).unwrap_or(Value::Null),
            });
            let tol = json!({
                "rotation_integrator_rel": tg.settings.rel_tol,
                "rotation_integrator_abs": tg.settings.abs_tol,
                "nu_selection_margin": tg.nu_margin,
            });
            write_json(&r.out_dir.join("twist_cert.json"), &envelope(&r, "twist-cert", result, tol))
                .map_err(CliFailure::from)?;
            println!(
                "twist certified: nu = {}, a1 = {:.4e}, b1 = {:.4e}, min margin = {:.4}",
                cert.nu, cert.a1, cert.b1, cert.margins.min()
            );
            Ok(())
        }
        Scenario::FindOrbit { c, c1, d1, nu, trial_b1, grids, center_x, center_y, csv } => {
            let center = star_center(&r, *center_x, *center_y).map_err(CliFailure::from)?;
            let tg = twist_grids(grids, 40).map_err(CliFailure::from)?;
            let (_band, cert) = certified_twist(&r, *c, *c1, *d1, center, *trial_b1, &tg)?;
            let nu = nu.unwrap_or(cert.nu);
            let shoot = ShootingSettings::default();
            let seed = seed_orbit(&r.model, &r.config, &cert, nu).map_err(CliFailure::from)?;
            let orbit = refine_orbit(&r.model, &r.config, &seed, cert.t_window, cert.c, cert.star_center, &shoot)
                .map_err(CliFailure::from)?;
            if *csv {
                let cfg_n = r.config.normalized();
                let field = vortex_pair::dynamics::WPairField { model: &r.model, config: &cfg_n };
                let traj = integrate(&field, orbit.w0.as_array(), orbit.period, &shoot.integrator)
                    .map_err(CliFailure::from)?;
                let table = TrajTable::from_w_trajectory(&r.model, &cfg_n, &traj, cert.star_center, 2000)
                    .map_err(CliFailure::from)?;
                let path = r.out_dir.join("orbit.csv");
                let mut buf = Vec::new();
                table
                    .write_csv(&mut buf)
                    .map_err(|e| CliFailure::Solver(format!("csv write failed: {e}")))?;
                fs::write(&path, buf).map_err(|e| CliFailure::Input(format!("cannot write csv: {e}")))?;
                println!("wrote {}", path.display());
            }
            let result = serde_json::to_value(orbit.downsampled(2000)).unwrap_or(Value::Null);
            let tol = json!({
                "residual": shoot.tol,
                "integrator_rel": shoot.integrator.rel_tol,
                "integrator_abs": shoot.integrator.abs_tol,
            });
            write_json(&r.out_dir.join("orbit.json"), &envelope(&r, "find-orbit", result, tol))
                .map_err(CliFailure::from)?;
            println!(
                "orbit found: nu = {}, residual = {:.2e}, energy drift = {:.2e}, separation = {:.4e}",
                orbit.nu_measured, orbit.residual, orbit.energy_drift, orbit.d0
            );
            Ok(())
        }
        Scenario::Sweep { c, c1, d1, nu_mults, trial_b1, grids, center_x, center_y } => {
            let center = star_center(&r, *center_x, *center_y).map_err(CliFailure::from)?;
            let tg = twist_grids(grids, 40).map_err(CliFailure::from)?;
            let (_band, cert) = certified_twist(&r, *c, *c1, *d1, center, *trial_b1, &tg)?;
            let nu_list: Vec<i64> = nu_mults.iter().map(|m| cert.nu * m).collect();
            let shoot = ShootingSettings::default();
            let report = sweep_family(&r.model, &r.config, &cert, &nu_list, &shoot);
            let orbits: Vec<Value> = report
                .orbits
                .iter()
                .map(|o| serde_json::to_value(o.downsampled(200)).unwrap_or(Value::Null))
                .collect();
            let result = json!({
                "twist": serde_json::to_value(&cert).unwrap_or(Value::Null),
                "nu_list": nu_list,
                "orbits": orbits,
                "failures": report.failures,
            });
            let tol = json!({
                "residual": shoot.tol,
                "integrator_rel": shoot.integrator.rel_tol,
                "integrator_abs": shoot.integrator.abs_tol,
            });
            write_json(&r.out_dir.join("sweep.json"), &envelope(&r, "sweep", result, tol))
                .map_err(CliFailure::from)?;
            println!("family: {} converged, {} failed", report.orbits.len(), report.failures.len());
            if report.orbits.is_empty() {
                return Err(CliFailure::Solver("no family member converged".into()));
            }
            Ok(())
        }
        Scenario::Verify { c, c1, d1, nu_mults, trial_b1, grids, center_x, center_y } => {
            let center = star_center(&r, *center_x, *center_y).map_err(CliFailure::from)?;
            let tg = twist_grids(grids, 40).map_err(CliFailure::from)?;
            let (band, cert) = certified_twist(&r, *c, *c1, *d1, center, *trial_b1, &tg)?;
            let nu_list: Vec<i64> = nu_mults.iter().map(|m| cert.nu * m).collect();
            let shoot = ShootingSettings::default();
            let report = sweep_family(&r.model, &r.config, &cert, &nu_list, &shoot);
            if !report.failures.is_empty() {
                return Err(CliFailure::Solver(format!("family members failed: {:?}", report.failures)));
            }
            let cfg_n = r.config.normalized();
            let level = trace_level(&r.model, &cfg_n, cert.c, cert.star_center, 64)
                .map_err(CliFailure::from)?;
            let verification = verify_family(&r.model, &r.config, &report.orbits, &level)
                .map_err(CliFailure::from)?;
            let all_ok = verification.center_decreasing
                && verification.separation_decreasing
                && verification.fast_rate_decreasing
                && verification.fast_rate_final_ok
                && verification.action_tail_ok
                && verification.circle_ok
                && verification.rot1_leading_ok;
            let result = json!({
                "band": band_json(&band),
                "twist": serde_json::to_value(&cert).unwrap_or(Value::Null),
                "verification": serde_json::to_value(&verification).unwrap_or(Value::Null),
                "all_checks": all_ok,
            });
            let tol = json!({
                "residual": shoot.tol,
                "integrator_rel": shoot.integrator.rel_tol,
                "integrator_abs": shoot.integrator.abs_tol,
                "fast_rate_final_fraction": 0.05,
                "rescaled_circle": 0.05,
                "rot1_leading_rel": 0.02,
            });
            write_json(&r.out_dir.join("verify.json"), &envelope(&r, "verify", result, tol))
                .map_err(CliFailure::from)?;
            println!("verification checks all pass: {all_ok}");
            if !all_ok {
                return Err(CliFailure::Certification("family asymptotics checks failed".into()));
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    match run(&cli) {
        Ok(()) => {}
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            std::process::exit(failure.exit_code());
        }
    }
}
