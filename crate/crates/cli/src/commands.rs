use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qhd_core::connection::{beta_quantities, christoffel_with_metric, kropina_spray_at, riemann_spray, SprayFlavor};
use qhd_core::dynamics::{
    conserved_drift, integrate_geodesic, integrate_newton, reparametrize_by_time, trajectory_deviation, Flavor,
    IntegrationOptions, NewtonState, Normalization, Trajectory,
};
use qhd_core::geometry::{assemble_associated_metric, PointMetric};
use qhd_core::linalg::{det, max_abs, quad_form, sub};
use qhd_core::oracle::{fd_hessian_f2, fd_spray, OracleReport};
use qhd_core::zermelo::{
    inverse_navigation, killing_check_scenario, navigation_from_metric, quantum_wind, zermelo_condition_residual,
    KillingReport,
};
use qhd_core::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{LoadedConfig, NormalizationConfig};
use crate::error::{CliError, Result};
use crate::output::{to_json, trajectory_csv, CheckOutcome, OutputDir, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Metric,
    Geodesic,
    Compare,
    Zermelo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Metric => "metric",
            Command::Geodesic => "geodesic",
            Command::Compare => "compare",
            Command::Zermelo => "zermelo",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub points: Option<PathBuf>,
    pub flavor: Flavor,
    pub a: Option<Flavor>,
    pub b: Option<Flavor>,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self { points: None, flavor: Flavor::Kropina, a: None, b: None, out: out.into(), seed: None }
    }
}

/// Manifest plus a human-readable summary for the terminal.
#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub summary: String,
}

const HESSIAN_TOL: f64 = 1e-6;
const IDENTITY_TOL: f64 = 1e-10;
const DETERMINANT_TOL: f64 = 1e-8;
const WIND_TOL: f64 = 1e-9;
const ROUND_TRIP_TOL: f64 = 1e-10;
const SPRAY_TOL: f64 = 1e-6;
const S_TOL: f64 = 1e-10;
const DRIFT_TOL: f64 = 1e-8;

pub fn run_command(command: Command, loaded: &LoadedConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let scenario = loaded.build()?;
    let mut out = OutputDir::new(&opts.out)?;
    let seed = opts.seed.unwrap_or(loaded.config.numerics.seed);
    let (checks, summary) = match command {
        Command::Validate => validate(loaded, &scenario, opts, seed, &mut out)?,
        Command::Metric => metric(loaded, &scenario, opts, &mut out)?,
        Command::Geodesic => geodesic(loaded, &scenario, opts.flavor, &mut out)?,
        Command::Compare => {
            let (a, b) = match (opts.a, opts.b) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(CliError::Usage("compare needs --a and --b".into())),
            };
            compare(loaded, &scenario, a, b, &mut out)?
        }
        Command::Zermelo => zermelo(loaded, &scenario, opts, &mut out)?,
    };
    let mut outputs = out.written().to_vec();
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        config_hash: loaded.config.hash(),
        command: command.name().into(),
        seed,
        outputs,
        checks,
    };
    out.write("manifest.json", &to_json(&manifest))?;
    Ok(RunOutcome { manifest, summary })
}

pub fn read_points(path: &Path) -> Result<Vec<[f64; 4]>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_points(&text)
}

/// Points as CSV rows `t,x,y,z`; `#` comments and a leading header row are skipped.
pub fn parse_points(text: &str) -> Result<Vec<[f64; 4]>> {
    let mut points = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match cells {
            Ok(v) if v.len() == 4 => points.push([v[0], v[1], v[2], v[3]]),
            Ok(_) => return Err(CliError::schema(format!("points line {}", n + 1), "expected 4 columns t,x,y,z")),
            Err(_) if points.is_empty() && line.chars().any(char::is_alphabetic) => {}
            Err(e) => return Err(CliError::schema(format!("points line {}", n + 1), e.to_string())),
        }
    }
    if points.is_empty() {
        return Err(CliError::schema("points", "no points"));
    }
    Ok(points)
}

fn points(loaded: &LoadedConfig, opts: &RunOptions) -> Result<Vec<[f64; 4]>> {
    match &opts.points {
        Some(p) => read_points(p),
        None => Ok(loaded.sample_box()?.lattice(loaded.config.numerics.lattice)),
    }
}

fn report_error(e: &qhd_core::Error, at: &[f64; 4]) -> String {
    let line = format!("{} at {at:?}: {e}", e.name());
    log::error!("{line}");
    line
}

/// Worst report per checked quantity, in insertion order.
#[derive(Default)]
struct Ledger {
    order: Vec<String>,
    worst: BTreeMap<String, OracleReport>,
    errors: Vec<String>,
}

impl Ledger {
    fn add(&mut self, r: OracleReport) {
        let key = r.quantity.clone();
        match self.worst.get(&key) {
            None => {
                self.order.push(key.clone());
                self.worst.insert(key, r);
            }
            Some(prev) => {
                let worse = !r.passed && prev.passed || (r.passed == prev.passed && r.gap > prev.gap);
                if worse {
                    self.worst.insert(key, r);
                }
            }
        }
    }

    fn fail(&mut self, quantity: &str, e: &qhd_core::Error, at: &[f64; 4]) {
        self.errors.push(report_error(e, at));
        self.add(OracleReport::residual(quantity, f64::INFINITY, 0.0));
    }

    fn reports(&self) -> impl Iterator<Item = &OracleReport> {
        self.order.iter().map(|k| &self.worst[k])
    }

    fn checks(&self) -> Vec<CheckOutcome> {
        self.reports().map(|r| CheckOutcome { name: r.quantity.clone(), passed: r.passed }).collect()
    }

    fn table(&self) -> String {
        let mut s = format!("{:<36} {:>12} {:>10}  result\n", "check", "gap", "tolerance");
        for r in self.reports() {
            s += &format!(
                "{:<36} {:>12.3e} {:>10.0e}  {}\n",
                r.quantity,
                r.gap,
                r.tolerance,
                if r.passed { "PASS" } else { "FAIL" }
            );
        }
        for e in &self.errors {
            s += &format!("error: {e}\n");
        }
        s
    }
}

fn random_tangent(rng: &mut ChaCha8Rng) -> [f64; 4] {
    [rng.gen_range(0.1..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
}

fn spray_gap(analytic: &[f64; 4], oracle: &[f64; 4]) -> f64 {
    let scale = analytic.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    (0..4).fold(0.0f64, |m, i| m.max((analytic[i] - oracle[i]).abs())) / scale
}

fn validate_point(s: &Scenario<f64>, x: &[f64; 4], tangents: &[[f64; 4]], ledger: &mut Ledger) -> qhd_core::Result<()> {
    let (pm, table) = christoffel_with_metric(s, x)?;
    ledger.add(OracleReport::residual("s_antisymmetric_part", beta_quantities(s, x)?.max_s(), S_TOL));
    let nav = navigation_from_metric(&pm.a, x)?;
    ledger.add(OracleReport::residual("wind_unit_norm", nav.unit_residual, WIND_TOL));
    let back = inverse_navigation(&nav.h, &nav.w)?;
    let b_err = (0..4).fold(0.0f64, |m, i| m.max((back.b[i] - if i == 0 { 1.0 } else { 0.0 }).abs()));
    ledger.add(OracleReport::residual("navigation_round_trip", max_abs(&sub(&back.a, &pm.a)).max(b_err), ROUND_TRIP_TOL));
    for y in tangents {
        let g = pm.fundamental_tensor(y)?;
        let h = fd_hessian_f2(&pm.a, y)?;
        ledger.add(OracleReport::matrix("fundamental_tensor_vs_hessian", &g, &h, 1e-4, HESSIAN_TOL));
        let f = pm.f(y)?;
        ledger.add(OracleReport::scalar("euler_identity", quad_form(&g, y), f * f, IDENTITY_TOL));
        let y2 = y.map(|v| 2.0 * v);
        ledger.add(OracleReport::scalar("homogeneity", pm.f(&y2)?, 2.0 * f, IDENTITY_TOL));
        ledger.add(OracleReport::scalar("determinant_identity", det(&g), pm.kropina_determinant(y)?, DETERMINANT_TOL));
        ledger.add(OracleReport::residual("zermelo_condition", zermelo_condition_residual(&pm, &nav, y)?.max(), WIND_TOL));
        let gk = kropina_spray_at(&pm, &table, y)?;
        let ok = fd_spray(s, SprayFlavor::Kropina, x, y, 1e-3)?;
        ledger.add(OracleReport::residual("kropina_spray_vs_fd", spray_gap(&gk, &ok), SPRAY_TOL));
        let gr = riemann_spray(&table, y);
        let or = fd_spray(s, SprayFlavor::Riemann, x, y, 1e-3)?;
        ledger.add(OracleReport::residual("riemann_spray_vs_fd", spray_gap(&gr, &or), SPRAY_TOL));
    }
    Ok(())
}

fn validate(
    loaded: &LoadedConfig,
    s: &Scenario<f64>,
    opts: &RunOptions,
    seed: u64,
    out: &mut OutputDir,
) -> Result<(Vec<CheckOutcome>, String)> {
    let mut ledger = Ledger::default();
    let lattice = loaded.config.numerics.lattice;
    match s.validate(lattice) {
        Ok(_) => ledger.add(OracleReport::residual("mass_positive_definite", 0.0, 1.0)),
        Err(e) => ledger.fail("mass_positive_definite", &e, &[0.0; 4]),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for x in points(loaded, opts)? {
        let tangents: Vec<[f64; 4]> = (0..loaded.config.numerics.tangents).map(|_| random_tangent(&mut rng)).collect();
        if let Err(e) = validate_point(s, &x, &tangents, &mut ledger) {
            ledger.fail("point_evaluation", &e, &x);
        }
    }
    let mut lines = String::new();
    for r in ledger.reports() {
        lines += &serde_json::to_string(r).expect("report serializes");
        lines.push('\n');
    }
    out.write("reports.jsonl", &lines)?;
    Ok((ledger.checks(), ledger.table()))
}

#[derive(Serialize)]
struct MetricDump {
    point: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    values: Option<MetricValues>,
}

#[derive(Serialize)]
struct MetricValues {
    a: [[f64; 4]; 4],
    det_a: f64,
    b2: f64,
    y: [f64; 4],
    f: f64,
    g: [[f64; 4]; 4],
    det_g: f64,
    kropina_determinant: f64,
    kropina_determinant_gap: f64,
    stated_determinant: f64,
    stated_determinant_gap: f64,
}

fn metric_values(s: &Scenario<f64>, x: &[f64; 4], y: &[f64; 4]) -> qhd_core::Result<MetricValues> {
    let pm = PointMetric::new(*x, assemble_associated_metric(s, x)?)?;
    let g = pm.fundamental_tensor(y)?;
    Ok(MetricValues {
        a: pm.a,
        det_a: det(&pm.a),
        b2: pm.b2(),
        y: *y,
        f: pm.f(y)?,
        g,
        det_g: det(&g),
        kropina_determinant: pm.kropina_determinant(y)?,
        kropina_determinant_gap: pm.kropina_determinant_gap(y)?,
        stated_determinant: pm.stated_determinant(y)?,
        stated_determinant_gap: pm.det_identity_gap(y)?,
    })
}

fn metric(
    loaded: &LoadedConfig,
    s: &Scenario<f64>,
    opts: &RunOptions,
    out: &mut OutputDir,
) -> Result<(Vec<CheckOutcome>, String)> {
    let y = loaded.config.initial.y;
    let mut dumps = Vec::new();
    let (mut ok, mut det_ok) = (true, true);
    for x in points(loaded, opts)? {
        match metric_values(s, &x, &y) {
            Ok(v) => {
                det_ok &= v.kropina_determinant_gap < DETERMINANT_TOL;
                dumps.push(MetricDump { point: x, error: None, values: Some(v) });
            }
            Err(e) => {
                ok = false;
                dumps.push(MetricDump { point: x, error: Some(report_error(&e, &x)), values: None });
            }
        }
    }
    out.write("metric.json", &to_json(&dumps))?;
    let checks = vec![
        CheckOutcome { name: "associated_metric_positive_definite".into(), passed: ok },
        CheckOutcome { name: "determinant_identity".into(), passed: det_ok },
    ];
    let summary = format!("{} points written to metric.json\n", dumps.len());
    Ok((checks, summary))
}

fn integration_options(loaded: &LoadedConfig) -> IntegrationOptions<f64> {
    let n = &loaded.config.numerics;
    let norm = match n.normalization {
        NormalizationConfig::Raw => Normalization::Raw,
        NormalizationConfig::FUnit => Normalization::FUnit,
        NormalizationConfig::AlphaUnit => Normalization::AlphaUnit,
    };
    let mut o = IntegrationOptions::new(n.step, n.steps).with_normalization(norm);
    if let Some(t) = n.stop_time {
        o = o.with_stop_time(t);
    }
    o
}

fn integrate(loaded: &LoadedConfig, s: &Scenario<f64>, flavor: Flavor) -> Result<Trajectory<f64>> {
    let init = &loaded.config.initial;
    let opts = integration_options(loaded);
    let traj = match flavor {
        Flavor::Kropina => integrate_geodesic(s, SprayFlavor::Kropina, init.x, init.y, &opts)?,
        Flavor::Riemann => integrate_geodesic(s, SprayFlavor::Riemann, init.x, init.y, &opts)?,
        Flavor::Newton => {
            let y0 = init.y[0];
            if !(y0 > 0.0) {
                return Err(qhd_core::Error::InvalidInitial(format!("y0[0] = {y0} must be positive")).into());
            }
            let r = [init.x[1], init.x[2], init.x[3]];
            let v = [init.y[1] / y0, init.y[2] / y0, init.y[3] / y0];
            integrate_newton(s, NewtonState { t: init.x[0], r, v }, &opts)?
        }
    };
    Ok(traj)
}

fn flavor_name(f: Flavor) -> &'static str {
    match f {
        Flavor::Kropina => "kropina",
        Flavor::Riemann => "riemann",
        Flavor::Newton => "newton",
    }
}

fn geodesic(
    loaded: &LoadedConfig,
    s: &Scenario<f64>,
    flavor: Flavor,
    out: &mut OutputDir,
) -> Result<(Vec<CheckOutcome>, String)> {
    let traj = integrate(loaded, s, flavor)?;
    out.write("trajectory.csv", &trajectory_csv(&traj))?;
    let drift = match flavor {
        Flavor::Newton => None,
        _ => Some(conserved_drift(s, &traj)?),
    };
    let steps = traj.len().saturating_sub(1);
    let drift_tol = DRIFT_TOL * (steps as f64 / 1e4).max(1.0);
    let sidecar = json!({
        "flavor": flavor,
        "status": traj.status,
        "samples": traj.len(),
        "step": loaded.config.numerics.step,
        "conserved_drift": drift,
        "drift_tolerance": drift.map(|_| drift_tol),
    });
    out.write("trajectory.json", &to_json(&sidecar))?;
    let mut checks = Vec::new();
    if let Some(d) = drift {
        checks.push(CheckOutcome { name: "conserved_drift".into(), passed: d < drift_tol });
    }
    let summary = format!(
        "{} trajectory: {} samples, status {:?}{}\n",
        flavor_name(flavor),
        traj.len(),
        traj.status,
        drift.map(|d| format!(", drift {d:.3e}")).unwrap_or_default()
    );
    Ok((checks, summary))
}

fn compare(
    loaded: &LoadedConfig,
    s: &Scenario<f64>,
    a: Flavor,
    b: Flavor,
    out: &mut OutputDir,
) -> Result<(Vec<CheckOutcome>, String)> {
    let ta = integrate(loaded, s, a)?;
    let tb = integrate(loaded, s, b)?;
    out.write(&format!("a_{}.csv", flavor_name(a)), &trajectory_csv(&ta))?;
    out.write(&format!("b_{}.csv", flavor_name(b)), &trajectory_csv(&tb))?;
    let pa = reparametrize_by_time(&ta)?;
    let pb = reparametrize_by_time(&tb)?;
    let dev = trajectory_deviation(&pa, &pb, None)?;
    let tol = loaded.config.numerics.compare_tolerance;
    let window = match (pa.window(), pb.window()) {
        (Some((a0, a1)), Some((b0, b1))) => [a0.max(b0), a1.min(b1)],
        _ => return Err(qhd_core::Error::NoOverlap.into()),
    };
    let report = json!({
        "a": a,
        "b": b,
        "status_a": ta.status,
        "status_b": tb.status,
        "window": window,
        "max_deviation": dev,
        "tolerance": tol,
        "passed": dev < tol,
    });
    out.write("compare.json", &to_json(&report))?;
    let checks = vec![CheckOutcome { name: "max_deviation".into(), passed: dev < tol }];
    let summary = format!(
        "max deviation {} vs {} over t in [{:.6}, {:.6}]: {dev:.3e} (tolerance {tol:.0e})\n",
        flavor_name(a),
        flavor_name(b),
        window[0],
        window[1]
    );
    Ok((checks, summary))
}

#[derive(Serialize)]
struct NavigationDump {
    point: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    values: Option<NavigationValues>,
}

#[derive(Serialize)]
struct NavigationValues {
    kappa: f64,
    conformal_factor: f64,
    h: [[f64; 4]; 4],
    w: [f64; 4],
    wind_unit_residual: f64,
    zermelo_unit_residual: f64,
    zermelo_solved_form_residual: f64,
    round_trip_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    explicit_wind_gap: Option<f64>,
}

fn navigation_values(s: &Scenario<f64>, x: &[f64; 4], y: &[f64; 4]) -> qhd_core::Result<NavigationValues> {
    let pm = PointMetric::new(*x, assemble_associated_metric(s, x)?)?;
    let nav = navigation_from_metric(&pm.a, x)?;
    let z = zermelo_condition_residual(&pm, &nav, y)?;
    let back = inverse_navigation(&nav.h, &nav.w)?;
    let explicit_wind_gap = if s.mass.scalar().is_some() {
        let w = quantum_wind(s, x)?;
        let scale = nav.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Some((0..4).fold(0.0f64, |m, i| m.max((w[i] - nav.w[i]).abs())) / scale)
    } else {
        None
    };
    Ok(NavigationValues {
        kappa: nav.kappa,
        conformal_factor: nav.conformal_factor(),
        h: nav.h,
        w: nav.w,
        wind_unit_residual: nav.unit_residual,
        zermelo_unit_residual: z.unit,
        zermelo_solved_form_residual: z.solved_form,
        round_trip_error: max_abs(&sub(&back.a, &pm.a)),
        explicit_wind_gap,
    })
}

fn zermelo(
    loaded: &LoadedConfig,
    s: &Scenario<f64>,
    opts: &RunOptions,
    out: &mut OutputDir,
) -> Result<(Vec<CheckOutcome>, String)> {
    let y = loaded.config.initial.y;
    let pts = points(loaded, opts)?;
    let mut dumps = Vec::new();
    let (mut ok, mut unit, mut cond, mut round, mut wind) = (true, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for x in &pts {
        match navigation_values(s, x, &y) {
            Ok(v) => {
                unit = unit.max(v.wind_unit_residual);
                cond = cond.max(v.zermelo_unit_residual).max(v.zermelo_solved_form_residual);
                round = round.max(v.round_trip_error);
                wind = wind.max(v.explicit_wind_gap.unwrap_or(0.0));
                dumps.push(NavigationDump { point: *x, error: None, values: Some(v) });
            }
            Err(e) => {
                ok = false;
                dumps.push(NavigationDump { point: *x, error: Some(report_error(&e, x)), values: None });
            }
        }
    }
    let killing: Option<KillingReport<f64>> =
        if s.is_neutral() { Some(killing_check_scenario(s, &pts)?) } else { None };
    out.write("zermelo.json", &to_json(&json!({ "points": dumps, "killing": killing })))?;
    let checks = vec![
        CheckOutcome { name: "navigation_defined".into(), passed: ok },
        CheckOutcome { name: "wind_unit_norm".into(), passed: unit < WIND_TOL },
        CheckOutcome { name: "zermelo_condition".into(), passed: cond < WIND_TOL },
        CheckOutcome { name: "navigation_round_trip".into(), passed: round < ROUND_TRIP_TOL },
        CheckOutcome { name: "explicit_wind".into(), passed: wind < ROUND_TRIP_TOL },
    ];
    let mut summary = format!(
        "{} points: |W|_h residual {unit:.3e}, Zermelo residual {cond:.3e}, round trip {round:.3e}, explicit wind gap {wind:.3e}\n",
        pts.len()
    );
    if let Some(k) = killing {
        summary += &format!("wind is {}Killing\n", if k.is_killing { "" } else { "not " });
    }
    Ok((checks, summary))
}
