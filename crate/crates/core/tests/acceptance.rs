use std::time::{Duration, Instant};

use qhd_core::connection::{beta_quantities, christoffel, kropina_spray, riemann_spray, spray, SprayFlavor};
use qhd_core::dynamics::{
    conserved_drift, integrate_finsler_geodesic, integrate_newton, integrate_riemann_geodesic, reparametrize_by_time,
    trajectory_deviation, IntegrationOptions, NewtonState, TrajectoryStatus,
};
use qhd_core::fields::{MadelungPotential, MadelungState};
use qhd_core::geometry::{assemble_associated_metric, PointMetric};
use qhd_core::linalg::{max_abs, norm, quad_form, relative_gap, sub};
use qhd_core::oracle::{euler_lagrange_residual, fd_hessian_f2};
use qhd_core::zermelo::{inverse_navigation, killing_check_scenario, navigation_from_metric, zermelo_condition_residual};
use qhd_core::{Constants, Domain, MassMatrix, QuantumSource, ScalarField, Scenario, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 1000;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn madelung(r: &str, s: &str, consts: &Constants<f64>) -> QuantumSource<f64> {
    let st = MadelungState::new(ScalarField::parse(r).unwrap(), ScalarField::parse(s).unwrap(), 1e-12);
    QuantumSource::Madelung(MadelungPotential::new(st, consts))
}

/// Random charged scenario with a general mass matrix and potentials that
/// vary in space and time.
fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario<f64> {
    let mut c = || rng.gen_range(-1.0..1.0);
    let l: [[f64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| 0.5 * c()));
    let m: [[f64; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|j| (0..3).map(|k| l[i][k] * l[j][k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 })
    });
    let upper = [m[0][0], m[0][1], m[0][2], m[1][1], m[1][2], m[2][2]].map(ScalarField::constant);
    let a = VectorField::parse([
        &format!("{:.6} + {:.6}*y", c(), 0.2 * c()),
        &format!("{:.6} + {:.6}*z", c(), 0.2 * c()),
        &format!("{:.6} + {:.6}*t", c(), 0.2 * c()),
    ])
    .unwrap();
    let v = format!("-4 + {:.6} + {:.6}*x^2 + {:.6}*t*y", c(), 0.3 * c(), 0.1 * c());
    let consts = Constants::new(1.0, 1.0, 1.0 + 0.5 * c(), 1.0).unwrap();
    Scenario::new(consts)
        .with_mass(MassMatrix::general(upper))
        .with_vector_potential(a)
        .with_potential(ScalarField::parse(&v).unwrap())
}

struct Sample {
    scenario: Scenario<f64>,
    pm: PointMetric<f64>,
    y: [f64; 4],
}

fn samples(seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(SAMPLES);
    while out.len() < SAMPLES {
        let scenario = random_scenario(&mut rng);
        let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-0.5..0.5));
        let Ok(a) = assemble_associated_metric(&scenario, &x) else { continue };
        let pm = PointMetric::new(x, a).unwrap();
        let y = [rng.gen_range(0.1..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        out.push(Sample { scenario, pm, y });
    }
    out
}

fn hessian_consistency(set: &[Sample]) -> Outcome {
    let mut worst = 0.0f64;
    for s in set {
        let g = s.pm.fundamental_tensor(&s.y).unwrap();
        let h = fd_hessian_f2(&s.pm.a, &s.y).unwrap();
        worst = worst.max(relative_gap(&g, &h));
    }
    outcome(worst < 1e-6, format!("max relative gap {worst:.3e} (< 1e-6)"))
}

fn determinant_identity(set: &[Sample]) -> Outcome {
    let (mut stated, mut corrected) = (0.0f64, 0.0f64);
    for s in set {
        stated = stated.max(s.pm.det_identity_gap(&s.y).unwrap());
        corrected = corrected.max(s.pm.kropina_determinant_gap(&s.y).unwrap());
    }
    outcome(
        stated < 1e-8,
        format!("stated identity max gap {stated:.3e} (< 1e-8); 8b²(α/β)^10 det a max gap {corrected:.3e}"),
    )
}

fn homogeneity(set: &[Sample]) -> Outcome {
    let mut worst = 0.0f64;
    for s in set {
        let f = s.pm.f(&s.y).unwrap();
        let g = s.pm.fundamental_tensor(&s.y).unwrap();
        for lambda in [0.5, 2.0, 7.0] {
            let ly = s.y.map(|v| v * lambda);
            worst = worst.max((s.pm.f(&ly).unwrap() - lambda * f).abs() / (lambda * f));
            worst = worst.max(relative_gap(&s.pm.fundamental_tensor(&ly).unwrap(), &g));
        }
        let euler = quad_form(&g, &s.y);
        worst = worst.max((euler - f * f).abs() / (f * f));
    }
    outcome(worst < 1e-10, format!("max relative error {worst:.3e} (< 1e-10)"))
}

fn zermelo(set: &[Sample]) -> Outcome {
    let (mut unit, mut round) = (0.0f64, 0.0f64);
    for s in set {
        let nav = navigation_from_metric(&s.pm.a, &s.pm.x).unwrap();
        let r = zermelo_condition_residual(&s.pm, &nav, &s.y).unwrap();
        unit = unit.max(nav.unit_residual).max(r.unit);
        let back = inverse_navigation(&nav.h, &nav.w).unwrap();
        round = round.max(max_abs(&sub(&back.a, &s.pm.a)));
        let b = [1.0, 0.0, 0.0, 0.0];
        for i in 0..4 {
            round = round.max((back.b[i] - b[i]).abs());
        }
    }
    outcome(
        unit < 1e-9 && round < 1e-10,
        format!("unit residual {unit:.3e} (< 1e-9), round trip {round:.3e} (< 1e-10)"),
    )
}

/// Kropina geodesic from `(0, r0)` with `y = (1, v0)`, reparametrized by
/// time, against the Newton trajectory with the same data.
fn compare_with_newton(s: &Scenario<f64>, r0: [f64; 3], v0: [f64; 3]) -> (f64, f64) {
    let x0 = [0.0, r0[0], r0[1], r0[2]];
    let y0 = [1.0, v0[0], v0[1], v0[2]];
    let opts = IntegrationOptions::new(1e-3, 20_000).with_stop_time(5.0);
    let geo = integrate_finsler_geodesic(s, x0, y0, &opts).unwrap();
    assert_eq!(geo.status, TrajectoryStatus::Completed);
    let newton = integrate_newton(s, NewtonState { t: 0.0, r: r0, v: v0 }, &opts).unwrap();
    let pg = reparametrize_by_time(&geo).unwrap();
    let pn = reparametrize_by_time(&newton).unwrap();
    let dev = trajectory_deviation(&pg, &pn, Some((0.0, 5.0))).unwrap();
    let el = euler_lagrange_residual(s, &pg).unwrap();
    (dev, el.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())))
}

fn geodesic_lagrangian() -> Outcome {
    let c = Constants::default();
    let ground = Scenario::new(c)
        .with_potential(ScalarField::parse("0.5*x^2 - 1").unwrap())
        .with_quantum(madelung("exp(-0.5*x^2)", "0", &c));
    let (dev_g, el_g) = compare_with_newton(&ground, [0.7, 0.0, 0.0], [0.0; 3]);
    let moving = Scenario::new(c).with_potential(ScalarField::parse("0.5*x^2 - 2").unwrap());
    let (dev_m, el_m) = compare_with_newton(&moving, [1.0, 0.0, 0.0], [0.0; 3]);
    let dev = dev_g.max(dev_m);
    let el = el_g.max(el_m);
    outcome(
        dev < 1e-4 && el < 1e-6,
        format!(
            "deviation {dev:.3e} (< 1e-4), EL residual {el:.3e} (< 1e-6); ground state {dev_g:.1e}/{el_g:.1e}, oscillator {dev_m:.1e}/{el_m:.1e}"
        ),
    )
}

fn constant_q() -> Outcome {
    let s = Scenario::neutral(2.0, ScalarField::constant(-1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut spray_max = 0.0f64;
    for _ in 0..100 {
        let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let y = [rng.gen_range(0.1..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        for flavor in [SprayFlavor::Kropina, SprayFlavor::Riemann] {
            spray_max = spray(&s, flavor, &x, &y).unwrap().iter().fold(spray_max, |m, v| m.max(v.abs()));
        }
    }
    let x0 = [0.0, 0.3, -0.2, 0.1];
    let y0 = [1.0, 0.4, -0.3, 0.2];
    let h = 1e-3;
    let tr = integrate_finsler_geodesic(&s, x0, y0, &IntegrationOptions::new(h, 10_000)).unwrap();
    let mut line = 0.0f64;
    for (n, smp) in tr.samples.iter().enumerate() {
        let tau = n as f64 * h;
        for i in 0..4 {
            line = line.max((smp.x[i] - (x0[i] + tau * y0[i])).abs());
        }
    }
    let lattice = Domain::new([-1.0; 4], [1.0; 4]).unwrap().lattice(5);
    let killing = killing_check_scenario(&s, &lattice).unwrap().is_killing;
    let varying = Scenario::neutral(2.0, ScalarField::parse("-(1 + x^2)").unwrap());
    let varying_killing = killing_check_scenario(&varying, &lattice).unwrap().is_killing;
    outcome(
        spray_max < 1e-12 && line < 1e-10 && tr.len() == 10_001 && killing && !varying_killing,
        format!(
            "spray {spray_max:.1e} (< 1e-12), straight-line deviation {line:.3e} (< 1e-10), Killing(Q=-1) {killing}, Killing(Q=-(1+x²)) {varying_killing}"
        ),
    )
}

fn stationarity() -> Outcome {
    let c = Constants::default();
    let s = Scenario::new(c)
        .with_potential(ScalarField::parse("0.5*x^2").unwrap())
        .with_quantum(madelung("exp(-0.5*x^2)", "0", &c));
    let mut worst = 0.0f64;
    for p in Domain::new([-1.0, -3.0, -3.0, -3.0], [1.0, 3.0, 3.0, 3.0]).unwrap().lattice(9) {
        worst = worst.max((s.total_potential(&p).unwrap() - 0.5).abs());
    }
    let mut vmax = 0.0f64;
    for r in [-1.3, 0.0, 0.7] {
        let tr = integrate_newton(&s, NewtonState { t: 0.0, r: [r, 0.2, -0.4], v: [0.0; 3] }, &IntegrationOptions::new(1e-3, 10_000))
            .unwrap();
        for smp in &tr.samples {
            vmax = vmax.max(norm(&[smp.y[1], smp.y[2], smp.y[3]]));
        }
    }
    outcome(worst < 1e-8 && vmax < 1e-8, format!("|V+V_Q-1/2| {worst:.3e} (< 1e-8), |v| {vmax:.3e} (< 1e-8)"))
}

fn classical_closed_forms() -> Outcome {
    let sho = Scenario::new(Constants::default()).with_potential(ScalarField::parse("0.5*x^2").unwrap());
    let n = 10_000;
    let period = 2.0 * std::f64::consts::PI;
    let h = period / n as f64;
    let tr = integrate_newton(&sho, NewtonState { t: 0.0, r: [1.0, 0.0, 0.0], v: [0.0; 3] }, &IntegrationOptions::new(h, n))
        .unwrap();
    let mut sho_err = 0.0f64;
    for smp in &tr.samples {
        sho_err = sho_err.max((smp.x[1] - smp.x[0].cos()).abs()).max((smp.y[1] + smp.x[0].sin()).abs());
    }
    // uniform B = 2 along z: radius m v c / (e B) = 0.75 for v = 1.5
    let b = 2.0;
    let cyc = Scenario::new(Constants::default())
        .with_vector_potential(VectorField::parse([&format!("-{}*y", b / 2.0), &format!("{}*x", b / 2.0), "0"]).unwrap());
    let v = 1.5;
    let radius = v / b;
    let steps = 10_000;
    let h = (2.0 * std::f64::consts::PI / b) / steps as f64;
    let tr = integrate_newton(&cyc, NewtonState { t: 0.0, r: [0.0; 3], v: [v, 0.0, 0.0] }, &IntegrationOptions::new(h, steps))
        .unwrap();
    // force e v × B / c at the start points along −y
    let centre = [0.0, -radius];
    let mut cyc_err = 0.0f64;
    for smp in &tr.samples {
        let d = ((smp.x[1] - centre[0]).powi(2) + (smp.x[2] - centre[1]).powi(2)).sqrt();
        cyc_err = cyc_err.max((d - radius).abs());
    }
    let closed = tr.last().unwrap();
    let closure = (closed.x[1].powi(2) + closed.x[2].powi(2)).sqrt();
    outcome(
        sho_err < 1e-6 && cyc_err < 1e-6 && closure < 1e-6,
        format!("SHO error {sho_err:.3e} (< 1e-6), cyclotron radius error {cyc_err:.3e} (< 1e-6), orbit closure {closure:.1e}"),
    )
}

fn charged() -> Scenario<f64> {
    Scenario::new(Constants::default())
        .with_potential(ScalarField::parse("0.1*(x^2 + y^2) - 2").unwrap())
        .with_vector_potential(VectorField::parse(["-0.1*y", "0.1*x", "0"]).unwrap())
}

fn conservation() -> Outcome {
    let s = charged();
    let x0 = [0.0, 0.3, 0.0, 0.1];
    let y0 = [1.0, 0.1, 0.2, 0.0];
    let opts = IntegrationOptions::new(1e-3, 10_000);
    let k = integrate_finsler_geodesic(&s, x0, y0, &opts).unwrap();
    let r = integrate_riemann_geodesic(&s, x0, y0, &opts).unwrap();
    let drift_f = conserved_drift(&s, &k).unwrap();
    let drift_a = conserved_drift(&s, &r).unwrap();
    let end = |h: f64| {
        let n = (4.0 / h).round() as usize;
        integrate_finsler_geodesic(&s, x0, y0, &IntegrationOptions::new(h, n)).unwrap().last().unwrap().x
    };
    let (e1, e2, e3) = (end(0.2), end(0.1), end(0.05));
    let diff = |p: [f64; 4], q: [f64; 4]| norm(&std::array::from_fn::<f64, 4, _>(|i| p[i] - q[i]));
    let order = (diff(e1, e2) / diff(e2, e3)).log2();
    let ok = k.status == TrajectoryStatus::Completed
        && r.status == TrajectoryStatus::Completed
        && drift_f < 1e-8
        && drift_a < 1e-8
        && (3.7..=4.3).contains(&order);
    outcome(ok, format!("F drift {drift_f:.3e}, α drift {drift_a:.3e} (< 1e-8), RK4 order {order:.3} (in [3.7, 4.3])"))
}

fn s_quantities(set: &[Sample]) -> Outcome {
    let c = Constants::default();
    let named: Vec<Scenario<f64>> = vec![
        charged(),
        Scenario::neutral(2.0, ScalarField::constant(-1.0)),
        Scenario::new(c).with_potential(ScalarField::parse("0.5*x^2 - 1").unwrap()).with_quantum(madelung(
            "exp(-0.5*x^2)",
            "0",
            &c,
        )),
        Scenario::new(c)
            .with_potential(ScalarField::parse("-3 + 0.2*sin(t)*x").unwrap())
            .with_vector_potential(VectorField::parse(["0.1*t*y", "-0.3*z", "0.2*t^2"]).unwrap()),
    ];
    let mut s_max = 0.0f64;
    let pts = Domain::new([-0.5; 4], [0.5; 4]).unwrap().lattice(3);
    for sc in &named {
        for p in &pts {
            s_max = s_max.max(beta_quantities(sc, p).unwrap().max_s());
        }
    }
    for smp in set.iter().take(200) {
        s_max = s_max.max(beta_quantities(&smp.scenario, &smp.pm.x).unwrap().max_s());
    }
    // position-dependent mass with constant Q and no A: Γ̄⁰ ≡ 0
    let upper = ["1 + 0.3*x^2", "0.1*y", "0", "1.2 + 0.2*sin(z)", "0.05*x*z", "0.8 + 0.1*y^2"]
        .map(|e| ScalarField::parse(e).unwrap());
    let flat = Scenario::new(c).with_mass(MassMatrix::general(upper)).with_potential(ScalarField::constant(-1.5));
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut proj, mut g0) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let y = [rng.gen_range(0.1..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let table = christoffel(&flat, &x).unwrap();
        g0 = g0.max(table.gamma[0].iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())));
        let gk = kropina_spray(&flat, &x, &y).unwrap();
        let gr = riemann_spray(&table, &y);
        for i in 0..4 {
            proj = proj.max((gk[i] - gr[i]).abs());
        }
    }
    outcome(
        s_max < 1e-10 && proj < 1e-10,
        format!("max|s_IJ| {s_max:.1e} (< 1e-10), Kropina−Riemann spray {proj:.1e} (< 1e-10) with max|Γ̄⁰| {g0:.1e}"),
    )
}

fn main() {
    let started = Instant::now();
    let set = samples(2024);
    let prep = started.elapsed();
    let timed = |f: &dyn Fn() -> Outcome, budget: Option<Duration>| {
        let t = Instant::now();
        let mut o = f();
        let took = t.elapsed();
        if let Some(b) = budget {
            o.passed &= took < b;
            o.detail.push_str(&format!(", {:.2}s (< {}s)", took.as_secs_f64(), b.as_secs()));
        } else {
            o.detail.push_str(&format!(", {:.2}s", took.as_secs_f64()));
        }
        o
    };
    let ten = Some(Duration::from_secs(10));
    let results = [
        ("1 Hessian consistency", timed(&|| hessian_consistency(&set), ten)),
        ("2 determinant identity", timed(&|| determinant_identity(&set), ten)),
        ("3 homogeneity and Euler identity", timed(&|| homogeneity(&set), None)),
        ("4 Zermelo navigation", timed(&|| zermelo(&set), None)),
        ("5 geodesic-Lagrangian equivalence", timed(&geodesic_lagrangian, Some(Duration::from_secs(30)))),
        ("6 constant-Q straight lines", timed(&constant_q, None)),
        ("7 Bohmian stationarity", timed(&stationarity, None)),
        ("8 classical closed forms", timed(&classical_closed_forms, None)),
        ("9 conservation and RK4 order", timed(&conservation, None)),
        ("10 s-quantities and projective equivalence", timed(&|| s_quantities(&set), None)),
    ];
    println!("sample set: {SAMPLES} random scenarios, built in {:.2}s", prep.as_secs_f64());
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
