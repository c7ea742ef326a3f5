//! Fixed-step RK4 integration of Kropina and Riemann geodesics and of the
//! Newton–Bohm equation of motion, plus time reparametrization.

use serde::Serialize;

use crate::connection::{christoffel_with_metric, kropina_spray_at, SprayFlavor};
use crate::error::{Error, Result};
use crate::geometry::{assemble_associated_metric, check_beta};
use crate::linalg::{norm, quad_form, solve};
use crate::scalar::Real;
use crate::scenario::{MetricField, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    HitNode,
    LeftDomain,
    BetaSingular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Kropina,
    Riemann,
    Newton,
}

impl From<SprayFlavor> for Flavor {
    fn from(f: SprayFlavor) -> Self {
        match f {
            SprayFlavor::Kropina => Flavor::Kropina,
            SprayFlavor::Riemann => Flavor::Riemann,
        }
    }
}

/// One retained step: parameter, position, tangent, and the tangent's
/// parameter derivative when the integrator knows it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample<T> {
    pub param: T,
    pub x: [T; 4],
    pub y: [T; 4],
    pub dy: Option<[T; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub flavor: Flavor,
    pub samples: Vec<TrajectorySample<T>>,
    pub status: TrajectoryStatus,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectorySample<T>> {
        self.samples.last()
    }
}

/// How to rescale the initial tangent vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Raw,
    /// `F(x₀, y₀) = 1`
    FUnit,
    /// `α(x₀, y₀) = 1`
    AlphaUnit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions<T> {
    pub step: T,
    pub max_steps: usize,
    pub normalization: Normalization,
    /// Stop once coordinate time `x⁰` reaches this value.
    pub stop_time: Option<T>,
}

impl<T: Real> IntegrationOptions<T> {
    pub fn new(step: T, max_steps: usize) -> Self {
        Self { step, max_steps, normalization: Normalization::Raw, stop_time: None }
    }

    pub fn with_normalization(mut self, n: Normalization) -> Self {
        self.normalization = n;
        self
    }

    pub fn with_stop_time(mut self, t: T) -> Self {
        self.stop_time = Some(t);
        self
    }
}

/// Position and velocity at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonState<T> {
    pub t: T,
    pub r: [T; 3],
    pub v: [T; 3],
}

type State<T> = [T; 8];

fn split<T: Real>(s: &State<T>) -> ([T; 4], [T; 4]) {
    (std::array::from_fn(|i| s[i]), std::array::from_fn(|i| s[i + 4]))
}

fn join<T: Real>(x: &[T; 4], y: &[T; 4]) -> State<T> {
    std::array::from_fn(|i| if i < 4 { x[i] } else { y[i - 4] })
}

fn axpy<T: Real>(s: &State<T>, h: T, k: &State<T>) -> State<T> {
    std::array::from_fn(|i| s[i] + h * k[i])
}

fn stop_status(e: &Error) -> Option<TrajectoryStatus> {
    match e {
        Error::QuantumPotentialSingular { .. } | Error::UndefinedPhase { .. } => Some(TrajectoryStatus::HitNode),
        Error::DomainBoundary { .. } => Some(TrajectoryStatus::LeftDomain),
        Error::KropinaSingular { .. } => Some(TrajectoryStatus::BetaSingular),
        _ => None,
    }
}

/// Classical RK4 on `ṡ = f(s)`. `f` returns the full state derivative;
/// `keep` decides whether a new state may be retained.
fn rk4<T: Real>(
    flavor: Flavor,
    s0: State<T>,
    opts: &IntegrationOptions<T>,
    f: impl Fn(&State<T>) -> Result<State<T>>,
    keep: impl Fn(&State<T>) -> Option<TrajectoryStatus>,
) -> Result<Trajectory<T>> {
    let h = opts.step;
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidInitial("step must be positive".into()));
    }
    let mut samples = Vec::with_capacity(opts.max_steps.min(1 << 20) + 1);
    let mut s = s0;
    let mut param = T::zero();
    let finish = |samples, status| Ok(Trajectory { flavor, samples, status });
    let mut k1 = f(&s)?;
    for n in 0..=opts.max_steps {
        let (x, y) = split(&s);
        let (_, dy) = split(&k1);
        samples.push(TrajectorySample { param, x, y, dy: Some(dy) });
        if n == opts.max_steps || opts.stop_time.is_some_and(|ts| x[0] >= ts) {
            break;
        }
        let step = || -> Result<(State<T>, State<T>)> {
            let k2 = f(&axpy(&s, h * T::half(), &k1))?;
            let k3 = f(&axpy(&s, h * T::half(), &k2))?;
            let k4 = f(&axpy(&s, h, &k3))?;
            let next: State<T> = std::array::from_fn(|i| {
                s[i] + h / T::lit(6.0) * (k1[i] + T::two() * (k2[i] + k3[i]) + k4[i])
            });
            if let Some(status) = keep(&next) {
                return Err(status_error(status));
            }
            let k_next = f(&next)?;
            Ok((next, k_next))
        };
        match step() {
            Ok((next, k_next)) => {
                s = next;
                k1 = k_next;
                param = T::from_usize(n + 1).unwrap() * h;
            }
            Err(e) => match stop_status(&e) {
                Some(status) => return finish(samples, status),
                None => return Err(e),
            },
        }
    }
    finish(samples, TrajectoryStatus::Completed)
}

fn status_error(status: TrajectoryStatus) -> Error {
    match status {
        TrajectoryStatus::LeftDomain => Error::DomainBoundary { point: [f64::NAN; 4] },
        TrajectoryStatus::HitNode => Error::QuantumPotentialSingular { point: [f64::NAN; 4] },
        _ => Error::KropinaSingular { beta: f64::NAN, threshold: 0.0 },
    }
}

fn normalize<T: Real, M: MetricField<T> + ?Sized>(
    field: &M,
    x0: &[T; 4],
    y0: [T; 4],
    n: Normalization,
) -> Result<[T; 4]> {
    let a = assemble_associated_metric(field, x0)?;
    let alpha2 = quad_form(&a, &y0);
    let scale = match n {
        Normalization::Raw => return Ok(y0),
        Normalization::FUnit => y0[0] / alpha2,
        Normalization::AlphaUnit => T::one() / alpha2.sqrt(),
    };
    Ok(y0.map(|v| v * scale))
}

fn check_initial<T: Real, M: MetricField<T> + ?Sized>(field: &M, x0: &[T; 4], y0: &[T; 4]) -> Result<()> {
    if x0.iter().chain(y0).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInitial("non-finite initial data".into()));
    }
    if check_beta(y0).is_err() {
        return Err(Error::InvalidInitial(format!("y0[0] = {} must be positive", y0[0])));
    }
    if !field.domain().contains(x0) {
        return Err(Error::InvalidInitial("initial point outside the domain".into()));
    }
    Ok(())
}

/// Integrates `d²x/dτ² + 2G(x, dx/dτ) = 0` for the chosen spray.
pub fn integrate_geodesic<T: Real, M: MetricField<T> + ?Sized>(
    field: &M,
    flavor: SprayFlavor,
    x0: [T; 4],
    y0: [T; 4],
    opts: &IntegrationOptions<T>,
) -> Result<Trajectory<T>> {
    check_initial(field, &x0, &y0)?;
    let y0 = normalize(field, &x0, y0, opts.normalization)?;
    let domain = field.domain();
    let f = |s: &State<T>| -> Result<State<T>> {
        let (x, y) = split(s);
        let (pm, table) = christoffel_with_metric(field, &x)?;
        let g = match flavor {
            SprayFlavor::Kropina => kropina_spray_at(&pm, &table, &y)?,
            SprayFlavor::Riemann => {
                check_beta(&y)?;
                table.contract(&y)
            }
        };
        Ok(join(&y, &g.map(|v| -T::two() * v)))
    };
    let keep = |s: &State<T>| -> Option<TrajectoryStatus> {
        let (x, y) = split(s);
        if s.iter().any(|v| !v.is_finite()) || !domain.contains(&x) {
            Some(TrajectoryStatus::LeftDomain)
        } else if check_beta(&y).is_err() {
            Some(TrajectoryStatus::BetaSingular)
        } else {
            None
        }
    };
    rk4(flavor.into(), join(&x0, &y0), opts, f, keep)
}

pub fn integrate_finsler_geodesic<T: Real, M: MetricField<T> + ?Sized>(
    field: &M,
    x0: [T; 4],
    y0: [T; 4],
    opts: &IntegrationOptions<T>,
) -> Result<Trajectory<T>> {
    integrate_geodesic(field, SprayFlavor::Kropina, x0, y0, opts)
}

pub fn integrate_riemann_geodesic<T: Real, M: MetricField<T> + ?Sized>(
    field: &M,
    x0: [T; 4],
    y0: [T; 4],
    opts: &IntegrationOptions<T>,
) -> Result<Trajectory<T>> {
    integrate_geodesic(field, SprayFlavor::Riemann, x0, y0, opts)
}

/// Acceleration from the Euler–Lagrange equations of
/// `L = ½m_ij vⁱvʲ + (e/c)Aᵢvⁱ − (eφ + V + V_Q)`; for constant mass this is
/// `m a = eE + (e/c)v×B − ∇(V + V_Q)`.
pub fn newton_acceleration<T: Real>(scenario: &Scenario<T>, x: &[T; 4], v: &[T; 3]) -> Result<[T; 3]> {
    let m = scenario.mass.value(x)?;
    let dm = scenario.mass.derivatives(x)?;
    let grad_u = scenario.total_potential_gradient(x)?;
    let jac = scenario.vector_potential.jacobian(x)?;
    let k = scenario.consts.coupling();
    let rhs: [T; 3] = std::array::from_fn(|i| {
        let mut f = -grad_u[i + 1];
        for j in 0..3 {
            f += k * jac[j][i + 1] * v[j];
            f -= k * jac[i][j + 1] * v[j];
            let mut dmij = dm[0][i][j];
            for (kk, vk) in v.iter().enumerate() {
                f += T::half() * dm[i + 1][j][kk] * v[j] * *vk;
                dmij += dm[kk + 1][i][j] * *vk;
            }
            f -= dmij * v[j];
        }
        f - k * jac[i][0]
    });
    solve(&m, &rhs).ok_or(Error::SingularMatrix)
}

/// Integrates the Newton–Bohm equation in physical time. Samples carry
/// `x = (t, r)`, `y = (1, v)`, `dy = (0, a)`.
pub fn integrate_newton<T: Real>(
    scenario: &Scenario<T>,
    initial: NewtonState<T>,
    opts: &IntegrationOptions<T>,
) -> Result<Trajectory<T>> {
    let NewtonState { t, r, v } = initial;
    let x0 = [t, r[0], r[1], r[2]];
    if x0.iter().chain(&v).any(|c| !c.is_finite()) {
        return Err(Error::InvalidInitial("non-finite initial data".into()));
    }
    if !scenario.domain.contains(&x0) {
        return Err(Error::InvalidInitial("initial point outside the domain".into()));
    }
    let domain = scenario.domain;
    let f = |s: &State<T>| -> Result<State<T>> {
        let (x, y) = split(s);
        let a = newton_acceleration(scenario, &x, &[y[1], y[2], y[3]])?;
        Ok([T::one(), y[1], y[2], y[3], T::zero(), a[0], a[1], a[2]])
    };
    let keep = |s: &State<T>| -> Option<TrajectoryStatus> {
        let (x, _) = split(s);
        (s.iter().any(|c| !c.is_finite()) || !domain.contains(&x)).then_some(TrajectoryStatus::LeftDomain)
    };
    let y0 = [T::one(), v[0], v[1], v[2]];
    let mut traj = rk4(Flavor::Newton, join(&x0, &y0), opts, f, keep)?;
    for s in &mut traj.samples {
        s.param = s.x[0];
    }
    Ok(traj)
}

/// Largest relative drift of the conserved quantity (F for Kropina, α for
/// Riemann) along a geodesic.
pub fn conserved_drift<T: Real, M: MetricField<T> + ?Sized>(field: &M, traj: &Trajectory<T>) -> Result<T> {
    let quantity = |s: &TrajectorySample<T>| -> Result<T> {
        let a = field.metric(&s.x)?;
        let alpha2 = quad_form(&a, &s.y);
        Ok(match traj.flavor {
            Flavor::Kropina => alpha2 / s.y[0],
            Flavor::Riemann => alpha2.sqrt(),
            Flavor::Newton => return Err(Error::InvalidInitial("no conserved geodesic quantity".into())),
        })
    };
    let Some(first) = traj.samples.first() else {
        return Ok(T::zero());
    };
    let q0 = quantity(first)?;
    let mut worst = T::zero();
    for s in &traj.samples {
        worst = worst.max(((quantity(s)? - q0) / q0).abs());
    }
    Ok(worst)
}

/// Spatial path parametrized by coordinate time, interpolated with cubic
/// Hermite segments through the knot velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePath<T> {
    pub t: Vec<T>,
    pub r: Vec<[T; 3]>,
    pub v: Vec<[T; 3]>,
    /// `d²r/dt²` at the knots when the source trajectory carried it.
    pub a: Option<Vec<[T; 3]>>,
}

impl<T: Real> TimePath<T> {
    pub fn window(&self) -> Option<(T, T)> {
        Some((*self.t.first()?, *self.t.last()?))
    }

    fn segment(&self, t: T) -> Option<(usize, T, T)> {
        let (t0, t1) = self.window()?;
        if t < t0 || t > t1 {
            return None;
        }
        let n = self.t.len();
        if n == 1 {
            return Some((0, T::zero(), T::zero()));
        }
        let k = self.t.partition_point(|&tk| tk <= t).clamp(1, n - 1) - 1;
        let dt = self.t[k + 1] - self.t[k];
        Some((k, (t - self.t[k]) / dt, dt))
    }

    pub fn position(&self, t: T) -> Option<[T; 3]> {
        let (k, s, dt) = self.segment(t)?;
        if dt == T::zero() {
            return Some(self.r[k]);
        }
        let (s2, s3) = (s * s, s * s * s);
        let two = T::two();
        let three = T::lit(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        Some(std::array::from_fn(|i| {
            h00 * self.r[k][i] + h10 * dt * self.v[k][i] + h01 * self.r[k + 1][i] + h11 * dt * self.v[k + 1][i]
        }))
    }

    pub fn velocity(&self, t: T) -> Option<[T; 3]> {
        let (k, s, dt) = self.segment(t)?;
        if dt == T::zero() {
            return Some(self.v[k]);
        }
        let six = T::lit(6.0);
        let s2 = s * s;
        let d00 = (six * s2 - six * s) / dt;
        let d10 = T::lit(3.0) * s2 - T::lit(4.0) * s + T::one();
        let d01 = -d00;
        let d11 = T::lit(3.0) * s2 - T::two() * s;
        Some(std::array::from_fn(|i| {
            d00 * self.r[k][i] + d10 * self.v[k][i] + d01 * self.r[k + 1][i] + d11 * self.v[k + 1][i]
        }))
    }

    /// Knot accelerations linearly interpolated when available, otherwise
    /// the Hermite second derivative.
    pub fn acceleration(&self, t: T) -> Option<[T; 3]> {
        let (k, s, dt) = self.segment(t)?;
        if let Some(a) = &self.a {
            if dt == T::zero() {
                return Some(a[k]);
            }
            return Some(std::array::from_fn(|i| a[k][i] + s * (a[k + 1][i] - a[k][i])));
        }
        if dt == T::zero() {
            return None;
        }
        let six = T::lit(6.0);
        let d00 = (T::lit(12.0) * s - six) / (dt * dt);
        let d10 = (six * s - T::lit(4.0)) / dt;
        let d11 = (six * s - T::two()) / dt;
        Some(std::array::from_fn(|i| {
            d00 * (self.r[k][i] - self.r[k + 1][i]) + d10 * self.v[k][i] + d11 * self.v[k + 1][i]
        }))
    }
}

/// Resamples a trajectory against coordinate time `x⁰`:
/// `v = (dxⁱ/dτ)/(dx⁰/dτ)`.
pub fn reparametrize_by_time<T: Real>(traj: &Trajectory<T>) -> Result<TimePath<T>> {
    let n = traj.samples.len();
    let mut path = TimePath {
        t: Vec::with_capacity(n),
        r: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        a: traj.samples.iter().all(|s| s.dy.is_some()).then(|| Vec::with_capacity(n)),
    };
    for (index, s) in traj.samples.iter().enumerate() {
        let y0 = s.y[0];
        if !(y0 > T::zero()) || path.t.last().is_some_and(|&prev| s.x[0] <= prev) {
            return Err(Error::NonMonotoneTime { index });
        }
        path.t.push(s.x[0]);
        path.r.push([s.x[1], s.x[2], s.x[3]]);
        let v: [T; 3] = std::array::from_fn(|i| s.y[i + 1] / y0);
        path.v.push(v);
        if let (Some(acc), Some(dy)) = (path.a.as_mut(), s.dy) {
            acc.push(std::array::from_fn(|i| (dy[i + 1] - v[i] * dy[0]) / (y0 * y0)));
        }
    }
    Ok(path)
}

/// Max over the shared time window of `|r_A(t) − r_B(t)|`, sampled at the
/// union of both knot sets.
pub fn trajectory_deviation<T: Real>(a: &TimePath<T>, b: &TimePath<T>, window: Option<(T, T)>) -> Result<T> {
    let (a0, a1) = a.window().ok_or(Error::NoOverlap)?;
    let (b0, b1) = b.window().ok_or(Error::NoOverlap)?;
    let (mut lo, mut hi) = (a0.max(b0), a1.min(b1));
    if let Some((w0, w1)) = window {
        lo = lo.max(w0);
        hi = hi.min(w1);
    }
    if lo > hi {
        return Err(Error::NoOverlap);
    }
    let mut worst = T::zero();
    let knots = a.t.iter().chain(&b.t).copied().filter(|&t| t >= lo && t <= hi);
    for t in knots.chain([lo, hi]) {
        let (ra, rb) = (a.position(t).ok_or(Error::NoOverlap)?, b.position(t).ok_or(Error::NoOverlap)?);
        worst = worst.max(norm(&std::array::from_fn::<T, 3, _>(|i| ra[i] - rb[i])));
    }
    Ok(worst)
}
