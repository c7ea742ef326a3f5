//! Potentials and wave-function data evaluated over `(t, x, y, z)`.
//!
//! A [`ScalarField`] has one of three backends: an analytic [`Expr`] with
//! exact symbolic derivatives, a [`GridField`] differentiated by Richardson
//! finite differences, or a closure probed by finite differences.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{ComplexGrid, GridField, GridSpec};
use crate::scalar::{to_f64_array, Real};
use crate::tolerances;

/// Axis-aligned box in extended coordinates. Axes with `lo == hi` are
/// degenerate and accept any coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T> {
    pub lo: [T; 4],
    pub hi: [T; 4],
}

impl<T: Real> Domain<T> {
    pub fn new(lo: [T; 4], hi: [T; 4]) -> Result<Self> {
        if (0..4).any(|ax| !(hi[ax] >= lo[ax])) {
            return Err(Error::InvalidScenario("domain upper corner below lower corner".into()));
        }
        Ok(Self { lo, hi })
    }

    /// A box so large it never clips.
    pub fn unbounded() -> Self {
        let big = T::max_value();
        Self { lo: [-big; 4], hi: [big; 4] }
    }

    pub fn is_degenerate(&self, ax: usize) -> bool {
        self.lo[ax] == self.hi[ax]
    }

    pub fn contains(&self, p: &[T; 4]) -> bool {
        (0..4).all(|ax| self.is_degenerate(ax) || (p[ax] >= self.lo[ax] && p[ax] <= self.hi[ax]))
    }

    pub fn check(&self, p: &[T; 4]) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::DomainBoundary { point: to_f64_array(p) })
        }
    }

    /// Largest finite spatial extent, or one if every spatial axis is degenerate.
    pub fn characteristic_length(&self) -> T {
        let ext = (1..4)
            .map(|ax| self.hi[ax] - self.lo[ax])
            .filter(|e| e.is_finite())
            .fold(T::zero(), T::max);
        if ext > T::zero() {
            ext
        } else {
            T::one()
        }
    }

    /// Regular lattice with `per_axis` points along each non-degenerate finite axis.
    pub fn lattice(&self, per_axis: usize) -> Vec<[T; 4]> {
        let axis_points = |ax: usize| -> Vec<T> {
            let (lo, hi) = (self.lo[ax], self.hi[ax]);
            if self.is_degenerate(ax) || !(hi - lo).is_finite() || per_axis < 2 {
                let mid = if (hi - lo).is_finite() { (lo + hi) * T::half() } else { T::zero() };
                return vec![mid];
            }
            let n = T::from_usize(per_axis - 1).unwrap();
            (0..per_axis)
                .map(|i| lo + (hi - lo) * T::from_usize(i).unwrap() / n)
                .collect()
        };
        let axes: Vec<Vec<T>> = (0..4).map(axis_points).collect();
        let mut out = Vec::new();
        for &t in &axes[0] {
            for &x in &axes[1] {
                for &y in &axes[2] {
                    for &z in &axes[3] {
                        out.push([t, x, y, z]);
                    }
                }
            }
        }
        out
    }
}

/// Expression together with its precomputed first and second partials.
#[derive(Debug, Clone)]
pub struct AnalyticField {
    expr: Expr,
    first: [Expr; 4],
    second: [Expr; 4],
}

impl AnalyticField {
    pub fn new(expr: Expr) -> Self {
        let first: [Expr; 4] = std::array::from_fn(|ax| expr.derivative(ax));
        let second = std::array::from_fn(|ax| first[ax].derivative(ax));
        Self { expr, first, second }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

type ClosureFn<T> = dyn Fn(&[T; 4]) -> Result<T> + Send + Sync;

/// Closure probed by Richardson central differences. A zero probe step
/// marks an axis along which the closure is constant.
pub struct ClosureField<T> {
    f: Box<ClosureFn<T>>,
    probe: [T; 4],
}

impl<T> fmt::Debug for ClosureField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ClosureField")
    }
}

#[derive(Debug, Clone)]
pub enum ScalarField<T> {
    Constant(T),
    Analytic(Arc<AnalyticField>),
    Grid(Arc<GridField<T>>),
    Closure(Arc<ClosureField<T>>),
}

impl<T: Real> Default for ScalarField<T> {
    fn default() -> Self {
        ScalarField::Constant(T::zero())
    }
}

impl<T: Real> ScalarField<T> {
    pub fn constant(v: T) -> Self {
        ScalarField::Constant(v)
    }

    pub fn zero() -> Self {
        ScalarField::Constant(T::zero())
    }

    /// Parses an analytic expression; constant expressions collapse to
    /// [`ScalarField::Constant`].
    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self::from_expr(Expr::parse(src)?))
    }

    pub fn from_expr(expr: Expr) -> Self {
        match expr.as_constant() {
            Some(v) => ScalarField::Constant(T::lit(v)),
            None => ScalarField::Analytic(Arc::new(AnalyticField::new(expr))),
        }
    }

    pub fn from_grid(grid: GridField<T>) -> Self {
        ScalarField::Grid(Arc::new(grid))
    }

    /// Closure backend with probe step `1e-4 · length` on every axis
    /// (never below the cube root of machine epsilon times `length`).
    pub fn closure<F>(length: T, f: F) -> Self
    where
        F: Fn(&[T; 4]) -> Result<T> + Send + Sync + 'static,
    {
        let rel = T::lit(tolerances::ANALYTIC_PROBE_RELATIVE).max(T::epsilon().cbrt());
        Self::closure_with_steps([rel * length; 4], f)
    }

    pub fn closure_with_steps<F>(probe: [T; 4], f: F) -> Self
    where
        F: Fn(&[T; 4]) -> Result<T> + Send + Sync + 'static,
    {
        ScalarField::Closure(Arc::new(ClosureField { f: Box::new(f), probe }))
    }

    pub fn as_expr(&self) -> Option<Expr> {
        match self {
            ScalarField::Constant(v) => Some(Expr::constant(v.as_f64())),
            ScalarField::Analytic(a) => Some(a.expr.clone()),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScalarField::Constant(_))
    }

    pub fn value(&self, p: &[T; 4]) -> Result<T> {
        match self {
            ScalarField::Constant(v) => Ok(*v),
            ScalarField::Analytic(a) => Ok(a.expr.eval(p)),
            ScalarField::Grid(g) => g.value(p),
            ScalarField::Closure(c) => (c.f)(p),
        }
    }

    /// Partial derivative along axis `ax` (0 = t).
    pub fn derivative(&self, ax: usize, p: &[T; 4]) -> Result<T> {
        match self {
            ScalarField::Constant(_) => Ok(T::zero()),
            ScalarField::Analytic(a) => Ok(a.first[ax].eval(p)),
            ScalarField::Grid(g) => g.derivative(ax, p),
            ScalarField::Closure(c) => {
                let h = c.probe[ax];
                if h == T::zero() {
                    return Ok(T::zero());
                }
                let at = |s: T| -> Result<T> {
                    let mut q = *p;
                    q[ax] += s;
                    (c.f)(&q)
                };
                let d1 = (at(h)? - at(-h)?) / (T::two() * h);
                let d2 = (at(T::two() * h)? - at(-T::two() * h)?) / (T::lit(4.0) * h);
                Ok((T::lit(4.0) * d1 - d2) / T::lit(3.0))
            }
        }
    }

    pub fn gradient(&self, p: &[T; 4]) -> Result<[T; 4]> {
        Ok([
            self.derivative(0, p)?,
            self.derivative(1, p)?,
            self.derivative(2, p)?,
            self.derivative(3, p)?,
        ])
    }

    pub fn second_derivative(&self, ax: usize, p: &[T; 4]) -> Result<T> {
        match self {
            ScalarField::Constant(_) => Ok(T::zero()),
            ScalarField::Analytic(a) => Ok(a.second[ax].eval(p)),
            ScalarField::Grid(g) => {
                if ax == 0 {
                    // Slices are linearly interpolated in time.
                    Ok(T::zero())
                } else {
                    g.second_derivative(ax, p)
                }
            }
            ScalarField::Closure(c) => {
                let h = c.probe[ax];
                if h == T::zero() {
                    return Ok(T::zero());
                }
                let at = |s: T| -> Result<T> {
                    let mut q = *p;
                    q[ax] += s;
                    (c.f)(&q)
                };
                let f0 = (c.f)(p)?;
                let d1 = (at(h)? - T::two() * f0 + at(-h)?) / (h * h);
                let h2 = T::two() * h;
                let d2 = (at(h2)? - T::two() * f0 + at(-h2)?) / (h2 * h2);
                Ok((T::lit(4.0) * d1 - d2) / T::lit(3.0))
            }
        }
    }

    /// Spatial Laplacian.
    pub fn laplacian(&self, p: &[T; 4]) -> Result<T> {
        let mut acc = T::zero();
        for ax in 1..4 {
            acc += self.second_derivative(ax, p)?;
        }
        Ok(acc)
    }

    /// Grid spacing per axis for grid backends (zero on constant axes).
    fn natural_steps(&self) -> Option<[T; 4]> {
        match self {
            ScalarField::Grid(g) => {
                let s = g.spec();
                Some(std::array::from_fn(|ax| if s.counts[ax] == 1 { T::zero() } else { s.spacing[ax] }))
            }
            ScalarField::Closure(c) => Some(c.probe),
            _ => None,
        }
    }
}

/// Magnetic vector potential `A = (A₁, A₂, A₃)`.
#[derive(Debug, Clone)]
pub struct VectorField<T> {
    pub components: [ScalarField<T>; 3],
}

impl<T: Real> Default for VectorField<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> VectorField<T> {
    pub fn new(components: [ScalarField<T>; 3]) -> Self {
        Self { components }
    }

    pub fn zero() -> Self {
        Self { components: [ScalarField::zero(), ScalarField::zero(), ScalarField::zero()] }
    }

    pub fn parse(src: [&str; 3]) -> Result<Self> {
        Ok(Self::new([
            ScalarField::parse(src[0])?,
            ScalarField::parse(src[1])?,
            ScalarField::parse(src[2])?,
        ]))
    }

    pub fn is_zero(&self) -> bool {
        self.components
            .iter()
            .all(|c| matches!(c, ScalarField::Constant(v) if *v == T::zero()))
    }

    pub fn value(&self, p: &[T; 4]) -> Result<[T; 3]> {
        Ok([
            self.components[0].value(p)?,
            self.components[1].value(p)?,
            self.components[2].value(p)?,
        ])
    }

    /// `jac[i][k] = ∂A_i/∂x^k` with `k = 0` the time axis.
    pub fn jacobian(&self, p: &[T; 4]) -> Result<[[T; 4]; 3]> {
        Ok([
            self.components[0].gradient(p)?,
            self.components[1].gradient(p)?,
            self.components[2].gradient(p)?,
        ])
    }

    pub fn divergence(&self, p: &[T; 4]) -> Result<T> {
        let j = self.jacobian(p)?;
        Ok(j[0][1] + j[1][2] + j[2][3])
    }

    /// `∇ × A`.
    pub fn curl(&self, p: &[T; 4]) -> Result<[T; 3]> {
        let j = self.jacobian(p)?;
        Ok([j[2][2] - j[1][3], j[0][3] - j[2][1], j[1][1] - j[0][2]])
    }
}

/// Physical constants in scenario units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants<T> {
    pub hbar: T,
    pub mass: T,
    pub charge: T,
    pub c: T,
}

impl<T: Real> Default for Constants<T> {
    fn default() -> Self {
        Self { hbar: T::one(), mass: T::one(), charge: T::one(), c: T::one() }
    }
}

impl<T: Real> Constants<T> {
    pub fn new(hbar: T, mass: T, charge: T, c: T) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("mass", mass), ("charge", charge), ("c", c)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidScenario(format!("constant `{name}` must be positive")));
            }
        }
        Ok(Self { hbar, mass, charge, c })
    }

    /// `e/c`
    pub fn coupling(&self) -> T {
        self.charge / self.c
    }
}

/// Madelung pair `Ψ = R exp(iS/ħ)`.
#[derive(Debug, Clone)]
pub struct MadelungState<T> {
    pub amplitude: ScalarField<T>,
    pub phase: ScalarField<T>,
    /// Absolute amplitude below which a point is nodal.
    pub node_threshold: T,
}

impl<T: Real> MadelungState<T> {
    pub fn new(amplitude: ScalarField<T>, phase: ScalarField<T>, node_threshold: T) -> Self {
        Self { amplitude, phase, node_threshold }
    }

    /// Sets the nodal threshold relative to max |R| sampled on `domain`.
    pub fn on_domain(amplitude: ScalarField<T>, phase: ScalarField<T>, domain: &Domain<T>) -> Result<Self> {
        let mut max_r = T::zero();
        for p in domain.lattice(17) {
            if let Ok(r) = amplitude.value(&p) {
                max_r = max_r.max(r.abs());
            }
        }
        if max_r == T::zero() {
            return Err(Error::AllNodal);
        }
        Ok(Self::new(amplitude, phase, max_r * T::lit(tolerances::NODE_RELATIVE)))
    }

    pub fn is_nodal(&self, p: &[T; 4]) -> Result<bool> {
        Ok(self.amplitude.value(p)? < self.node_threshold)
    }
}

/// Output of [`madelung_decompose`]: amplitude and unwrapped phase on the
/// input grid, with nodal samples flagged.
#[derive(Debug, Clone)]
pub struct MadelungGrid<T> {
    pub amplitude: GridField<T>,
    /// Phase action `S`; NaN where `nodal` is set.
    pub phase: GridField<T>,
    pub nodal: Vec<bool>,
    pub node_threshold: T,
}

impl<T: Real> MadelungGrid<T> {
    pub fn into_state(self) -> MadelungState<T> {
        MadelungState::new(
            ScalarField::from_grid(self.amplitude),
            ScalarField::from_grid(self.phase),
            self.node_threshold,
        )
    }

    /// `R exp(iS/ħ)` at every non-nodal sample, `None` at nodes.
    pub fn recompose(&self, hbar: T) -> Vec<Option<Complex<T>>> {
        self.amplitude
            .values()
            .iter()
            .zip(self.phase.values())
            .zip(&self.nodal)
            .map(|((&r, &s), &nodal)| (!nodal).then(|| Complex::from_polar(r, s / hbar)))
            .collect()
    }
}

/// Splits Ψ samples into amplitude `R = |Ψ|` and phase action `S = ħ arg Ψ`.
///
/// The phase is unwrapped along a fixed traversal starting at the lowest
/// corner: each sample is compared with its predecessor along `z`, or along
/// `y` at the start of a `z` row, then `x`, then `t`. Nodal predecessors are
/// skipped by inheriting their own reference phase.
pub fn madelung_decompose<T: Real>(psi: &ComplexGrid<T>, hbar: T) -> Result<MadelungGrid<T>> {
    let spec = psi.spec().clone();
    let values = psi.values();
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidGrid("wave function has non-finite samples".into()));
    }
    let amp: Vec<T> = values.iter().map(|v| v.norm()).collect();
    let max_r = amp.iter().copied().fold(T::zero(), T::max);
    if max_r == T::zero() {
        return Err(Error::AllNodal);
    }
    let threshold = max_r * T::lit(tolerances::NODE_RELATIVE);
    let nodal: Vec<bool> = amp.iter().map(|&r| r < threshold).collect();

    let two_pi = T::TAU();
    let mut reference: Vec<Option<T>> = vec![None; values.len()];
    let mut phase = vec![T::nan(); values.len()];
    for flat in 0..values.len() {
        let idx = spec.unravel(flat);
        let pred = predecessor(idx).map(|p| reference[spec.index(p)]).unwrap_or(None);
        if nodal[flat] {
            reference[flat] = pred;
            continue;
        }
        let raw = values[flat].arg();
        let unwrapped = match pred {
            Some(r) => raw + two_pi * ((r - raw) / two_pi).round(),
            None => raw,
        };
        reference[flat] = Some(unwrapped);
        phase[flat] = unwrapped * hbar;
    }
    Ok(MadelungGrid {
        amplitude: GridField::new(spec.clone(), amp)?,
        phase: GridField::new(spec, phase)?,
        nodal,
        node_threshold: threshold,
    })
}

fn predecessor(idx: [usize; 4]) -> Option<[usize; 4]> {
    let [k, i, j, l] = idx;
    if l > 0 {
        Some([k, i, j, l - 1])
    } else if j > 0 {
        Some([k, i, j - 1, 0])
    } else if i > 0 {
        Some([k, i - 1, 0, 0])
    } else if k > 0 {
        Some([k - 1, 0, 0, 0])
    } else {
        None
    }
}

/// `V_Q = −(ħ²/2m) ΔR/R` at `p`.
pub fn quantum_potential<T: Real>(state: &MadelungState<T>, consts: &Constants<T>, p: &[T; 4]) -> Result<T> {
    let r = state.amplitude.value(p)?;
    if r < state.node_threshold {
        return Err(Error::QuantumPotentialSingular { point: to_f64_array(p) });
    }
    let lap = state.amplitude.laplacian(p)?;
    Ok(-consts.hbar * consts.hbar / (T::two() * consts.mass) * lap / r)
}

/// Quantum potential as a differentiable field.
///
/// For an analytic amplitude the ratio `ΔR/R` is built symbolically so its
/// gradient is exact; otherwise the ratio is probed by finite differences
/// at the amplitude's own grid spacing.
#[derive(Debug, Clone)]
pub struct MadelungPotential<T> {
    state: MadelungState<T>,
    coeff: T,
    ratio: ScalarField<T>,
}

impl<T: Real> MadelungPotential<T> {
    pub fn new(state: MadelungState<T>, consts: &Constants<T>) -> Self {
        let coeff = -consts.hbar * consts.hbar / (T::two() * consts.mass);
        let ratio = match state.amplitude.as_expr() {
            Some(r) => ScalarField::from_expr(r.laplacian().div(r)),
            None => {
                let amp = state.amplitude.clone();
                let steps = amp.natural_steps().unwrap_or([T::lit(1e-4); 4]);
                ScalarField::closure_with_steps(steps, move |p| Ok(amp.laplacian(p)? / amp.value(p)?))
            }
        };
        Self { state, coeff, ratio }
    }

    pub fn state(&self) -> &MadelungState<T> {
        &self.state
    }

    fn check_node(&self, p: &[T; 4]) -> Result<()> {
        if self.state.amplitude.value(p)? < self.state.node_threshold {
            Err(Error::QuantumPotentialSingular { point: to_f64_array(p) })
        } else {
            Ok(())
        }
    }

    pub fn value(&self, p: &[T; 4]) -> Result<T> {
        self.check_node(p)?;
        Ok(self.coeff * self.ratio.value(p)?)
    }

    pub fn gradient(&self, p: &[T; 4]) -> Result<[T; 4]> {
        self.check_node(p)?;
        Ok(self.ratio.gradient(p)?.map(|g| g * self.coeff))
    }

    /// `ΔR/R` at `p`.
    pub fn laplacian_ratio(&self, p: &[T; 4]) -> Result<T> {
        self.check_node(p)?;
        self.ratio.value(p)
    }
}

/// Where the quantum potential comes from.
#[derive(Debug, Clone)]
pub enum QuantumSource<T> {
    Madelung(MadelungPotential<T>),
    /// V_Q given directly (zero for classical scenarios).
    Direct(ScalarField<T>),
}

impl<T: Real> QuantumSource<T> {
    pub fn classical() -> Self {
        QuantumSource::Direct(ScalarField::zero())
    }

    pub fn value(&self, p: &[T; 4]) -> Result<T> {
        match self {
            QuantumSource::Madelung(m) => m.value(p),
            QuantumSource::Direct(f) => f.value(p),
        }
    }

    pub fn gradient(&self, p: &[T; 4]) -> Result<[T; 4]> {
        match self {
            QuantumSource::Madelung(m) => m.gradient(p),
            QuantumSource::Direct(f) => f.gradient(p),
        }
    }

    pub fn madelung(&self) -> Option<&MadelungState<T>> {
        match self {
            QuantumSource::Madelung(m) => Some(m.state()),
            QuantumSource::Direct(_) => None,
        }
    }
}

/// `v = (∇S − (e/c)A)/m`.
pub fn velocity_field<T: Real>(
    state: &MadelungState<T>,
    vector_potential: &VectorField<T>,
    consts: &Constants<T>,
    p: &[T; 4],
) -> Result<[T; 3]> {
    if state.is_nodal(p)? {
        return Err(Error::UndefinedPhase { point: to_f64_array(p) });
    }
    let grad_s = state.phase.gradient(p)?;
    if grad_s.iter().any(|g| g.is_nan()) {
        return Err(Error::UndefinedPhase { point: to_f64_array(p) });
    }
    let a = vector_potential.value(p)?;
    let k = consts.coupling();
    Ok(std::array::from_fn(|i| (grad_s[i + 1] - k * a[i]) / consts.mass))
}

/// `|∂ρ/∂t + ∇·(ρv)|` at every node of `region`.
pub fn continuity_residual<T: Real>(
    density: &ScalarField<T>,
    velocity: &VectorField<T>,
    region: &GridSpec<T>,
) -> Result<Vec<T>> {
    region
        .points()
        .map(|p| {
            let rho = density.value(&p)?;
            let grad_rho = density.gradient(&p)?;
            let v = velocity.value(&p)?;
            let div_v = velocity.divergence(&p)?;
            let flux_div = (0..3).map(|i| grad_rho[i + 1] * v[i]).sum::<T>() + rho * div_v;
            Ok((grad_rho[0] + flux_div).abs())
        })
        .collect()
}

/// Coulomb-gauge residual `∇·A`.
pub fn gauge_residual<T: Real>(vector_potential: &VectorField<T>, p: &[T; 4]) -> Result<T> {
    vector_potential.divergence(p)
}
