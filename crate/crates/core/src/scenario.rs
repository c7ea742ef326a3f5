//! Immutable description of a quantum-hydrodynamic scenario, and the
//! metric-field abstraction the geometry layers consume.

use crate::error::{Error, Result};
use crate::fields::{Constants, Domain, QuantumSource, ScalarField, VectorField};
use crate::linalg::{cholesky, Mat3, Mat4};
use crate::scalar::{to_f64_array, Real};
use crate::tolerances;

/// Mass tensor `m_ij`.
#[derive(Debug, Clone)]
pub enum MassMatrix<T> {
    /// `m δ_ij`
    Scalar(T),
    /// Upper triangle `[m11, m12, m13, m22, m23, m33]`; the lower half mirrors it.
    General(Box<[ScalarField<T>; 6]>),
}

const UPPER: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

impl<T: Real> MassMatrix<T> {
    pub fn general(upper: [ScalarField<T>; 6]) -> Self {
        if upper.iter().all(ScalarField::is_constant) {
            let v: Vec<T> = upper.iter().map(|f| f.value(&[T::zero(); 4]).unwrap()).collect();
            let zero_off = v[1] == T::zero() && v[2] == T::zero() && v[4] == T::zero();
            if zero_off && v[0] == v[3] && v[3] == v[5] {
                return MassMatrix::Scalar(v[0]);
            }
        }
        MassMatrix::General(Box::new(upper))
    }

    /// Isotropic constant mass, if this is one.
    pub fn scalar(&self) -> Option<T> {
        match self {
            MassMatrix::Scalar(m) => Some(*m),
            MassMatrix::General(_) => None,
        }
    }

    pub fn value(&self, p: &[T; 4]) -> Result<Mat3<T>> {
        match self {
            MassMatrix::Scalar(m) => Ok(crate::linalg::diag([*m; 3])),
            MassMatrix::General(u) => {
                let v = [
                    u[0].value(p)?,
                    u[1].value(p)?,
                    u[2].value(p)?,
                    u[3].value(p)?,
                    u[4].value(p)?,
                    u[5].value(p)?,
                ];
                Ok(UPPER.map(|row| row.map(|k| v[k])))
            }
        }
    }

    /// `∂_K m_ij`, indexed `[K][i][j]`.
    pub fn derivatives(&self, p: &[T; 4]) -> Result<[Mat3<T>; 4]> {
        match self {
            MassMatrix::Scalar(_) => Ok([[[T::zero(); 3]; 3]; 4]),
            MassMatrix::General(u) => {
                let mut g = [[T::zero(); 4]; 6];
                for (k, f) in u.iter().enumerate() {
                    g[k] = f.gradient(p)?;
                }
                Ok(std::array::from_fn(|ax| UPPER.map(|row| row.map(|k| g[k][ax]))))
            }
        }
    }
}

/// Potentials, wave-function data, mass tensor and constants.
///
/// Built with [`Scenario::new`] and the `with_*` setters; every field
/// defaults to zero except the mass, which defaults to `consts.mass`.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub consts: Constants<T>,
    pub mass: MassMatrix<T>,
    /// External potential `V`.
    pub potential: ScalarField<T>,
    /// Electric scalar potential `φ`.
    pub scalar_potential: ScalarField<T>,
    pub vector_potential: VectorField<T>,
    pub quantum: QuantumSource<T>,
    pub domain: Domain<T>,
}

impl<T: Real> Scenario<T> {
    pub fn new(consts: Constants<T>) -> Self {
        Self {
            consts,
            mass: MassMatrix::Scalar(consts.mass),
            potential: ScalarField::zero(),
            scalar_potential: ScalarField::zero(),
            vector_potential: VectorField::zero(),
            quantum: QuantumSource::classical(),
            domain: Domain::unbounded(),
        }
    }

    /// Neutral particle of mass `m` in total potential `Q = V + V_Q`,
    /// with `V_Q` folded into `Q`.
    pub fn neutral(mass: T, total: ScalarField<T>) -> Self {
        let consts = Constants { mass, ..Constants::default() };
        Self::new(consts).with_potential(total)
    }

    pub fn with_mass(mut self, mass: MassMatrix<T>) -> Self {
        self.mass = mass;
        self
    }

    pub fn with_potential(mut self, v: ScalarField<T>) -> Self {
        self.potential = v;
        self
    }

    pub fn with_scalar_potential(mut self, phi: ScalarField<T>) -> Self {
        self.scalar_potential = phi;
        self
    }

    pub fn with_vector_potential(mut self, a: VectorField<T>) -> Self {
        self.vector_potential = a;
        self
    }

    pub fn with_quantum(mut self, q: QuantumSource<T>) -> Self {
        self.quantum = q;
        self
    }

    pub fn with_domain(mut self, d: Domain<T>) -> Self {
        self.domain = d;
        self
    }

    pub fn is_neutral(&self) -> bool {
        self.vector_potential.is_zero()
            && matches!(self.scalar_potential, ScalarField::Constant(v) if v == T::zero())
    }

    /// `eφ + V + V_Q`
    pub fn total_potential(&self, p: &[T; 4]) -> Result<T> {
        let e = self.consts.charge;
        Ok(e * self.scalar_potential.value(p)? + self.potential.value(p)? + self.quantum.value(p)?)
    }

    /// Gradient of `eφ + V + V_Q` over all four coordinates.
    pub fn total_potential_gradient(&self, p: &[T; 4]) -> Result<[T; 4]> {
        let e = self.consts.charge;
        let gp = self.scalar_potential.gradient(p)?;
        let gv = self.potential.gradient(p)?;
        let gq = self.quantum.gradient(p)?;
        Ok(std::array::from_fn(|k| e * gp[k] + gv[k] + gq[k]))
    }

    /// Checks mass positivity on a lattice and warns when `∇·A` exceeds the
    /// gauge tolerance. Returns the largest gauge residual seen.
    pub fn validate(&self, per_axis: usize) -> Result<T> {
        let mut worst = T::zero();
        for p in self.domain.lattice(per_axis) {
            let m = self.mass.value(&p)?;
            if let Err(minor) = cholesky(&m) {
                return Err(Error::InvalidScenario(format!(
                    "mass matrix not positive definite at {:?} (minor {minor})",
                    to_f64_array(&p)
                )));
            }
            worst = worst.max(self.vector_potential.divergence(&p)?.abs());
        }
        if worst > T::lit(tolerances::GAUGE) {
            log::warn!("vector potential is not in Coulomb gauge: max |div A| = {worst:e}");
        }
        Ok(worst)
    }
}

/// Position-dependent symmetric 4×4 metric with first derivatives.
pub trait MetricField<T: Real>: Sync {
    /// Raw components; positivity is checked by the geometry layer.
    fn metric(&self, x: &[T; 4]) -> Result<Mat4<T>>;

    /// `∂_K a_IJ`, indexed `[K][I][J]`.
    fn metric_derivatives(&self, x: &[T; 4]) -> Result<[Mat4<T>; 4]>;

    fn domain(&self) -> Domain<T> {
        Domain::unbounded()
    }
}

impl<T: Real> MetricField<T> for Scenario<T> {
    /// `a₀₀ = −(eφ+V+V_Q)`, `a₀ᵢ = (e/2c)Aᵢ`, `aᵢⱼ = mᵢⱼ/2`.
    fn metric(&self, x: &[T; 4]) -> Result<Mat4<T>> {
        let k = self.consts.coupling() * T::half();
        let a = self.vector_potential.value(x)?;
        let m = self.mass.value(x)?;
        let mut g = [[T::zero(); 4]; 4];
        g[0][0] = -self.total_potential(x)?;
        for i in 0..3 {
            g[0][i + 1] = k * a[i];
            g[i + 1][0] = k * a[i];
            for j in 0..3 {
                g[i + 1][j + 1] = m[i][j] * T::half();
            }
        }
        Ok(g)
    }

    fn metric_derivatives(&self, x: &[T; 4]) -> Result<[Mat4<T>; 4]> {
        let k = self.consts.coupling() * T::half();
        let grad_q = self.total_potential_gradient(x)?;
        let jac = self.vector_potential.jacobian(x)?;
        let dm = self.mass.derivatives(x)?;
        let mut out = [[[T::zero(); 4]; 4]; 4];
        for (ax, d) in out.iter_mut().enumerate() {
            d[0][0] = -grad_q[ax];
            for i in 0..3 {
                d[0][i + 1] = k * jac[i][ax];
                d[i + 1][0] = k * jac[i][ax];
                for j in 0..3 {
                    d[i + 1][j + 1] = dm[ax][i][j] * T::half();
                }
            }
        }
        Ok(out)
    }

    fn domain(&self) -> Domain<T> {
        self.domain
    }
}

/// Position-independent metric.
#[derive(Debug, Clone, Copy)]
pub struct ConstantMetric<T>(pub Mat4<T>);

impl<T: Real> MetricField<T> for ConstantMetric<T> {
    fn metric(&self, _x: &[T; 4]) -> Result<Mat4<T>> {
        Ok(self.0)
    }

    fn metric_derivatives(&self, _x: &[T; 4]) -> Result<[Mat4<T>; 4]> {
        Ok([[[T::zero(); 4]; 4]; 4])
    }
}

/// `a(x) = a₀ + Σ_K x^K D_K` with symmetric `a₀`, `D_K`; derivatives are exact.
#[derive(Debug, Clone, Copy)]
pub struct AffineMetric<T> {
    pub base: Mat4<T>,
    pub slopes: [Mat4<T>; 4],
}

impl<T: Real> MetricField<T> for AffineMetric<T> {
    fn metric(&self, x: &[T; 4]) -> Result<Mat4<T>> {
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.base[i][j] + (0..4).map(|k| x[k] * self.slopes[k][i][j]).sum::<T>())
        }))
    }

    fn metric_derivatives(&self, _x: &[T; 4]) -> Result<[Mat4<T>; 4]> {
        Ok(self.slopes)
    }
}

type MetricFn<T> = dyn Fn(&[T; 4]) -> Result<Mat4<T>> + Send + Sync;

/// Metric given by a closure, differentiated by Richardson central
/// differences at a fixed probe step.
pub struct ClosureMetric<T> {
    f: Box<MetricFn<T>>,
    step: T,
}

impl<T: Real> ClosureMetric<T> {
    pub fn new<F>(step: T, f: F) -> Self
    where
        F: Fn(&[T; 4]) -> Result<Mat4<T>> + Send + Sync + 'static,
    {
        Self { f: Box::new(f), step }
    }
}

impl<T: Real> MetricField<T> for ClosureMetric<T> {
    fn metric(&self, x: &[T; 4]) -> Result<Mat4<T>> {
        (self.f)(x)
    }

    fn metric_derivatives(&self, x: &[T; 4]) -> Result<[Mat4<T>; 4]> {
        let mut out = [[[T::zero(); 4]; 4]; 4];
        for (ax, d) in out.iter_mut().enumerate() {
            let at = |s: T| {
                let mut q = *x;
                q[ax] += s;
                (self.f)(&q)
            };
            let h = self.step;
            let (p1, m1, p2, m2) = (at(h)?, at(-h)?, at(T::two() * h)?, at(-T::two() * h)?);
            for i in 0..4 {
                for j in 0..4 {
                    let d1 = (p1[i][j] - m1[i][j]) / (T::two() * h);
                    let d2 = (p2[i][j] - m2[i][j]) / (T::lit(4.0) * h);
                    d[i][j] = (T::lit(4.0) * d1 - d2) / T::lit(3.0);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{det, identity};

    #[test]
    fn neutral_unit_metric() {
        let s = Scenario::neutral(2.0, ScalarField::constant(-1.0));
        assert_eq!(s.metric(&[0.0; 4]).unwrap(), identity());
        assert_eq!(s.metric_derivatives(&[0.3; 4]).unwrap(), [[[0.0; 4]; 4]; 4]);
    }

    #[test]
    fn charged_determinant_closed_form() {
        // det a = −(m³/8)[(e²/2mc²)|A|² + (eφ+V+V_Q)]
        let consts = Constants::new(1.0, 1.5, 0.8, 2.0).unwrap();
        let s = Scenario::new(consts)
            .with_potential(ScalarField::parse("-3 - x^2").unwrap())
            .with_scalar_potential(ScalarField::parse("0.2*y").unwrap())
            .with_vector_potential(VectorField::parse(["-y/2", "x/2", "0.3"]).unwrap());
        let p = [0.1, 0.4, -0.6, 0.2];
        let a = s.vector_potential.value(&p).unwrap();
        let a2: f64 = a.iter().map(|v| v * v).sum();
        let (m, e, c) = (1.5, 0.8, 2.0);
        let total = s.total_potential(&p).unwrap();
        let expected = -(m * m * m / 8.0) * (e * e / (2.0 * m * c * c) * a2 + total);
        let got = det(&s.metric(&p).unwrap());
        assert!((got - expected).abs() < 1e-13 * expected.abs());
    }

    #[test]
    fn neutral_determinant_closed_form() {
        // det a = −m³Q/8
        let s = Scenario::neutral(3.0, ScalarField::parse("-2 - x^2").unwrap());
        let p = [0.0, 0.7, 0.0, 0.0];
        let q: f64 = -2.0 - 0.49;
        assert!((det(&s.metric(&p).unwrap()) + 27.0 * q / 8.0).abs() < 1e-13);
    }

    #[test]
    fn analytic_derivatives_match_closure_metric() {
        let consts = Constants::default();
        let s = Scenario::new(consts)
            .with_potential(ScalarField::parse("-2 - 0.3*x^2 + 0.1*t*y").unwrap())
            .with_vector_potential(VectorField::parse(["-y/2", "x/2", "0.1*t"]).unwrap());
        let s2 = s.clone();
        let fd = ClosureMetric::new(1e-3, move |x: &[f64; 4]| s2.metric(x));
        let p = [0.2, 0.3, -0.4, 0.5];
        let exact = s.metric_derivatives(&p).unwrap();
        let approx = fd.metric_derivatives(&p).unwrap();
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    assert!((exact[k][i][j] - approx[k][i][j]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn general_mass_collapses_when_isotropic() {
        let c = |v: f64| ScalarField::constant(v);
        let m = MassMatrix::general([c(2.0), c(0.0), c(0.0), c(2.0), c(0.0), c(2.0)]);
        assert_eq!(m.scalar(), Some(2.0));
        let m = MassMatrix::general([c(2.0), c(0.5), c(0.0), c(2.0), c(0.0), c(1.0)]);
        assert!(m.scalar().is_none());
        let v = m.value(&[0.0; 4]).unwrap();
        assert_eq!(v[1][0], 0.5);
        assert_eq!(v[0][1], 0.5);
    }

    #[test]
    fn validate_rejects_indefinite_mass() {
        let c = |v: f64| ScalarField::constant(v);
        let s = Scenario::<f64>::new(Constants::default())
            .with_mass(MassMatrix::general([c(1.0), c(2.0), c(0.0), c(1.0), c(0.0), c(1.0)]))
            .with_domain(Domain::new([0.0; 4], [0.0, 1.0, 1.0, 1.0]).unwrap());
        assert!(s.validate(3).is_err());
        let ok = Scenario::<f64>::new(Constants::default())
            .with_vector_potential(VectorField::parse(["x", "0", "0"]).unwrap())
            .with_domain(Domain::new([0.0; 4], [0.0, 1.0, 1.0, 1.0]).unwrap());
        assert_eq!(ok.validate(3).unwrap(), 1.0);
    }
}
