//! Associated Riemannian metric and the Kropina function `F = α²/β`.
//!
//! `α² = a_IJ y^I y^J`, `β = b_I y^I = y⁰` with `b = (1, 0, 0, 0)`.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, det, dot, mat_vec, norm, quad_form, Lu, Mat4};
use crate::scalar::{to_f64_array, Real};
use crate::scenario::MetricField;
use crate::tolerances;

/// Point `x` of extended configuration space with tangent vector `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentSample<T> {
    pub x: [T; 4],
    pub y: [T; 4],
}

impl<T: Real> TangentSample<T> {
    pub fn new(x: [T; 4], y: [T; 4]) -> Self {
        Self { x, y }
    }

    pub fn scaled(&self, lambda: T) -> Self {
        Self { x: self.x, y: self.y.map(|v| v * lambda) }
    }
}

/// Fails with [`Error::KropinaSingular`] unless `y⁰ > ε_β·|y|`.
pub fn check_beta<T: Real>(y: &[T; 4]) -> Result<()> {
    let threshold = T::lit(tolerances::BETA_RELATIVE) * norm(y);
    if y[0] > threshold && threshold > T::zero() {
        Ok(())
    } else {
        Err(Error::KropinaSingular { beta: y[0].as_f64(), threshold: threshold.as_f64() })
    }
}

/// Fails with the first failing leading minor unless `a` is positive definite.
pub fn check_positive_definite<T: Real>(a: &Mat4<T>, x: &[T; 4]) -> Result<()> {
    cholesky(a)
        .map(|_| ())
        .map_err(|minor| Error::MetricNotPositiveDefinite { minor, point: to_f64_array(x) })
}

/// `a_IJ(x)` from a metric field, checked for positive definiteness.
pub fn assemble_associated_metric<T: Real, M: MetricField<T> + ?Sized>(field: &M, x: &[T; 4]) -> Result<Mat4<T>> {
    let a = field.metric(x)?;
    check_positive_definite(&a, x)?;
    Ok(a)
}

/// `a^IJ` and `b² = a⁰⁰`.
pub fn inverse_metric<T: Real>(a: &Mat4<T>, x: &[T; 4]) -> Result<(Mat4<T>, T)> {
    check_positive_definite(a, x)?;
    let inv = Lu::new(a).ok_or(Error::SingularMatrix)?.inverse();
    Ok((inv, inv[0][0]))
}

/// The associated metric evaluated at one point, with its inverse.
#[derive(Debug, Clone, Copy)]
pub struct PointMetric<T> {
    pub x: [T; 4],
    pub a: Mat4<T>,
    pub inv: Mat4<T>,
}

impl<T: Real> PointMetric<T> {
    pub fn new(x: [T; 4], a: Mat4<T>) -> Result<Self> {
        let (inv, _) = inverse_metric(&a, &x)?;
        Ok(Self { x, a, inv })
    }

    /// `b² = a⁰⁰`
    pub fn b2(&self) -> T {
        self.inv[0][0]
    }

    /// `b^I = a^{I0}`
    pub fn b_up(&self) -> [T; 4] {
        std::array::from_fn(|i| self.inv[i][0])
    }

    pub fn alpha2(&self, y: &[T; 4]) -> T {
        quad_form(&self.a, y)
    }

    pub fn f(&self, y: &[T; 4]) -> Result<T> {
        check_beta(y)?;
        Ok(self.alpha2(y) / y[0])
    }

    /// Closed-form fundamental tensor
    /// `g = 2s⁻²a + 3s⁻⁴bb − 4s⁻³(b⊗α' + α'⊗b) + 4s⁻²α'⊗α'`
    /// with `s = β/α` and `α'_I = a_IJ y^J / α`.
    pub fn fundamental_tensor(&self, y: &[T; 4]) -> Result<Mat4<T>> {
        check_beta(y)?;
        let alpha = self.alpha2(y).sqrt();
        let r = alpha / y[0];
        let ay = mat_vec(&self.a, y);
        let al: [T; 4] = ay.map(|v| v / alpha);
        let (r2, r3, r4) = (r * r, r * r * r, r * r * r * r);
        let two = T::two();
        let (three, four) = (T::lit(3.0), T::lit(4.0));
        let b = |i: usize| if i == 0 { T::one() } else { T::zero() };
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                two * r2 * self.a[i][j] + three * r4 * b(i) * b(j) - four * r3 * (b(i) * al[j] + b(j) * al[i])
                    + four * r2 * al[i] * al[j]
            })
        }))
    }

    /// Component form in terms of `T = a_ij y^i y^j` (spatial block),
    /// `B = a₀₀ − T/(y⁰)²`; a cross-check of [`Self::fundamental_tensor`].
    pub fn fundamental_tensor_components(&self, y: &[T; 4]) -> Result<Mat4<T>> {
        check_beta(y)?;
        let a = &self.a;
        let y0 = y[0];
        let mut t = T::zero();
        let mut ay = [T::zero(); 3];
        let mut a0y = T::zero();
        for i in 0..3 {
            a0y += a[0][i + 1] * y[i + 1];
            for j in 0..3 {
                ay[i] += a[i + 1][j + 1] * y[j + 1];
            }
            t += ay[i] * y[i + 1];
        }
        let (two, three, four) = (T::two(), T::lit(3.0), T::lit(4.0));
        let big_b = a[0][0] - t / (y0 * y0);
        let mut g = [[T::zero(); 4]; 4];
        g[0][0] = a[0][0] * a[0][0] + four * a0y * t / (y0 * y0 * y0) + three * t * t / (y0 * y0 * y0 * y0);
        for i in 0..3 {
            let g0i = two * a[0][i + 1] * big_b - four * ay[i] / (y0 * y0) * (t / y0 + a0y);
            g[0][i + 1] = g0i;
            g[i + 1][0] = g0i;
            for j in 0..3 {
                g[i + 1][j + 1] = four * a[0][i + 1] * a[0][j + 1]
                    + four * ay[i] * ay[j] / (y0 * y0)
                    + four * a[0][j + 1] * ay[i] / y0
                    + four * a[0][i + 1] * ay[j] / y0
                    + two * (t / (y0 * y0) + two * a0y / y0 + a[0][0]) * a[i + 1][j + 1];
            }
        }
        Ok(g)
    }

    /// The second α/β form printed alongside the component formulas. It
    /// differs from the Hessian of F²/2 (mixed coefficient −3 instead of −4)
    /// and is kept only to diagnose the determinant identity.
    pub fn fundamental_tensor_alternative(&self, y: &[T; 4]) -> Result<Mat4<T>> {
        check_beta(y)?;
        let alpha = self.alpha2(y).sqrt();
        let r = alpha / y[0];
        let al = mat_vec(&self.a, y).map(|v| v / alpha);
        let (two, three, four) = (T::two(), T::lit(3.0), T::lit(4.0));
        let b = |i: usize| if i == 0 { T::one() } else { T::zero() };
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                two * r * r * self.a[i][j]
                    + r * r
                        * (four * al[i] * al[j] - three * r * (al[i] * b(j) + al[j] * b(i))
                            + three * r * r * b(i) * b(j))
            })
        }))
    }

    /// `24(α/β)⁸(1 + d²) det a`, `d² = (3/2)a^IJ(α_I − (α/β)b_I)(α_J − (α/β)b_J)`.
    pub fn stated_determinant(&self, y: &[T; 4]) -> Result<T> {
        check_beta(y)?;
        let alpha = self.alpha2(y).sqrt();
        let r = alpha / y[0];
        let mut v = mat_vec(&self.a, y).map(|c| c / alpha);
        v[0] -= r;
        let d2 = T::lit(1.5) * quad_form(&self.inv, &v);
        Ok(T::lit(24.0) * r.powi(8) * (T::one() + d2) * det(&self.a))
    }

    /// `det g = 8 b² (α/β)¹⁰ det a`, the determinant of the Kropina
    /// fundamental tensor in four dimensions.
    pub fn kropina_determinant(&self, y: &[T; 4]) -> Result<T> {
        check_beta(y)?;
        let r = self.alpha2(y).sqrt() / y[0];
        Ok(T::lit(8.0) * self.b2() * r.powi(10) * det(&self.a))
    }

    /// `|det g − 24(α/β)⁸(1+d²)det a| / |det g|` with `g` the closed-form tensor.
    pub fn det_identity_gap(&self, y: &[T; 4]) -> Result<T> {
        let lhs = det(&self.fundamental_tensor(y)?);
        let rhs = self.stated_determinant(y)?;
        Ok((lhs - rhs).abs() / lhs.abs().max(T::lit(tolerances::GAP_FLOOR)))
    }

    /// Relative gap between `det g` and [`Self::kropina_determinant`].
    pub fn kropina_determinant_gap(&self, y: &[T; 4]) -> Result<T> {
        let lhs = det(&self.fundamental_tensor(y)?);
        let rhs = self.kropina_determinant(y)?;
        Ok((lhs - rhs).abs() / lhs.abs().max(T::lit(tolerances::GAP_FLOOR)))
    }

    /// `a(u, v)`
    pub fn inner(&self, u: &[T; 4], v: &[T; 4]) -> T {
        dot(u, &mat_vec(&self.a, v))
    }
}

/// Kropina structure `(a_IJ, b = (1,0,0,0))` over a metric field.
#[derive(Debug, Clone)]
pub struct KropinaGeometry<M> {
    pub metric: M,
}

impl<M> KropinaGeometry<M> {
    pub fn new(metric: M) -> Self {
        Self { metric }
    }
}

impl<M> KropinaGeometry<M> {
    pub fn at<T: Real>(&self, x: &[T; 4]) -> Result<PointMetric<T>>
    where
        M: MetricField<T>,
    {
        PointMetric::new(*x, assemble_associated_metric(&self.metric, x)?)
    }

    pub fn kropina_f<T: Real>(&self, s: &TangentSample<T>) -> Result<T>
    where
        M: MetricField<T>,
    {
        check_beta(&s.y)?;
        let a = assemble_associated_metric(&self.metric, &s.x)?;
        Ok(quad_form(&a, &s.y) / s.y[0])
    }

    pub fn fundamental_tensor<T: Real>(&self, s: &TangentSample<T>) -> Result<Mat4<T>>
    where
        M: MetricField<T>,
    {
        check_beta(&s.y)?;
        self.at(&s.x)?.fundamental_tensor(&s.y)
    }

    pub fn det_identity_gap<T: Real>(&self, s: &TangentSample<T>) -> Result<T>
    where
        M: MetricField<T>,
    {
        check_beta(&s.y)?;
        self.at(&s.x)?.det_identity_gap(&s.y)
    }

    pub fn kropina_determinant<T: Real>(&self, s: &TangentSample<T>) -> Result<T>
    where
        M: MetricField<T>,
    {
        check_beta(&s.y)?;
        self.at(&s.x)?.kropina_determinant(&s.y)
    }
}
