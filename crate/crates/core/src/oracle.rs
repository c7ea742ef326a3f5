//! Brute-force verifiers: finite-difference Hessians and sprays from `F²`,
//! Richardson directional derivatives, and the Euler–Lagrange residual of
//! `L = ½m_ij vⁱvʲ + (e/c)Aᵢvⁱ − (eφ + V + V_Q)`.

use serde::Serialize;

use crate::connection::SprayFlavor;
use crate::dynamics::TimePath;
use crate::error::{Error, Result};
use crate::fields::Domain;
use crate::linalg::{inverse, norm, quad_form, Mat4};
use crate::scalar::{to_f64_array, Real};
use crate::scenario::{MetricField, Scenario};
use crate::tolerances;

/// One analytic-versus-oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub quantity: String,
    pub analytic: Vec<f64>,
    pub oracle: Vec<f64>,
    /// `max|analytic − oracle| / max(max|analytic|, 1e-30)`
    pub gap: f64,
    pub steps: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleReport {
    pub fn new(quantity: impl Into<String>, analytic: Vec<f64>, oracle: Vec<f64>, steps: Vec<f64>, tolerance: f64) -> Self {
        let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(tolerances::GAP_FLOOR);
        let diff = analytic.iter().zip(&oracle).fold(0.0f64, |m, (a, o)| m.max((a - o).abs()));
        let gap = if analytic.len() == oracle.len() { diff / scale } else { f64::INFINITY };
        Self { quantity: quantity.into(), analytic, oracle, gap, steps, tolerance, passed: gap < tolerance }
    }

    pub fn scalar(quantity: impl Into<String>, analytic: f64, oracle: f64, tolerance: f64) -> Self {
        Self::new(quantity, vec![analytic], vec![oracle], Vec::new(), tolerance)
    }

    /// A residual that should vanish, reported with zero as the oracle and
    /// an absolute gap.
    pub fn residual(quantity: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            quantity: quantity.into(),
            analytic: vec![value],
            oracle: vec![0.0],
            gap: value.abs(),
            steps: Vec::new(),
            tolerance,
            passed: value.abs() < tolerance,
        }
    }

    pub fn matrix<T: Real>(quantity: impl Into<String>, analytic: &Mat4<T>, oracle: &Mat4<T>, step: T, tolerance: f64) -> Self {
        let flat = |m: &Mat4<T>| m.iter().flatten().map(|v| v.as_f64()).collect();
        Self::new(quantity, flat(analytic), flat(oracle), vec![step.as_f64()], tolerance)
    }
}

/// Central-difference Hessian of `f` at `y` with one Richardson level
/// (steps `h` and `2h`).
pub fn fd_hessian<T: Real>(f: impl Fn(&[T; 4]) -> Result<T>, y: &[T; 4], h: T) -> Result<Mat4<T>> {
    let at = |di: usize, si: T, dj: usize, sj: T| -> Result<T> {
        let mut q = *y;
        q[di] += si;
        q[dj] += sj;
        f(&q)
    };
    let f0 = f(y)?;
    let level = |h: T| -> Result<Mat4<T>> {
        let mut m = [[T::zero(); 4]; 4];
        for i in 0..4 {
            m[i][i] = (at(i, h, i, T::zero())? - T::two() * f0 + at(i, -h, i, T::zero())?) / (h * h);
            for j in (i + 1)..4 {
                let v = (at(i, h, j, h)? - at(i, h, j, -h)? - at(i, -h, j, h)? + at(i, -h, j, -h)?)
                    / (T::lit(4.0) * h * h);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        Ok(m)
    };
    let (d1, d2) = (level(h)?, level(T::two() * h)?);
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| (T::lit(4.0) * d1[i][j] - d2[i][j]) / T::lit(3.0))))
}

/// Hessian of `F²/2` for the Kropina function of `a` at tangent `y`, probe
/// step `1e-4·|y|`.
pub fn fd_hessian_f2<T: Real>(a: &Mat4<T>, y: &[T; 4]) -> Result<Mat4<T>> {
    let h = T::lit(tolerances::HESSIAN_PROBE_RELATIVE) * norm(y);
    // Richardson reaches 2h in every direction; keep β positive at 3 probe steps.
    let reach = T::lit(3.0) * T::two() * h;
    if !(y[0] > reach) {
        return Err(Error::KropinaSingular { beta: y[0].as_f64(), threshold: reach.as_f64() });
    }
    fd_hessian(|q| Ok(half_f2(a, q, SprayFlavor::Kropina)), y, h)
}

fn half_f2<T: Real>(a: &Mat4<T>, y: &[T; 4], flavor: SprayFlavor) -> T {
    let alpha2 = quad_form(a, y);
    match flavor {
        SprayFlavor::Kropina => alpha2 * alpha2 / (y[0] * y[0]) * T::half(),
        SprayFlavor::Riemann => alpha2 * T::half(),
    }
}

/// Spray from its definition `G^I = ¼g^{IJ}(∂²F²/∂x^K∂y^J y^K − ∂F²/∂x^J)`,
/// with every derivative of `F²` taken by finite differences.
pub fn fd_spray<T: Real, M: MetricField<T> + ?Sized>(
    field: &M,
    flavor: SprayFlavor,
    x: &[T; 4],
    y: &[T; 4],
    hx: T,
) -> Result<[T; 4]> {
    let hy = T::lit(tolerances::HESSIAN_PROBE_RELATIVE) * T::lit(10.0) * norm(y);
    let f2 = |xq: &[T; 4], yq: &[T; 4]| -> Result<T> {
        let a = field.metric(xq)?;
        Ok(T::two() * half_f2(&a, yq, flavor))
    };
    let a = field.metric(x)?;
    let hess = fd_hessian(|q| Ok(half_f2(&a, q, flavor)), y, hy)?;
    let ginv = inverse(&hess).ok_or(Error::SingularMatrix)?;

    let shift = |v: &[T; 4], ax: usize, s: T| -> [T; 4] {
        let mut q = *v;
        q[ax] += s;
        q
    };
    let rich = |d: &dyn Fn(T) -> Result<T>, h: T| -> Result<T> {
        Ok((T::lit(4.0) * d(h)? - d(T::two() * h)?) / T::lit(3.0))
    };
    let mut rhs = [T::zero(); 4];
    for (j, r) in rhs.iter_mut().enumerate() {
        let dx = |h: T| -> Result<T> { Ok((f2(&shift(x, j, h), y)? - f2(&shift(x, j, -h), y)?) / (T::two() * h)) };
        let grad_x = rich(&dx, hx)?;
        let mut mixed = T::zero();
        for (k, yk) in y.iter().enumerate() {
            let dxy = |h: T| -> Result<T> {
                let hy = h * hy / hx;
                let v = f2(&shift(x, k, h), &shift(y, j, hy))? - f2(&shift(x, k, h), &shift(y, j, -hy))?
                    - f2(&shift(x, k, -h), &shift(y, j, hy))?
                    + f2(&shift(x, k, -h), &shift(y, j, -hy))?;
                Ok(v / (T::lit(4.0) * h * hy))
            };
            mixed += rich(&dxy, hx)? * *yk;
        }
        *r = mixed - grad_x;
    }
    Ok(std::array::from_fn(|i| (0..4).map(|j| ginv[i][j] * rhs[j]).sum::<T>() * T::lit(0.25)))
}

/// Richardson-extrapolated directional derivative with convergence data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionalDerivative<T> {
    pub value: Vec<T>,
    /// Central differences at `h`, `h/2`, `h/4`.
    pub raw: [Vec<T>; 3],
    pub steps: [T; 3],
    /// `log₂` of successive error ratios before extrapolation; `None`
    /// when the differences are at roundoff level (e.g. exact stencils).
    pub observed_order: Option<T>,
}

/// Central differences of a vector-valued `f` along `dir` at steps
/// `h, h/2, h/4`, combined as `(4D(h/4) − D(h/2))/3`.
pub fn fd_directional_vec<T: Real>(
    f: impl Fn(&[T; 4]) -> Result<Vec<T>>,
    x: &[T; 4],
    dir: &[T; 4],
    h: T,
    domain: Option<&Domain<T>>,
) -> Result<DirectionalDerivative<T>> {
    let along = |s: T| -> [T; 4] { std::array::from_fn(|i| x[i] + s * dir[i]) };
    if let Some(d) = domain {
        for s in [h, -h] {
            let p = along(s);
            if !d.contains(&p) {
                return Err(Error::DomainBoundary { point: to_f64_array(&p) });
            }
        }
    }
    let steps = [h, h * T::half(), h * T::lit(0.25)];
    let central = |s: T| -> Result<Vec<T>> {
        let (p, m) = (f(&along(s))?, f(&along(-s))?);
        Ok(p.iter().zip(&m).map(|(a, b)| (*a - *b) / (T::two() * s)).collect())
    };
    let raw = [central(steps[0])?, central(steps[1])?, central(steps[2])?];
    let value: Vec<T> = raw[2]
        .iter()
        .zip(&raw[1])
        .map(|(q, hf)| (T::lit(4.0) * *q - *hf) / T::lit(3.0))
        .collect();
    let scale = value.iter().fold(T::one(), |m, v| m.max(v.abs()));
    let noise = T::lit(1e3) * T::epsilon() * scale / h;
    let mut order: Option<T> = None;
    for c in 0..value.len() {
        let e1 = (raw[0][c] - raw[1][c]).abs();
        let e2 = (raw[1][c] - raw[2][c]).abs();
        if e1 > noise && e2 > noise {
            let p = (e1 / e2).log2();
            order = Some(order.map_or(p, |o: T| o.min(p)));
        }
    }
    Ok(DirectionalDerivative { value, raw, steps, observed_order: order })
}

pub fn fd_directional<T: Real>(
    f: impl Fn(&[T; 4]) -> Result<T>,
    x: &[T; 4],
    dir: &[T; 4],
    h: T,
    domain: Option<&Domain<T>>,
) -> Result<DirectionalDerivative<T>> {
    fd_directional_vec(|p| Ok(vec![f(p)?]), x, dir, h, domain)
}

/// `d/dt(∂L/∂ẋⁱ) − ∂L/∂xⁱ` at every knot of `path`.
///
/// Knot accelerations come from the path when it carries them and from
/// central differences of the knot velocities otherwise.
pub fn euler_lagrange_residual<T: Real>(scenario: &Scenario<T>, path: &TimePath<T>) -> Result<Vec<[T; 3]>> {
    let n = path.t.len();
    let fd_acc = |k: usize| -> [T; 3] {
        if n < 3 {
            return [T::zero(); 3];
        }
        let (i0, i1, i2) = if k == 0 {
            (0, 1, 2)
        } else if k == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (k - 1, k, k + 1)
        };
        let (t0, t1, t2) = (path.t[i0], path.t[i1], path.t[i2]);
        let t = path.t[k];
        // derivative of the quadratic through three knots, evaluated at t
        let l0 = (T::two() * t - t1 - t2) / ((t0 - t1) * (t0 - t2));
        let l1 = (T::two() * t - t0 - t2) / ((t1 - t0) * (t1 - t2));
        let l2 = (T::two() * t - t0 - t1) / ((t2 - t0) * (t2 - t1));
        std::array::from_fn(|i| l0 * path.v[i0][i] + l1 * path.v[i1][i] + l2 * path.v[i2][i])
    };
    let kq = scenario.consts.coupling();
    (0..n)
        .map(|k| {
            let r = path.r[k];
            let v = path.v[k];
            let acc = path.a.as_ref().map_or_else(|| fd_acc(k), |a| a[k]);
            let x = [path.t[k], r[0], r[1], r[2]];
            let m = scenario.mass.value(&x)?;
            let dm = scenario.mass.derivatives(&x)?;
            let jac = scenario.vector_potential.jacobian(&x)?;
            let gu = scenario.total_potential_gradient(&x)?;
            Ok(std::array::from_fn(|i| {
                // d/dt (m_ij vʲ + k A_i)
                let mut ddt = T::zero();
                for j in 0..3 {
                    let mdot = dm[0][i][j] + (0..3).map(|l| dm[l + 1][i][j] * v[l]).sum::<T>();
                    ddt += m[i][j] * acc[j] + mdot * v[j];
                }
                ddt += kq * (jac[i][0] + (0..3).map(|l| jac[i][l + 1] * v[l]).sum::<T>());
                // ∂L/∂xⁱ
                let mut dl = -gu[i + 1];
                for j in 0..3 {
                    dl += kq * jac[j][i + 1] * v[j];
                    for l in 0..3 {
                        dl += T::half() * dm[i + 1][j][l] * v[j] * v[l];
                    }
                }
                ddt - dl
            }))
        })
        .collect()
}
