//! Zermelo navigation data `(h, W, κ)` of the Kropina metric: the
//! conformal metric `h = e^κ a` with `e^κ = 4/a⁰⁰` and the h-unit wind
//! `W^I = a^{I0}/2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{QuantumSource, ScalarField};
use crate::geometry::{assemble_associated_metric, check_beta, inverse_metric, PointMetric};
use crate::linalg::{bilinear, mat_vec, quad_form, scale, Mat4};
use crate::scalar::{to_f64_array, Real};
use crate::scenario::{MetricField, Scenario};
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavigationData<T> {
    pub h: Mat4<T>,
    pub w: [T; 4],
    pub kappa: T,
    /// `| |W|_h − 1 |`
    pub unit_residual: T,
}

impl<T: Real> NavigationData<T> {
    pub fn conformal_factor(&self) -> T {
        self.kappa.exp()
    }

    pub fn wind_norm(&self) -> T {
        quad_form(&self.h, &self.w).sqrt()
    }
}

/// Navigation data from a positive-definite metric at one point.
pub fn navigation_from_metric<T: Real>(a: &Mat4<T>, x: &[T; 4]) -> Result<NavigationData<T>> {
    let (inv, b2) = inverse_metric(a, x)?;
    let ek = T::lit(4.0) / b2;
    if !(ek > T::zero()) || !ek.is_finite() {
        return Err(Error::ConformalSignError { value: ek.as_f64() });
    }
    let h = scale(a, ek);
    let w: [T; 4] = std::array::from_fn(|i| inv[i][0] * T::half());
    let norm = quad_form(&h, &w).sqrt();
    let unit_residual = (norm - T::one()).abs();
    if unit_residual > T::lit(tolerances::WIND_UNIT) {
        return Err(Error::WindNotUnit { norm: norm.as_f64() });
    }
    Ok(NavigationData { h, w, kappa: ek.ln(), unit_residual })
}

pub fn navigation_data<T: Real, M: MetricField<T> + ?Sized>(field: &M, x: &[T; 4]) -> Result<NavigationData<T>> {
    navigation_from_metric(&assemble_associated_metric(field, x)?, x)
}

/// `W = (−1, (e/mc)A) / [(e²/mc²)|A|² + 2(eφ+V+V_Q)]` for an isotropic constant mass.
pub fn quantum_wind<T: Real>(scenario: &Scenario<T>, x: &[T; 4]) -> Result<[T; 4]> {
    let m = scenario.mass.scalar().ok_or_else(|| {
        Error::InvalidScenario("the explicit quantum wind needs an isotropic constant mass".into())
    })?;
    let c = &scenario.consts;
    let a = scenario.vector_potential.value(x)?;
    let a2 = a.iter().map(|v| *v * *v).sum::<T>();
    let k = c.charge / (m * c.c);
    let denom = k * c.charge / c.c * a2 + T::two() * scenario.total_potential(x)?;
    if denom.abs() <= T::epsilon() * (T::one() + a2) || !denom.is_finite() {
        return Err(Error::WindSingular { point: to_f64_array(x) });
    }
    Ok([-T::one() / denom, k * a[0] / denom, k * a[1] / denom, k * a[2] / denom])
}

/// Limit of the wind when the magnetic term dominates:
/// `(−mc²/(e²|A|²), (c/e)A/|A|²)`.
pub fn magnetic_dominated_wind<T: Real>(scenario: &Scenario<T>, x: &[T; 4]) -> Result<[T; 4]> {
    let m = scenario.mass.scalar().ok_or_else(|| Error::InvalidScenario("needs an isotropic constant mass".into()))?;
    let c = &scenario.consts;
    let a = scenario.vector_potential.value(x)?;
    let a2 = a.iter().map(|v| *v * *v).sum::<T>();
    if a2 == T::zero() {
        return Err(Error::WindSingular { point: to_f64_array(x) });
    }
    let s = c.c / (c.charge * a2);
    Ok([-m * c.c * c.c / (c.charge * c.charge * a2), s * a[0], s * a[1], s * a[2]])
}

/// Limit of the wind when the quantum potential dominates:
/// `W⁰ → (m/ħ²)(R/ΔR)`, spatial part zero.
pub fn quantum_dominated_wind<T: Real>(scenario: &Scenario<T>, x: &[T; 4]) -> Result<[T; 4]> {
    let QuantumSource::Madelung(mp) = &scenario.quantum else {
        return Err(Error::InvalidScenario("needs Madelung amplitude data".into()));
    };
    let ratio = mp.laplacian_ratio(x)?;
    let c = &scenario.consts;
    Ok([c.mass / (c.hbar * c.hbar) / ratio, T::zero(), T::zero(), T::zero()])
}

/// Recovered Kropina data `(a, b)` and conformal exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseNavigation<T> {
    pub a: Mat4<T>,
    pub b: [T; 4],
    pub kappa: T,
}

/// `a = e^{−κ}h`, `b_I = 2e^{−κ}W_I`, with κ fixed by `b₀ = 1`.
pub fn inverse_navigation<T: Real>(h: &Mat4<T>, w: &[T; 4]) -> Result<InverseNavigation<T>> {
    let norm = quad_form(h, w).sqrt();
    if !((norm - T::one()).abs() <= T::lit(tolerances::WIND_UNIT_INPUT)) {
        return Err(Error::WindNotUnit { norm: norm.as_f64() });
    }
    let w_low = mat_vec(h, w);
    let ek = T::two() * w_low[0];
    if !(ek > T::zero()) {
        return Err(Error::ConformalSignError { value: ek.as_f64() });
    }
    Ok(InverseNavigation {
        a: scale(h, T::one() / ek),
        b: w_low.map(|v| T::two() * v / ek),
        kappa: ek.ln(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZermeloResidual<T> {
    /// `| ‖y/F − W‖_h − 1 |`
    pub unit: T,
    /// Relative gap between `F` and `|y|²_h / (2h(y, W))`.
    pub solved_form: T,
}

impl<T: Real> ZermeloResidual<T> {
    pub fn max(&self) -> T {
        self.unit.max(self.solved_form)
    }
}

pub fn zermelo_condition_residual<T: Real>(
    pm: &PointMetric<T>,
    nav: &NavigationData<T>,
    y: &[T; 4],
) -> Result<ZermeloResidual<T>> {
    check_beta(y)?;
    let f = pm.f(y)?;
    let u: [T; 4] = std::array::from_fn(|i| y[i] / f - nav.w[i]);
    let unit = (quad_form(&nav.h, &u).sqrt() - T::one()).abs();
    let solved = quad_form(&nav.h, y) / (T::two() * bilinear(&nav.h, y, &nav.w));
    Ok(ZermeloResidual { unit, solved_form: ((solved - f) / f).abs() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KillingReport<T> {
    pub is_killing: bool,
    pub max_time_gradient: T,
    pub max_spatial_gradient: T,
}

/// The wind is Killing iff `∂Q/∂t = 0` and `∂Q/∂xʲ = 0` on every sample.
pub fn killing_check_with<T: Real>(
    gradient: impl Fn(&[T; 4]) -> Result<[T; 4]>,
    samples: &[[T; 4]],
) -> Result<KillingReport<T>> {
    let (mut gt, mut gs) = (T::zero(), T::zero());
    for p in samples {
        let g = gradient(p)?;
        gt = gt.max(g[0].abs());
        for v in &g[1..] {
            gs = gs.max(v.abs());
        }
    }
    let tol = T::lit(tolerances::KILLING);
    Ok(KillingReport { is_killing: gt < tol && gs < tol, max_time_gradient: gt, max_spatial_gradient: gs })
}

pub fn killing_check<T: Real>(q: &ScalarField<T>, samples: &[[T; 4]]) -> Result<KillingReport<T>> {
    killing_check_with(|p| q.gradient(p), samples)
}

/// Killing check on the total potential `eφ + V + V_Q` of a neutral scenario.
pub fn killing_check_scenario<T: Real>(scenario: &Scenario<T>, samples: &[[T; 4]]) -> Result<KillingReport<T>> {
    if !scenario.is_neutral() {
        return Err(Error::InvalidScenario("the Killing criterion applies to neutral scenarios".into()));
    }
    killing_check_with(|p| scenario.total_potential_gradient(p), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::VectorField;
    use crate::linalg::{identity, relative_gap};
    use crate::scenario::{ConstantMetric, Scenario};

    #[test]
    fn unit_metric_navigation() {
        let nav = navigation_data(&ConstantMetric(identity::<f64, 4>()), &[0.0; 4]).unwrap();
        assert!((nav.conformal_factor() - 4.0).abs() < 1e-15);
        assert_eq!(nav.h, scale(&identity(), 4.0));
        assert_eq!(nav.w, [0.5, 0.0, 0.0, 0.0]);
        assert!(nav.unit_residual < 1e-15);
        let inv = inverse_navigation(&nav.h, &nav.w).unwrap();
        assert_eq!(inv.a, identity());
        assert_eq!(inv.b, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn neutral_forms() {
        // e^κ = −4Q, h₀₀ = 4Q², hᵢⱼ = −2mQδᵢⱼ
        let (m, q): (f64, f64) = (3.0, -0.7);
        let s = Scenario::neutral(m, ScalarField::constant(q));
        let nav = navigation_data(&s, &[0.0; 4]).unwrap();
        assert!((nav.conformal_factor() + 4.0 * q).abs() < 1e-14);
        assert!((nav.h[0][0] - 4.0 * q * q).abs() < 1e-14);
        assert!((nav.h[2][2] + 2.0 * m * q).abs() < 1e-14);
        assert!((nav.w[0] + 1.0 / (2.0 * q)).abs() < 1e-14);
        let s = Scenario::<f64>::neutral(2.0, ScalarField::constant(-0.5));
        assert!((quantum_wind(&s, &[0.0; 4]).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((navigation_data(&s, &[0.0; 4]).unwrap().w[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn explicit_wind_matches_navigation_wind() {
        let consts = crate::fields::Constants::<f64>::new(1.0, 1.3, 0.7, 2.0).unwrap();
        let s = Scenario::new(consts)
            .with_potential(ScalarField::parse("-2 - x^2").unwrap())
            .with_scalar_potential(ScalarField::parse("0.1*y").unwrap())
            .with_vector_potential(VectorField::parse(["-y/2", "x/2", "0.4"]).unwrap());
        let x = [0.0, 0.3, -0.5, 0.2];
        let w1 = quantum_wind(&s, &x).unwrap();
        let w2 = navigation_data(&s, &x).unwrap().w;
        for i in 0..4 {
            assert!((w1[i] - w2[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn magnetic_limit() {
        let s = Scenario::<f64>::new(Default::default())
            .with_potential(ScalarField::constant(-1.0))
            .with_vector_potential(VectorField::parse(["2000", "0", "1000"]).unwrap());
        let x = [0.0; 4];
        let exact = quantum_wind(&s, &x).unwrap();
        let approx = magnetic_dominated_wind(&s, &x).unwrap();
        for i in 0..4 {
            assert!((exact[i] - approx[i]).abs() <= 1e-2 * exact[i].abs());
        }
    }

    #[test]
    fn inverse_rejects_non_unit_wind() {
        assert!(matches!(
            inverse_navigation(&scale(&identity::<f64, 4>(), 4.0), &[0.6, 0.0, 0.0, 0.0]),
            Err(Error::WindNotUnit { .. })
        ));
    }

    #[test]
    fn zermelo_condition_examples() {
        let pm = PointMetric::new([0.0; 4], identity::<f64, 4>()).unwrap();
        let nav = navigation_from_metric(&pm.a, &pm.x).unwrap();
        for y in [[1.0, 2.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]] {
            let r = zermelo_condition_residual(&pm, &nav, &y).unwrap();
            assert!(r.max() < 1e-15, "{r:?}");
        }
    }

    #[test]
    fn round_trip_on_general_metric() {
        let a: Mat4<f64> = [
            [2.0, 0.3, -0.1, 0.2],
            [0.3, 1.5, 0.2, 0.0],
            [-0.1, 0.2, 1.2, 0.1],
            [0.2, 0.0, 0.1, 0.9],
        ];
        let nav = navigation_from_metric(&a, &[0.0; 4]).unwrap();
        let back = inverse_navigation(&nav.h, &nav.w).unwrap();
        assert!(relative_gap(&back.a, &a) < 1e-14);
        assert!((back.kappa - nav.kappa).abs() < 1e-14);
        assert!((back.b[0] - 1.0).abs() < 1e-15 && back.b[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn killing_examples() {
        let samples: Vec<[f64; 4]> = (0..11).map(|k| [0.1 * k as f64, -1.0 + 0.2 * k as f64, 0.0, 0.0]).collect();
        assert!(killing_check(&ScalarField::constant(-1.0), &samples).unwrap().is_killing);
        let r = killing_check(&ScalarField::parse("-(1 + x^2)").unwrap(), &samples).unwrap();
        assert!(!r.is_killing);
        assert!((r.max_spatial_gradient - 2.0).abs() < 1e-14);
        let r = killing_check(&ScalarField::parse("-1 - 0.1*t").unwrap(), &samples).unwrap();
        assert!(!r.is_killing && r.max_spatial_gradient == 0.0);
    }
}
