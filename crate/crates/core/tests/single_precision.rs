use qhd_core::connection::kropina_spray;
use qhd_core::dynamics::{integrate_finsler_geodesic, IntegrationOptions};
use qhd_core::geometry::{assemble_associated_metric, PointMetric};
use qhd_core::linalg::relative_gap;
use qhd_core::{ScalarField, Scenario32, VectorField};

fn scenario() -> Scenario32 {
    Scenario32::new(Default::default())
        .with_potential(ScalarField::parse("0.1*(x^2 + y^2) - 2").unwrap())
        .with_vector_potential(VectorField::parse(["-0.1*y", "0.1*x", "0"]).unwrap())
}

#[test]
fn geometry_in_f32() {
    let s = scenario();
    let x = [0.0f32, 0.3, -0.2, 0.1];
    let y = [1.0f32, 0.2, -0.4, 0.1];
    let pm = PointMetric::new(x, assemble_associated_metric(&s, &x).unwrap()).unwrap();
    let g = pm.fundamental_tensor(&y).unwrap();
    let pm64 = PointMetric::new(x.map(f64::from), pm.a.map(|r| r.map(f64::from))).unwrap();
    let g64 = pm64.fundamental_tensor(&y.map(f64::from)).unwrap();
    assert!(relative_gap(&g.map(|r| r.map(f64::from)), &g64) < 1e-5);
    assert!(pm.kropina_determinant_gap(&y).unwrap() < 1e-4);
    assert!(kropina_spray(&s, &x, &y).unwrap().iter().all(|v| v.is_finite()));
}

#[test]
fn geodesic_in_f32_tracks_f64() {
    let x0 = [0.0, 0.3, 0.0, 0.1];
    let y0 = [1.0, 0.1, 0.2, 0.0];
    let t32 = integrate_finsler_geodesic(&scenario(), x0, y0, &IntegrationOptions::new(1e-2, 200)).unwrap();
    let s64 = qhd_core::Scenario64::new(Default::default())
        .with_potential(ScalarField::parse("0.1*(x^2 + y^2) - 2").unwrap())
        .with_vector_potential(VectorField::parse(["-0.1*y", "0.1*x", "0"]).unwrap());
    let x0 = x0.map(f64::from);
    let y0 = y0.map(f64::from);
    let t64 = integrate_finsler_geodesic(&s64, x0, y0, &IntegrationOptions::new(1e-2, 200)).unwrap();
    let (a, b) = (t32.last().unwrap().x, t64.last().unwrap().x);
    for i in 0..4 {
        assert!((f64::from(a[i]) - b[i]).abs() < 1e-4, "{a:?} {b:?}");
    }
}
