//! Property suites over the geometric kernels: projection round trips,
//! signed-distance monotonicity, and winding integrality/additivity.

use std::sync::Arc;

use proptest::prelude::*;
use vortexlab::analysis::{circle_loop, winding_number};
use vortexlab::curve::{build_curve, CurveSpec, PlanarCurve, TubeCoords};
use vortexlab::domain::{BoundaryDatum, DomainSpec, Grid2D, StarDomain};
use vortexlab::vec2::Vec2;

fn curves() -> &'static [PlanarCurve<f64>] {
    static CURVES: std::sync::OnceLock<Vec<PlanarCurve<f64>>> = std::sync::OnceLock::new();
    CURVES.get_or_init(|| {
        vec![
            build_curve(&CurveSpec::Circle).unwrap(),
            build_curve(&CurveSpec::Ellipse { a: 2.0, b: 1.0 }).unwrap(),
            build_curve(&CurveSpec::FourierCircle {
                cos: vec![0.08, 0.0, 0.05],
                sin: vec![0.0, 0.1],
            })
            .unwrap(),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    /// τ(project(z).s) + project(z).t · n = z within 1e-8, and projecting a
    /// curve point is the identity in (s, t).
    #[test]
    fn projection_round_trip(curve_ix in 0usize..3, s in 0.0..std::f64::consts::TAU, tf in -0.97f64..0.97) {
        let curve = &curves()[curve_ix];
        let t = tf * curve.tube_radius();
        let z = curve.tube_point(TubeCoords { s, t });
        let tc = curve.project(z).unwrap();
        let recon = curve.tube_point(tc);
        prop_assert!((recon - z).norm() < 1e-8, "round trip {:?}", (recon - z).norm());

        let on_curve = curve.project(curve.tau(s)).unwrap();
        prop_assert!(on_curve.t.abs() < 1e-8);
        prop_assert!((on_curve.s - s).to_owned().rem_euclid(std::f64::consts::TAU).min(
            (std::f64::consts::TAU - (on_curve.s - s).rem_euclid(std::f64::consts::TAU)).abs()) < 1e-7);
    }

    /// Moving from τ(s) along the inward normal raises the signed distance
    /// with unit slope.
    #[test]
    fn signed_distance_linear_along_normal(curve_ix in 0usize..3, s in 0.0..std::f64::consts::TAU, tf in 0.05f64..0.9) {
        let curve = &curves()[curve_ix];
        let t = tf * curve.tube_radius();
        let p_in = curve.tau(s) + curve.inward_normal(s) * t;
        let p_out = curve.tau(s) - curve.inward_normal(s) * t;
        prop_assert!((curve.project(p_in).unwrap().t - t).abs() < 1e-8);
        prop_assert!((curve.project(p_out).unwrap().t + t).abs() < 1e-8);
    }
}

#[test]
fn projection_round_trip_dense() {
    // Fixed-seed bulk version: 10⁴ tube points per curve at 1e-8.
    let mut seed = 0x517e0ad_u64;
    let mut rnd = move || {
        seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (seed >> 11) as f64 / (1u64 << 53) as f64
    };
    for curve in curves() {
        for _ in 0..10_000 {
            let s = std::f64::consts::TAU * rnd();
            let t = (2.0 * rnd() - 1.0) * 0.97 * curve.tube_radius();
            let z = curve.tube_point(TubeCoords { s, t });
            let tc = curve.project(z).unwrap();
            let recon = curve.tube_point(tc);
            assert!((recon - z).norm() < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Winding numbers are exact integers and add over vortex configurations.
    #[test]
    fn winding_integrality_and_additivity(
        d1 in -2i32..=2,
        d2 in -2i32..=2,
        x1 in -0.3f64..0.0,
        x2 in 0.05f64..0.35,
    ) {
        let domain = Arc::new(StarDomain::build(&DomainSpec::Disc { r: 1.0 }).unwrap());
        let grid = Arc::new(Grid2D::rasterize(domain, 96).unwrap());
        let curve = Arc::new(build_curve(&CurveSpec::Circle).unwrap());
        let total = d1 + d2;
        let datum = BoundaryDatum::new(curve.clone(), total, |_| 0.0).unwrap();
        let a = Vec2::new(x1, 0.12);
        let b = Vec2::new(x2, -0.2);
        let u = vortexlab::analysis::canonical_map(
            grid.clone(), curve.clone(), &datum, &[(a, d1), (b, d2)], 1e-10,
        ).unwrap();
        let la = circle_loop(&grid, a, 0.12);
        let lb = circle_loop(&grid, b, 0.12);
        let lboth = circle_loop(&grid, Vec2::zero(), 0.85);
        prop_assert_eq!(winding_number(&u, &curve, &la).unwrap(), d1);
        prop_assert_eq!(winding_number(&u, &curve, &lb).unwrap(), d2);
        prop_assert_eq!(winding_number(&u, &curve, &lboth).unwrap(), total);
    }
}
