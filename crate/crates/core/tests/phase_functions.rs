mod common;

use common::*;
use ltc_core::audit::{phase_checks, total_violations};
use ltc_core::phase_functions::{adaptive_order, evaluate, psi, region_contains, theta, theta_prime, RemainderConstants};
use ltc_core::C64;
use proptest::prelude::*;

/// `(ν, z)` inside the region with some room to spare.
fn region_point() -> impl Strategy<Value = (f64, C64)> {
    (1.0f64..2000.0, 1.05f64..100.0, -0.95f64..0.95).prop_map(|(nu, t, s)| {
        let a = RemainderConstants::<f64>::derived().a;
        let x = a * nu * t;
        (nu, C64::new(x, x * s * 3f64.sqrt()))
    })
}

#[test]
fn theta_on_real_axis_matches_fixtures() {
    let w = worst_theta_real_axis(&fixtures());
    assert!(w < 1e-9, "{w}");
}

#[test]
fn nicholson_cross_check() {
    let s = nicholson_run(50, 2);
    assert_eq!(s.failures, 0, "worst ratio {}", s.worst_margin);
}

#[test]
fn psi_example_bound() {
    let z = C64::new(500.0, -1.0);
    let k = RemainderConstants::<f64>::derived();
    let v = psi(10.0, z, adaptive_order(10.0, z)).unwrap();
    assert!(v.norm() <= 2.0 * k.a * k.a * 100.0 / z.norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn theta_plus_psi_is_linear((nu, z) in region_point()) {
        let pe = evaluate(nu, z).unwrap();
        let pi = std::f64::consts::PI;
        let lhs = pe.theta + pe.psi;
        let rhs = z - nu * pi / 2.0 - pi / 4.0;
        prop_assert!((lhs - rhs).norm() <= 4.0 * f64::EPSILON * rhs.norm());
    }

    #[test]
    fn lemma_bounds_hold((nu, z) in region_point()) {
        prop_assume!(region_contains(nu, z * (1.0 - 2e-4)));
        let t = phase_checks(nu, z).unwrap();
        prop_assert_eq!(total_violations(&t), 0, "{:?}", t);
    }

    #[test]
    fn theta_derivative_matches((nu, z) in region_point()) {
        let p = adaptive_order(nu, z);
        let dz = 1e-4 * z.norm();
        prop_assume!(region_contains(nu, z - dz));
        let fd = (theta(nu, z + dz, p).unwrap() - theta(nu, z - dz, p).unwrap()) / (2.0 * dz);
        let exact = theta_prime(nu, z, p).unwrap();
        prop_assert!((fd - exact).norm() <= 1e-7 * exact.norm(), "{} vs {}", fd, exact);
    }

    /// `J Y′ − J′ Y` loses about `e^{2|Im z|}` to cancellation, so the absolute
    /// form is checked where that loss is small and the scaled form everywhere.
    #[test]
    fn assembled_wronskian(nu in 1.0f64..2000.0, t in 1.05f64..100.0, s in -0.95f64..0.95) {
        let x = RemainderConstants::<f64>::derived().a * nu * t;
        // the products grow like e^{2|Im z|} and must stay representable
        let z = C64::new(x, s * (x * 3f64.sqrt()).min(340.0));
        let pe = evaluate(nu, z).unwrap();
        let b = pe.assemble().unwrap();
        let w = b.j * b.yp - b.jp * b.y;
        let exact = 2.0 / (std::f64::consts::PI * z);
        let scale = (b.j * b.yp).norm().max((b.jp * b.y).norm());
        prop_assert!((w - exact).norm() < 1e-13 * scale);
        if z.im.abs() <= 5.0 {
            prop_assert!((w - exact).norm() < 1e-9 * exact.norm(), "{}", (w - exact).norm() / exact.norm());
        }
    }

    #[test]
    fn assembled_wronskian_near_real_axis(nu in 1.0f64..2000.0, t in 1.05f64..100.0, y in -5.0f64..5.0) {
        let a = RemainderConstants::<f64>::derived().a;
        let z = C64::new(a * nu * t, y);
        let b = evaluate(nu, z).unwrap().assemble().unwrap();
        let exact = 2.0 / (std::f64::consts::PI * z);
        let w = b.j * b.yp - b.jp * b.y;
        prop_assert!((w - exact).norm() < 1e-9 * exact.norm(), "{}", (w - exact).norm() / exact.norm());
    }

    #[test]
    fn modulus_times_phase_derivative_is_one((nu, z) in region_point()) {
        let pe = evaluate(nu, z).unwrap();
        prop_assert!((pe.modulus_sq * pe.theta_prime - 1.0).norm() < 1e-12);
    }
}
