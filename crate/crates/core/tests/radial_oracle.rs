mod common;

use common::acceptance_params;
use ltc_core::audit::certified_sample;
use ltc_core::phase_functions::{adaptive_order, hankel_ratio, log_deriv_j};
use ltc_core::radial_oracle::{
    default_outer_radius, oracle_contrast, shoot_inner, shoot_inner_to, shoot_outer, ShootResult,
};
use ltc_core::spectral_solver::EigenRecord;
use ltc_core::C64;
use proptest::prelude::*;

fn records() -> Vec<(u32, f64, EigenRecord)> {
    let mut out = Vec::new();
    for (d, h) in [(2, 1e6), (3, 1e7)] {
        for r in certified_sample(&acceptance_params(d, h), 3, 17, 5000).unwrap() {
            out.push((d, h, r));
        }
    }
    out
}

#[test]
fn agrees_with_phase_function_log_derivatives() {
    for (d, _, r) in records() {
        let shift = 1.0 - d as f64 / 2.0;
        let u_in = shoot_inner(d, r.ell, r.m).unwrap().log_deriv_at_1;
        let ld = log_deriv_j(r.nu, r.m, adaptive_order(r.nu, r.m)).unwrap().value;
        let expect = shift + r.m * ld;
        assert!((u_in - expect).norm() < 1e-6 * (1.0 + expect.norm()), "inner l={} j={}", r.ell, r.j);

        let rad = default_outer_radius(d, r.ell, r.k);
        let u_out = shoot_outer(d, r.ell, r.k, rad).unwrap().log_deriv_at_1;
        let expect = shift + r.k / hankel_ratio(r.nu, r.k, adaptive_order(r.nu, r.k)).unwrap();
        assert!((u_out - expect).norm() < 1e-6 * (1.0 + expect.norm()), "outer l={} j={}", r.ell, r.j);
    }
}

#[test]
fn outer_value_does_not_depend_on_start_radius() {
    for (d, _, r) in records() {
        let rad = default_outer_radius(d, r.ell, r.k);
        let a = shoot_outer(d, r.ell, r.k, rad).unwrap().log_deriv_at_1;
        let b = shoot_outer(d, r.ell, r.k, 2.0 * rad).unwrap().log_deriv_at_1;
        assert!((a - b).norm() < 1e-8 * (1.0 + r.k.norm()), "{}", (a - b).norm());
    }
}

#[test]
fn perturbed_eigenvalue_breaks_matching() {
    for (d, h, r) in records() {
        let c = oracle_contrast(d, h, &r, 1e-3).unwrap();
        assert!(c.check.mismatch < 1e-6, "{}", c.check.mismatch);
        assert!(c.ratio() > 100.0, "{}", c.ratio());
    }
}

#[test]
fn interior_values_satisfy_the_riccati_equation() {
    let (d, ell, m) = (3u32, 6u64, C64::new(45.0, -2.5));
    let c = (ell * (ell + d as u64 - 2)) as f64;
    for r in [0.3, 0.6, 0.9] {
        let dr = 1e-6;
        let at = |x: f64| shoot_inner_to(d, ell, m, x).unwrap().log_deriv_at_1;
        let u = at(r);
        let du = (at(r + dr) - at(r - dr)) / (2.0 * dr);
        let rhs = -u * u - (d as f64 - 1.0) / r * u - m * m + c / (r * r);
        assert!((du - rhs).norm() < 1e-5 * (m * m).norm(), "r={r}: {}", (du - rhs).norm());
    }
}

#[test]
fn source_is_independent_of_the_series_layers() {
    let src = include_str!("../src/radial_oracle.rs");
    for forbidden in ["phase_functions", "special_functions", "quadrature"] {
        assert!(!src.contains(forbidden), "{forbidden}");
    }
}

fn within_estimate(got: &ShootResult, exact: C64) -> bool {
    let err = (got.log_deriv_at_1 - exact).norm();
    err <= got.est_err + 1e-12 * (1.0 + exact.norm())
}

#[test]
fn estimate_covers_rounding_near_a_standing_wave() {
    let m = C64::new(2493.7091849050494, -0.47589698806687986);
    assert!(within_estimate(&shoot_inner(3, 0, m).unwrap(), m / m.tan() - 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// `d = 3, ℓ = 0`: `u_in = m cot m − 1`.
    #[test]
    fn inner_estimate_bounds_error(re in 5.0f64..3000.0, im in -8.0f64..0.0) {
        let m = C64::new(re, im);
        let got = shoot_inner(3, 0, m).unwrap();
        let exact = m / m.tan() - 1.0;
        prop_assert!(within_estimate(&got, exact), "{} vs {} est {}", got.log_deriv_at_1, exact, got.est_err);
    }

    /// `d = 3, ℓ = 0`: `u_out = ik − 1`.
    #[test]
    fn outer_estimate_bounds_error(re in 5.0f64..3000.0, im in 0.5f64..200.0) {
        let k = C64::new(re, im);
        let got = shoot_outer(3, 0, k, default_outer_radius(3, 0, k)).unwrap();
        let exact = C64::i() * k - 1.0;
        prop_assert!(within_estimate(&got, exact), "{} vs {} est {}", got.log_deriv_at_1, exact, got.est_err);
    }
}
