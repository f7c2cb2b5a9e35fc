use std::sync::OnceLock;

use ltc_core::audit::multiplicity_bound_holds;
use ltc_core::lt_divergence::{
    config_line, h_sweep, index_l, lt_quotient, sum_exact, sum_lower_bound, sum_with_records, sweep_csv, sweep_svg,
    unit_ball_volume, NeumaierSum, Sampling, SweepSampling, WeightedRecord,
};
use ltc_core::spectral_solver::SpectralParams;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// About 5·10⁴ index pairs, all certified, at `h = 10⁷`.
fn small() -> SpectralParams {
    SpectralParams::new(2, 1.0, 0.5, 0.05, 0.0505, 0.1205, 1e7).unwrap()
}

fn small_records() -> &'static (f64, Vec<WeightedRecord>) {
    static CELL: OnceLock<(f64, Vec<WeightedRecord>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let (r, recs) = sum_with_records(&small(), Sampling::Stride { s_ell: 1, s_j: 8 }).unwrap();
        (r.sum_value, recs)
    })
}

fn terms(p: &SpectralParams, recs: &[WeightedRecord]) -> Vec<f64> {
    let norm = unit_ball_volume(p.d) * p.h.powf(p.p_exp);
    recs.iter()
        .filter(|w| w.record.certified())
        .map(|w| w.weight * w.record.multiplicity as f64 * lt_quotient(w.record.lambda, p.p_exp, p.d).unwrap() / norm)
        .collect()
}

#[test]
fn full_and_strided_sums_agree_within_estimate() {
    let p = small();
    let full = sum_exact(&p, Sampling::Full).unwrap();
    assert_eq!(full.est_rel_err, 0.0);
    for s in [Sampling::Stride { s_ell: 2, s_j: 16 }, Sampling::Stride { s_ell: 2, s_j: 3 }] {
        let r = sum_exact(&p, s).unwrap();
        let diff = (r.sum_value - full.sum_value).abs() / full.sum_value;
        assert!(diff <= r.est_rel_err, "{s}: {diff} > {}", r.est_rel_err);
    }
}

#[test]
fn every_term_is_positive_and_recomputes_the_sum() {
    let (sum, recs) = small_records();
    let t = terms(&small(), recs);
    assert!(!t.is_empty());
    assert!(t.iter().all(|&x| x > 0.0));
    let total: NeumaierSum = t.iter().copied().collect();
    assert!((total.value() - sum).abs() <= 1e-12 * sum);
}

#[test]
fn terms_dominate_the_analytic_floor_where_bounds_hold() {
    let p = small();
    let (_, recs) = small_records();
    let mut n = 0;
    for w in recs.iter().filter(|w| w.record.certified() && w.record.bounds_ok) {
        let four_pi_j = 4.0 * std::f64::consts::PI * w.record.j as f64;
        let floor = (p.h / 2.0).powf(p.p_exp) / four_pi_j.powi(p.d as i32);
        assert!(lt_quotient(w.record.lambda, p.p_exp, p.d).unwrap() >= floor);
        n += 1;
    }
    assert!(n > 1000);
    let full = sum_exact(&p, Sampling::Stride { s_ell: 1, s_j: 8 }).unwrap();
    assert!(full.sum_value >= full.analytic_floor);
}

#[test]
fn multiplicity_bound_over_enumerated_rows() {
    for d in 2..=5 {
        let ls = index_l(1e8, 0.05, 0.15);
        for ell in (ls.lo..=ls.hi).step_by(97) {
            assert!(multiplicity_bound_holds(d, ell).unwrap(), "d={d} l={ell}");
        }
    }
}

#[test]
fn lower_bound_scales_with_log_h() {
    let p = small();
    let a = sum_lower_bound(&p.with_h(1e6));
    let b = sum_lower_bound(&p.with_h(1e9));
    let expect = (1e9f64.ln() / 1e6f64.ln()).powf(p.epsilon);
    assert!((b / a - expect).abs() < 1e-14);
}

#[test]
fn empty_index_set_is_below_threshold() {
    // j would have to exceed h^{γ+½}
    let p = SpectralParams::new(2, 1.0, 0.5, 0.05, 0.1, 0.11, 1e7).unwrap();
    let e = sum_exact(&p, Sampling::Full).unwrap_err();
    assert!(e.to_string().contains("flagged") || e.to_string().contains("empty"), "{e}");
}

#[test]
fn sweep_outputs_carry_the_config_and_repeat_exactly() {
    let base = small();
    let grid = [1e7, 1.05e7, 1.1e7];
    let sampling = Sampling::Random { n: 400, seed: 5 };
    let run = || {
        let t = h_sweep(&base, &grid, SweepSampling::Fixed(sampling)).unwrap();
        let header = config_line(&base, &grid, &sampling.to_string(), 5);
        (sweep_csv(&t, &header), sweep_svg(&t, &header))
    };
    let (csv, svg) = run();
    assert_eq!((csv.clone(), svg.clone()), run());
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# d=2"));
    assert!(lines.next().unwrap().starts_with("h,sum_value"));
    assert_eq!(lines.count(), 3);
    assert!(svg.contains("viewBox=\"0 0 800 500\""));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sum_is_order_independent(seed in any::<u64>()) {
        let (sum, recs) = small_records();
        let mut t = terms(&small(), recs);
        t.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let total: NeumaierSum = t.into_iter().collect();
        prop_assert!((total.value() - sum).abs() <= 1e-12 * sum);
    }
}
