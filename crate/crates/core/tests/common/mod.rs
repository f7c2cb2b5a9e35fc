#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use ltc_core::audit::{audit_phase, audit_records, certified_sample, sample_region_point, total_violations, Tallies};
use ltc_core::fixtures::{FixtureSet, Quantity};
use ltc_core::lt_divergence::{config_line, h_sweep, sweep_csv, SweepSampling, SweepTable};
use ltc_core::phase_functions::{evaluate, nicholson_validate, theta, adaptive_order};
use ltc_core::radial_oracle::oracle_contrast;
use ltc_core::special_functions::{bessel_k, half_integer_reference};
use ltc_core::spectral_solver::SpectralParams;
use ltc_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub fn fixtures() -> FixtureSet {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/fixtures.jsonl");
    FixtureSet::load(path).expect("fixture file")
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

/// One reference point with all of its tabulated quantities.
pub struct Point {
    pub nu: f64,
    pub z: C64,
    pub values: BTreeMap<Quantity, C64>,
}

pub fn grouped_points(set: &FixtureSet) -> Vec<Point> {
    let mut map: BTreeMap<(u64, u64, u64), Point> = BTreeMap::new();
    for r in &set.records {
        let key = (r.nu.to_bits(), r.z_re.to_bits(), r.z_im.to_bits());
        map.entry(key)
            .or_insert_with(|| Point { nu: r.nu, z: r.z(), values: BTreeMap::new() })
            .values
            .insert(r.quantity, r.value());
    }
    map.into_values().collect()
}

pub struct SpecialErrors {
    pub points: usize,
    pub j: f64,
    pub y: f64,
    pub log_deriv_j: f64,
    pub hankel_ratio: f64,
    pub half_integer: f64,
}

impl SpecialErrors {
    pub fn worst_assembled(&self) -> f64 {
        self.j.max(self.y).max(self.log_deriv_j).max(self.hankel_ratio)
    }
}

/// Assembled values against the grid with `ν ≥ 10`, `|z| ≥ 5ν`.
pub fn special_function_errors(set: &FixtureSet) -> SpecialErrors {
    let mut e = SpecialErrors { points: 0, j: 0.0, y: 0.0, log_deriv_j: 0.0, hankel_ratio: 0.0, half_integer: 0.0 };
    for pt in grouped_points(set) {
        let v = &pt.values;
        if pt.nu == 0.5 {
            if let (Some(&j), Some(&y)) = (v.get(&Quantity::J), v.get(&Quantity::Y)) {
                let hi = half_integer_reference(pt.z).unwrap();
                e.half_integer = e.half_integer.max(rel(hi.j, j)).max(rel(hi.y, y));
                if let (Some(&jp), Some(&yp)) = (v.get(&Quantity::Jp), v.get(&Quantity::Yp)) {
                    e.half_integer = e.half_integer.max(rel(hi.jp, jp)).max(rel(hi.yp, yp));
                }
            }
            continue;
        }
        if pt.nu < 10.0 || pt.z.norm() < 5.0 * pt.nu || !v.contains_key(&Quantity::J) {
            continue;
        }
        let pe = evaluate(pt.nu, pt.z).unwrap();
        let asm = pe.assemble().unwrap();
        e.points += 1;
        e.j = e.j.max(rel(asm.j, v[&Quantity::J]));
        e.y = e.y.max(rel(asm.y, v[&Quantity::Y]));
        let ld = pe.log_deriv_j().unwrap().value;
        e.log_deriv_j = e.log_deriv_j.max(rel(ld, v[&Quantity::Jp] / v[&Quantity::J]));
        e.hankel_ratio = e.hankel_ratio.max(rel(pe.hankel_ratio, v[&Quantity::H1] / v[&Quantity::H1p]));
    }
    e
}

/// Worst `J Y′ − J′ Y − 2/(πz)` relative to the size of the two products.
pub fn worst_wronskian(set: &FixtureSet) -> f64 {
    let mut worst: f64 = 0.0;
    for pt in grouped_points(set) {
        let v = &pt.values;
        let (Some(&j), Some(&y), Some(&jp), Some(&yp)) =
            (v.get(&Quantity::J), v.get(&Quantity::Y), v.get(&Quantity::Jp), v.get(&Quantity::Yp))
        else {
            continue;
        };
        let w = j * yp - jp * y;
        let exact = 2.0 / (std::f64::consts::PI * pt.z);
        let scale = (j * yp).norm().max((jp * y).norm()).max(exact.norm());
        worst = worst.max((w - exact).norm() / scale);
    }
    worst
}

pub fn worst_bessel_k(set: &FixtureSet) -> f64 {
    let mut worst: f64 = 0.0;
    for r in &set.records {
        let order = match r.quantity {
            Quantity::K0 => 0,
            Quantity::K1 => 1,
            _ => continue,
        };
        let k = bessel_k(order, r.z_re).unwrap().value;
        worst = worst.max((k - r.value_re).abs() / r.value_re.abs());
    }
    worst
}

pub fn worst_theta_real_axis(set: &FixtureSet) -> f64 {
    let mut worst: f64 = 0.0;
    for r in set.of(Quantity::ThetaRealAxis) {
        let z = r.z();
        let t = theta(r.nu, z, adaptive_order(r.nu, z)).unwrap();
        worst = worst.max((t.re - r.value_re).abs() / r.value_re.abs());
    }
    worst
}

pub struct NicholsonSummary {
    pub points: usize,
    pub failures: usize,
    pub worst_margin: f64,
}

/// Nicholson's integral against the series on `n` region points with `ν ≤ 50`.
pub fn nicholson_run(n: usize, seed: u64) -> NicholsonSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, C64)> = (0..n)
        .map(|_| {
            let nu = rng.gen_range(1.0..50.0);
            (nu, sample_region_point(&mut rng, nu))
        })
        .collect();
    let margins: Vec<f64> = pts
        .par_iter()
        .map(|&(nu, z)| {
            let c = nicholson_validate(nu, z).unwrap();
            c.residual / (1e-8 + c.remainder_bound)
        })
        .collect();
    NicholsonSummary {
        points: n,
        failures: margins.iter().filter(|&&m| m.is_nan() || m >= 1.0).count(),
        worst_margin: margins.iter().cloned().fold(0.0, f64::max),
    }
}

pub fn acceptance_params(d: u32, h: f64) -> SpectralParams {
    SpectralParams::new(d, 1.0, 0.5, 0.05, 0.15, 0.3, h).unwrap()
}

pub const GRID: [(u32, f64); 6] = [(2, 1e6), (2, 1e7), (2, 1e8), (3, 1e6), (3, 1e7), (3, 1e8)];

/// Phase-bound tallies plus the `Im θ` window at solver points.
pub fn lemma_suites(n: usize, seed: u64) -> (Tallies, Tallies) {
    let phase = audit_phase(n, 2000.0, seed).unwrap();
    let mut window = Tallies::new();
    let per = n.div_ceil(GRID.len());
    for &(d, h) in &GRID {
        let (a, _) = audit_records(&acceptance_params(d, h), per, seed, 0.0).unwrap();
        let t = a.tallies.get("theta_window").copied().unwrap_or_default();
        let e = window.entry("theta_window".into()).or_default();
        e.checked += t.checked;
        e.violations += t.violations;
    }
    (phase, window)
}

/// Record audit over the certification grid.
pub fn certification(n: usize, seed: u64) -> Vec<(u32, f64, u64, Tallies)> {
    GRID.iter()
        .map(|&(d, h)| {
            let (a, _) = audit_records(&acceptance_params(d, h), n, seed, 0.0).unwrap();
            (d, h, a.n_solved, a.tallies)
        })
        .collect()
}

/// Checks that make up the certification criterion.
pub const CERTIFICATION_KEYS: [&str; 7] =
    ["residual", "sign", "strip", "eigen_im_lower", "eigen_modulus", "root_ball", "root_separation"];

pub fn certification_violations(t: &Tallies) -> u64 {
    CERTIFICATION_KEYS.iter().map(|k| t.get(*k).map_or(0, |v| v.violations)).sum()
}

pub struct OracleSummary {
    pub d: u32,
    pub h: f64,
    pub records: usize,
    pub worst_mismatch: f64,
    pub worst_ratio: f64,
}

/// Radial shooting at up to `n` certified records per grid point.
pub fn oracle_run(n: usize, seed: u64) -> Vec<OracleSummary> {
    GRID.iter()
        .map(|&(d, h)| {
            let params = acceptance_params(d, h);
            let recs = certified_sample(&params, n, seed, 20_000).unwrap();
            let cs: Vec<_> = recs.par_iter().map(|r| oracle_contrast(d, h, r, 1e-3).unwrap()).collect();
            OracleSummary {
                d,
                h,
                records: cs.len(),
                worst_mismatch: cs.iter().map(|c| c.check.mismatch).fold(0.0, f64::max),
                worst_ratio: cs.iter().map(|c| c.ratio()).fold(f64::INFINITY, f64::min),
            }
        })
        .collect()
}

pub const SWEEP_GRID: [f64; 4] = [1e5, 1e6, 1e7, 1e8];

pub fn divergence_sweep() -> SweepTable {
    h_sweep(&acceptance_params(2, SWEEP_GRID[0]), &SWEEP_GRID, SweepSampling::Auto).unwrap()
}

pub fn sweep_bytes(table: &SweepTable) -> String {
    let header = config_line(&table.base, &SWEEP_GRID, "auto", 0);
    sweep_csv(table, &header)
}

pub fn violations(t: &Tallies) -> u64 {
    total_violations(t)
}
