use std::fmt::Write as _;
use std::fs;

use ltc_core::audit::{audit_phase, audit_records, certified_sample, sample_pairs, total_violations, Tallies};
use ltc_core::lt_divergence::{fmt17, h_sweep, sweep_csv, sweep_svg, SweepSampling};
use ltc_core::phase_functions::{adaptive_order, evaluate};
use ltc_core::radial_oracle::{mismatch_at, oracle_contrast, OracleCheck};
use ltc_core::spectral_solver::{construct, k_of, solve_characteristic, EigenRecord, Flag, SpectralParams};
use ltc_core::special_functions::{bessel_k, half_integer_reference, series_j2_y2, series_jjp_yyp};
use ltc_core::C64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::{CliError, Outcome, What};

fn c_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn write_or_print(path: Option<&str>, body: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| CliError::Io(format!("{p}: {e}"))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialise");
    s.push('\n');
    s
}

pub fn bessel(what: What, nu: Option<f64>, z: Option<C64>, x: Option<f64>, order: Option<usize>) -> Result<Outcome, CliError> {
    let need_nu = || nu.ok_or_else(|| CliError::Usage(format!("--nu is required for {}", what.name())));
    let need_z = || z.ok_or_else(|| CliError::Usage(format!("--z is required for {}", what.name())));
    let out = match what {
        What::K0 | What::K1 => {
            let x = x.ok_or_else(|| CliError::Usage("--x is required for k0 and k1".into()))?;
            let k = bessel_k(if what == What::K0 { 0 } else { 1 }, x)?;
            json!({ "what": what.name(), "x": x, "value": k.value, "underflow": k.underflow })
        }
        What::J2y2 | What::Jjpyyp => {
            let (nu, z) = (need_nu()?, need_z()?);
            let p = order.unwrap_or_else(|| adaptive_order(nu, z));
            let s = if what == What::J2y2 { series_j2_y2(z, nu, p)? } else { series_jjp_yyp(z, nu, p)? };
            json!({
                "what": what.name(),
                "nu": nu,
                "z_re": z.re,
                "z_im": z.im,
                "order": s.truncation_order,
                "value_re": s.value.re,
                "value_im": s.value.im,
                "remainder": s.remainder_bound,
            })
        }
        What::Half => {
            let z = need_z()?;
            let c = half_integer_reference(z)?;
            json!({
                "what": what.name(),
                "nu": 0.5,
                "z_re": z.re,
                "z_im": z.im,
                "j": c_json(c.j),
                "y": c_json(c.y),
                "jp": c_json(c.jp),
                "yp": c_json(c.yp),
            })
        }
    };
    print!("{}", pretty(&out));
    Ok(Outcome::Ok)
}

pub fn phase(nu: f64, z: C64, order: Option<usize>) -> Result<Outcome, CliError> {
    let pe = match order {
        Some(p) => ltc_core::phase_functions::evaluate_with_order(nu, z, p)?,
        None => evaluate(nu, z)?,
    };
    let out = json!({
        "nu": pe.nu,
        "z": c_json(pe.z),
        "theta": c_json(pe.theta),
        "psi": c_json(pe.psi),
        "theta_prime": c_json(pe.theta_prime),
        "modulus_sq": c_json(pe.modulus_sq),
        "z0": c_json(pe.z0),
        "hankel_ratio": c_json(pe.hankel_ratio),
        "p_used": pe.p_used,
        "psi_bound": pe.psi_bound,
        "psi_tail": pe.psi_tail,
        "in_region": pe.in_region,
    });
    print!("{}", pretty(&out));
    Ok(Outcome::Ok)
}

const RECORD_COLUMNS: &str = "ell,j,nu,m0_re,m0_im,m1_re,m1_im,m_re,m_im,k_re,k_im,lambda_re,lambda_im,multiplicity,\
char_residual,sign_ok,strip_ok,bounds_ok,newton_iters,im_theta,xi_abs,err_abs,flag";

fn record_row(r: &EigenRecord) -> String {
    let c = |z: C64| format!("{},{}", fmt17(z.re), fmt17(z.im));
    let flag = match &r.flag {
        None => String::new(),
        Some(f) => f.label().to_string(),
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.ell,
        r.j,
        fmt17(r.nu),
        c(r.m0),
        c(r.m1),
        c(r.m),
        c(r.k),
        c(r.lambda),
        r.multiplicity,
        fmt17(r.char_residual),
        r.sign_ok,
        r.strip_ok,
        r.bounds_ok,
        r.newton_iters,
        fmt17(r.im_theta),
        fmt17(r.xi_abs),
        fmt17(r.err_abs),
        flag
    )
}

fn below_threshold_reasons(records: &[EigenRecord]) -> Vec<String> {
    records
        .iter()
        .filter_map(|r| match &r.flag {
            Some(Flag::BelowThreshold(msg)) => Some(format!("(l={}, j={}): {msg}", r.ell, r.j)),
            _ => None,
        })
        .collect()
}

/// The pair given by `ell` and `j`, if any.
fn requested_pair(cfg: &RunConfig) -> Result<Option<(u64, u64)>, CliError> {
    match (cfg.u64_opt("ell")?, cfg.u64_opt("j")?) {
        (Some(l), Some(j)) => Ok(Some((l, j))),
        (None, None) => Ok(None),
        _ => Err(CliError::Usage("ell and j must be given together".into())),
    }
}

pub fn solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let records = match requested_pair(cfg)? {
        Some((ell, j)) => vec![solve_characteristic(&params, ell, j)?],
        None => {
            let n = cfg.u64_or("n", 1)? as usize;
            let pairs = sample_pairs(&params, n, cfg.u64_or("seed", 0)?)?;
            let recs: Vec<ltc_core::Result<EigenRecord>> =
                pairs.par_iter().map(|&(l, j)| construct(params.d, params.h, l, j)).collect();
            recs.into_iter().collect::<ltc_core::Result<Vec<_>>>()?
        }
    };
    let mut csv = String::new();
    let _ = writeln!(csv, "{}", cfg.header("solve"));
    let _ = writeln!(csv, "{RECORD_COLUMNS}");
    for r in &records {
        let _ = writeln!(csv, "{}", record_row(r));
    }
    write_or_print(cfg.raw("out_csv"), &csv)?;

    let reasons = below_threshold_reasons(&records);
    if !reasons.is_empty() {
        for r in &reasons {
            eprintln!("below threshold {r}");
        }
        return Err(CliError::Domain(format!("{} of {} records fail a precondition at h = {}", reasons.len(), records.len(), params.h)));
    }
    let flagged = records.iter().filter(|r| !r.certified()).count();
    if flagged > 0 {
        eprintln!("{flagged} of {} records flagged", records.len());
        return Ok(Outcome::Failed);
    }
    Ok(Outcome::Ok)
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let base = cfg.params()?;
    let grid = cfg.h_grid()?;
    if grid.len() < 3 {
        return Err(CliError::Usage(format!("h_grid needs at least 3 values, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::Usage("h_grid must be strictly ascending".into()));
    }
    let sampling = match cfg.sampling()? {
        Some(s) => SweepSampling::Fixed(s),
        None => SweepSampling::Auto,
    };
    let table = h_sweep(&base, &grid, sampling)?;
    let header = cfg.header("sweep");
    write_or_print(cfg.raw("out_csv"), &sweep_csv(&table, &header))?;
    if let Some(p) = cfg.raw("out_svg") {
        write_or_print(Some(p), &sweep_svg(&table, &header))?;
    }
    if let Some(p) = cfg.raw("out_json") {
        let body = json!({ "config": cfg.to_json("sweep"), "table": table });
        write_or_print(Some(p), &pretty(&body))?;
    }

    let floor = 0.8 * base.epsilon;
    let slope_ok = table.slope.is_some_and(|s| s >= floor);
    let rows_ok = table.all_rows_pass();
    match table.slope {
        Some(s) => eprintln!("fitted exponent {} (need >= {})", fmt17(s), fmt17(floor)),
        None => eprintln!("fitted exponent unavailable"),
    }
    for row in table.rows.iter().filter(|r| !r.passes_bound()) {
        match &row.report {
            Ok(_) => eprintln!("h = {}: below lower bound", fmt17(row.h)),
            Err(e) => eprintln!("h = {}: {e}", fmt17(row.h)),
        }
    }
    eprintln!("lower bound {}", if rows_ok { "PASS" } else { "FAIL" });
    Ok(if slope_ok && rows_ok { Outcome::Ok } else { Outcome::Failed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Suites {
    pub phase: bool,
    pub records: bool,
    pub oracle: bool,
}

fn oracle_checks(params: &SpectralParams, n: usize, seed: u64, perturb: f64) -> Result<Vec<OracleCheck>, CliError> {
    let recs = certified_sample(params, n, seed, 5000)?;
    let checks: Vec<ltc_core::Result<OracleCheck>> = recs
        .par_iter()
        .map(|r| {
            let m = r.m * (1.0 + perturb);
            mismatch_at(params.d, r.ell, r.j, m, k_of(m, params.h)?)
        })
        .collect();
    Ok(checks.into_iter().collect::<ltc_core::Result<Vec<_>>>()?)
}

pub fn verify(cfg: &RunConfig, suites: Suites) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let seed = cfg.u64_or("seed", 0)?;
    let perturb = cfg.f64_or("perturb", 0.0)?;
    let mut summary = serde_json::Map::new();
    summary.insert("config".into(), cfg.to_json("verify"));
    let mut violations = 0u64;

    if suites.phase {
        let n = cfg.u64_or("phase_sample", 1200)? as usize;
        let t: Tallies = audit_phase(n, cfg.f64_or("nu_max", 2000.0)?, seed)?;
        violations += total_violations(&t);
        summary.insert("phase".into(), json!(t));
    }
    if suites.records {
        let n = cfg.u64_or("n", 200)? as usize;
        let (audit, _) = audit_records(&params, n, seed, perturb)?;
        violations += total_violations(&audit.tallies);
        summary.insert("records".into(), json!(audit));
    }
    if suites.oracle {
        let n = cfg.u64_or("oracle_sample", 5)? as usize;
        let tol = cfg.f64_or("oracle_tol", 1e-6)?;
        let checks = oracle_checks(&params, n, seed, perturb)?;
        let bad = checks.iter().filter(|c| !(c.mismatch < tol)).count() as u64;
        violations += bad;
        let worst = checks.iter().map(|c| c.mismatch).fold(0.0, f64::max);
        summary.insert(
            "oracle".into(),
            json!({ "checked": checks.len(), "violations": bad, "max_mismatch": worst, "checks": checks }),
        );
    }
    summary.insert("total_violations".into(), json!(violations));
    let body = pretty(&Value::Object(summary));
    write_or_print(cfg.raw("out_json"), &body)?;
    Ok(if violations == 0 { Outcome::Ok } else { Outcome::Failed })
}

pub fn oracle(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let tol = cfg.f64_or("oracle_tol", 1e-6)?;
    let rel = cfg.f64_or("oracle_rel", 1e-3)?;
    let records = match requested_pair(cfg)? {
        Some((ell, j)) => vec![solve_characteristic(&params, ell, j)?],
        None => certified_sample(&params, cfg.u64_or("oracle_sample", 5)? as usize, cfg.u64_or("seed", 0)?, 5000)?,
    };
    if let Some(r) = records.iter().find(|r| !r.certified()) {
        let label = r.flag.as_ref().map_or("", Flag::label);
        return Err(CliError::Domain(format!("record (l={}, j={}) is not certified: {label}", r.ell, r.j)));
    }
    let contrasts: Vec<ltc_core::Result<_>> =
        records.par_iter().map(|r| oracle_contrast(params.d, params.h, r, rel)).collect();
    let contrasts = contrasts.into_iter().collect::<ltc_core::Result<Vec<_>>>()?;
    let ok = contrasts.iter().all(|c| c.check.mismatch < tol);
    let rows: Vec<Value> = contrasts
        .iter()
        .map(|c| json!({ "check": c.check, "perturbed_mismatch": c.perturbed_mismatch, "ratio": c.ratio() }))
        .collect();
    let body = json!({ "config": cfg.to_json("oracle"), "checks": rows, "pass": ok });
    write_or_print(cfg.raw("out_json"), &pretty(&body))?;
    Ok(if ok { Outcome::Ok } else { Outcome::Failed })
}
