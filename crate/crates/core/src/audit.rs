//! Bound audits: sample points or solved records and count how often each
//! proven inequality fails numerically.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lt_divergence::{index_j, index_l};
use crate::phase_functions::{adaptive_order, evaluate, psi, region_contains, RemainderConstants};
use crate::spectral_solver::{
    construct, err_from, k_of, matching_ratio, multiplicity, solve_m1, xi, EigenRecord, Flag, SpectralParams,
    RESIDUAL_TOL,
};
use crate::C64;

/// Checks performed and failures seen for one inequality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub checked: u64,
    pub violations: u64,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        self.checked += 1;
        self.violations += u64::from(!ok);
    }

    fn merge(&mut self, other: Tally) {
        self.checked += other.checked;
        self.violations += other.violations;
    }
}

/// Keyed by check name; the order is fixed so serialised output is stable.
pub type Tallies = BTreeMap<String, Tally>;

fn merge_into(acc: &mut Tallies, part: Tallies) {
    for (k, v) in part {
        acc.entry(k).or_default().merge(v);
    }
}

pub fn total_violations(t: &Tallies) -> u64 {
    t.values().map(|v| v.violations).sum()
}

/// Relative step of the centred differences used for `ψ′` and `ψ″`.
pub const FD_STEP: f64 = 1e-4;

/// Draws `z` with `Aν < Re z`, `|Im z| < √3·Re z` so that the difference
/// stencil `z ± 2δ` stays inside the region.
pub fn sample_region_point<R: Rng>(rng: &mut R, nu: f64) -> C64 {
    let a = RemainderConstants::<f64>::derived().a;
    loop {
        let x = a * nu * 10f64.powf(rng.gen_range(0.005..3.0));
        let y = x * 3f64.sqrt() * rng.gen_range(-0.98..0.98);
        let z = C64::new(x, y);
        let step = FD_STEP * z.norm();
        let stencil = [z - 2.0 * step, z + 2.0 * step];
        if region_contains(nu, z) && stencil.iter().all(|&w| region_contains(nu, w)) {
            return z;
        }
    }
}

/// Phase-function inequalities at one point.
pub fn phase_checks(nu: f64, z: C64) -> Result<Tallies> {
    let k = RemainderConstants::<f64>::derived();
    let a2 = k.a * k.a;
    let r = z.norm();
    let nu2 = nu * nu;
    let p = adaptive_order(nu, z);
    let at = |w: C64| psi(nu, w, p);
    let v = at(z)?;
    let dz = FD_STEP * r;
    let (vp, vm) = (at(z + dz)?, at(z - dz)?);
    let (vp2, vm2) = (at(z + 2.0 * dz)?, at(z - 2.0 * dz)?);
    // fourth-order stencils
    let d1 = (vm2 - vp2 + 8.0 * (vp - vm)) / (12.0 * dz);
    let d2 = (-vp2 - vm2 + 16.0 * (vp + vm) - 30.0 * v) / (12.0 * dz * dz);
    // slack for the rounding floor of the stencils
    let noise1 = 1e-13 * v.norm().max(f64::MIN_POSITIVE) / dz;
    let noise2 = 1e-13 * v.norm().max(f64::MIN_POSITIVE) / (dz * dz);
    let mut t = Tallies::new();
    let mut put = |name: &str, ok: bool| t.entry(name.to_string()).or_default().record(ok);
    put("psi_modulus", v.norm() <= 2.0 * a2 * nu2 / r);
    put("psi_imaginary", v.im.abs() <= 4.0 * a2 * z.im.abs() * nu2 / (r * r) + 1e-15 * v.norm());
    put("psi_first_derivative", d1.norm() <= a2 * nu2 / (r * r) + noise1);
    put("psi_second_derivative", d2.norm() <= k.a_tilde * nu2 / (r * r * r) + noise2);
    Ok(t)
}

/// Runs [`phase_checks`] on `n` random `(ν, z)` with `ν` log-uniform in `[1, nu_max]`.
pub fn audit_phase(n: usize, nu_max: f64, seed: u64) -> Result<Tallies> {
    if !(nu_max >= 1.0) {
        return Err(Error::Precondition(format!("nu_max must be at least 1, got {nu_max}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, C64)> = (0..n)
        .map(|_| {
            let nu = nu_max.powf(rng.gen_range(0.0..1.0));
            (nu, sample_region_point(&mut rng, nu))
        })
        .collect();
    let parts: Vec<Result<Tallies>> = points.par_iter().map(|&(nu, z)| phase_checks(nu, z)).collect();
    let mut acc = Tallies::new();
    for p in parts {
        merge_into(&mut acc, p?);
    }
    Ok(acc)
}

/// Index pairs drawn uniformly: `ℓ` from its range, then `j` from the row.
pub fn sample_pairs(params: &SpectralParams, n: usize, seed: u64) -> Result<Vec<(u64, u64)>> {
    params.validate()?;
    let ls = index_l(params.h, params.alpha, params.beta);
    if ls.is_empty() || ls.lo <= 1 {
        return Err(Error::BelowThreshold(format!("l range [{}, {}] unusable at h = {}", ls.lo, ls.hi, params.h)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut misses = 0usize;
    while out.len() < n {
        let ell = rng.gen_range(ls.lo..=ls.hi);
        let js = index_j(params.h, ell, params.gamma, params.q())?;
        if js.is_empty() {
            misses += 1;
            if misses > 100 * n.max(1) {
                return Err(Error::BelowThreshold(format!("j ranges are empty at h = {}", params.h)));
            }
            continue;
        }
        out.push((ell, rng.gen_range(js.lo..=js.hi)));
    }
    Ok(out)
}

/// A record whose final Newton solve ran to completion.
pub fn is_solved(rec: &EigenRecord) -> bool {
    !matches!(rec.flag, Some(Flag::BelowThreshold(_)) | Some(Flag::NoConvergence(_)))
}

/// Inequalities at a solved record, re-evaluated at `m·(1 + perturb)`.
pub fn record_checks(params: &SpectralParams, rec: &EigenRecord, perturb: f64) -> Result<Tallies> {
    let h = params.h;
    let nu = rec.nu;
    let m = rec.m * (1.0 + perturb);
    let log_h = h.ln();
    let mut t = Tallies::new();
    let mut put = |name: &str, ok: bool| t.entry(name.to_string()).or_default().record(ok);

    put("root_ball", (rec.m1 - rec.m0).norm() < nu / 2.0);
    put("solver_ball", (m - rec.m1).norm() < 2.0);
    let next = solve_m1(nu, rec.j + 1, h)?.root;
    put("root_separation", (next - rec.m1).norm() > 4.0);
    put("multiplicity", rec.ell < 2 || multiplicity_bound_holds(params.d, rec.ell)?);

    let in_region = region_contains(nu, m);
    put("region", in_region);
    if !in_region {
        return Ok(t);
    }
    let pe = evaluate(nu, m)?;
    let th = pe.theta.im;
    put("theta_window", -2.0 * params.gamma * log_h <= th && th <= -params.alpha * log_h);
    let x = xi(nu, m, h)?;
    put("xi_small", x.norm() < 1.0);
    let err = err_from(rec.j, m, pe.theta, x)?;
    put("err_small", err.norm() < 1.0);

    let k = k_of(m, h)?;
    let lambda = C64::new(0.0, h) + m * m;
    let r = matching_ratio(nu, m, k)?;
    put("residual", (1.0 - r).norm() < RESIDUAL_TOL);
    put("sign", (r - 1.0).norm() < (r + 1.0).norm());
    let tol = 1e-10 * (1.0 + lambda.norm());
    put("strip", lambda.re >= -tol && lambda.im >= -tol && lambda.im <= h + tol);
    let four_pi_j = 4.0 * std::f64::consts::PI * rec.j as f64;
    put("eigen_im_lower", lambda.im >= h / 2.0);
    put("eigen_modulus", lambda.norm() <= four_pi_j * four_pi_j);
    Ok(t)
}

/// `mult(d, ℓ) ≥ ℓ^{d−2}/(d−2)!`
pub fn multiplicity_bound_holds(d: u32, ell: u64) -> Result<bool> {
    let mult = multiplicity(d, ell)? as f64;
    let e = d as i32 - 2;
    let fact: f64 = (1..=e.max(0)).map(f64::from).product();
    Ok(mult >= (ell as f64).powi(e) / fact)
}

/// Everything `verify` reports for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordAudit {
    pub params: SpectralParams,
    pub perturb: f64,
    pub n_pairs: u64,
    pub n_solved: u64,
    pub tallies: Tallies,
}

/// Solves `n` sampled pairs and audits every solved record.
pub fn audit_records(params: &SpectralParams, n: usize, seed: u64, perturb: f64) -> Result<(RecordAudit, Vec<EigenRecord>)> {
    let pairs = sample_pairs(params, n, seed)?;
    let solved: Vec<Result<(EigenRecord, Option<Tallies>)>> = pairs
        .par_iter()
        .map(|&(ell, j)| {
            let rec = construct(params.d, params.h, ell, j)?;
            let t = if is_solved(&rec) { Some(record_checks(params, &rec, perturb)?) } else { None };
            Ok((rec, t))
        })
        .collect();
    let mut tallies = Tallies::new();
    let mut records = Vec::with_capacity(pairs.len());
    let mut n_solved = 0;
    for s in solved {
        let (rec, t) = s?;
        if let Some(t) = t {
            n_solved += 1;
            merge_into(&mut tallies, t);
        }
        records.push(rec);
    }
    let audit = RecordAudit { params: *params, perturb, n_pairs: pairs.len() as u64, n_solved, tallies };
    Ok((audit, records))
}

/// Up to `n` certified records, drawing at most `max_draws` pairs in
/// batches so the outcome does not depend on the thread count.
pub fn certified_sample(params: &SpectralParams, n: usize, seed: u64, max_draws: usize) -> Result<Vec<EigenRecord>> {
    let pairs = sample_pairs(params, max_draws, seed)?;
    let mut out = Vec::with_capacity(n);
    for batch in pairs.chunks(256) {
        let recs: Vec<Result<EigenRecord>> =
            batch.par_iter().map(|&(ell, j)| construct(params.d, params.h, ell, j)).collect();
        for r in recs {
            let r = r?;
            if r.certified() && out.len() < n {
                out.push(r);
            }
        }
        if out.len() >= n {
            break;
        }
    }
    Ok(out)
}
