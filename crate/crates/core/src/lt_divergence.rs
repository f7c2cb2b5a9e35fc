//! Index sets, the normalised eigenvalue sum and its analytic lower bound.
//!
//! For one `h` the sum runs over `ℓ ∈ [h^{α+½}, h^{β+½}]` and
//! `j ∈ [ℓ (log ℓ)^q, h^{γ+½}]` of
//! `mult(ℓ)·(Im λ)^p/|λ|^{d/2}`, divided by `μ_d h^p`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_solver::{construct, EigenRecord, SpectralParams};
use crate::C64;

/// Closed integer interval `[lo, hi]`; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRange {
    pub lo: u64,
    pub hi: u64,
}

impl IndexRange {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn len(&self) -> u64 {
        if self.is_empty() {
            0
        } else {
            self.hi - self.lo + 1
        }
    }

    pub fn contains(&self, x: u64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

// Values within a few ulps of an integer are snapped before rounding, so that
// exact powers such as 10^{2.8}·... do not lose an endpoint to rounding noise.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

fn ceil_u(x: f64) -> u64 {
    snap(x).ceil().max(0.0) as u64
}

fn floor_u(x: f64) -> u64 {
    snap(x).floor().max(0.0) as u64
}

/// `[⌈h^{α+½}⌉, ⌊h^{β+½}⌋]`
pub fn index_l(h: f64, alpha: f64, beta: f64) -> IndexRange {
    IndexRange { lo: ceil_u(h.powf(alpha + 0.5)), hi: floor_u(h.powf(beta + 0.5)) }
}

/// `[⌈ℓ (log ℓ)^q⌉, ⌊h^{γ+½}⌋]`
pub fn index_j(h: f64, ell: u64, gamma: f64, q: f64) -> Result<IndexRange> {
    if ell <= 1 {
        return Err(Error::Domain(format!("l = {ell} has log l <= 0")));
    }
    let l = ell as f64;
    Ok(IndexRange { lo: ceil_u(l * l.ln().powf(q)), hi: floor_u(h.powf(gamma + 0.5)) })
}

/// Volume of the unit ball in `ℝ^d`.
pub fn unit_ball_volume(d: u32) -> f64 {
    let pi = std::f64::consts::PI;
    let (mut v, start) = if d.is_multiple_of(2) { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= d {
        v *= 2.0 * pi / k as f64;
        k += 2;
    }
    v
}

/// `(Im λ)^p / |λ|^{d/2}`
pub fn lt_quotient(lambda: C64, p: f64, d: u32) -> Result<f64> {
    if lambda.norm() == 0.0 {
        return Err(Error::Domain("lambda = 0".into()));
    }
    if lambda.im < 0.0 {
        return Err(Error::Precondition(format!("Im lambda = {} < 0", lambda.im)));
    }
    Ok(lambda.im.powf(p) / lambda.norm().powf(d as f64 / 2.0))
}

/// `1/(2^p (4π)^d (d−2)!)`
pub fn step5_constant(p: f64, d: u32) -> f64 {
    let fact: f64 = (1..=d.saturating_sub(2)).map(|k| k as f64).product();
    1.0 / (2f64.powf(p) * (4.0 * std::f64::consts::PI).powi(d as i32) * fact)
}

/// `C'_{p,d}·(β − α)·(log h)^ε`
pub fn sum_lower_bound(params: &SpectralParams) -> f64 {
    step5_constant(params.p_exp, params.d) * (params.beta - params.alpha) * params.h.ln().powf(params.epsilon)
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// How the index set is visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Full,
    Stride { s_ell: u64, s_j: u64 },
    Random { n: u64, seed: u64 },
}

impl std::fmt::Display for Sampling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sampling::Full => write!(f, "full"),
            Sampling::Stride { s_ell, s_j } => write!(f, "stride({s_ell},{s_j})"),
            Sampling::Random { n, seed } => write!(f, "random({n},{seed})"),
        }
    }
}

impl std::str::FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "full" {
            return Ok(Sampling::Full);
        }
        let parse_pair = |body: &str| -> Result<(u64, u64)> {
            let inner = body.strip_suffix(')').ok_or_else(|| Error::Precondition(format!("bad sampling {s}")))?;
            let mut it = inner.split(',').map(|v| v.trim().parse::<u64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
                _ => Err(Error::Precondition(format!("bad sampling {s}"))),
            }
        };
        if let Some(body) = s.strip_prefix("stride(") {
            let (a, b) = parse_pair(body)?;
            if a == 0 || b == 0 {
                return Err(Error::Precondition("strides must be positive".into()));
            }
            return Ok(Sampling::Stride { s_ell: a, s_j: b });
        }
        if let Some(body) = s.strip_prefix("random(") {
            let (n, seed) = parse_pair(body)?;
            if n < 2 {
                return Err(Error::Precondition("random sampling needs n >= 2".into()));
            }
            return Ok(Sampling::Random { n, seed });
        }
        Err(Error::Precondition(format!("unknown sampling {s}")))
    }
}

/// Largest number of solver calls per `h` chosen by [`auto_sampling`].
pub const SOLVE_BUDGET: u64 = 20_000;
/// Index sets up to this size are enumerated in full by [`auto_sampling`].
pub const FULL_LIMIT: u64 = 100_000;

fn j_ranges(params: &SpectralParams, ls: IndexRange) -> Result<Vec<(u64, IndexRange)>> {
    let q = params.q();
    let mut out = Vec::new();
    if ls.is_empty() {
        return Ok(out);
    }
    for ell in ls.lo.max(2)..=ls.hi {
        let js = index_j(params.h, ell, params.gamma, q)?;
        if !js.is_empty() {
            out.push((ell, js));
        }
    }
    Ok(out)
}

/// Size of `{(ℓ, j)}` for the parameters.
pub fn index_set_size(params: &SpectralParams) -> Result<u64> {
    let ls = index_l(params.h, params.alpha, params.beta);
    Ok(j_ranges(params, ls)?.iter().map(|(_, js)| js.len()).sum())
}

fn cells(range: IndexRange, stride: u64) -> Vec<(u64, f64)> {
    // (representative, weight) for consecutive blocks of `stride` indices
    let mut out = Vec::new();
    let mut start = range.lo;
    while start <= range.hi {
        let end = (start + stride - 1).min(range.hi);
        out.push((start + (end - start) / 2, (end - start + 1) as f64));
        start = end + 1;
    }
    out
}

fn stride_count(rows: &[(u64, IndexRange)], s_ell: u64, s_j: u64) -> u64 {
    let mut n = 0;
    let mut i = 0;
    while i < rows.len() {
        let block_end = (i + s_ell as usize).min(rows.len());
        let mid = i + (block_end - i - 1) / 2;
        n += rows[mid].1.len().div_ceil(s_j);
        i = block_end;
    }
    n
}

/// Full enumeration when the index set is small, otherwise the smallest
/// strides that keep the number of solver calls within [`SOLVE_BUDGET`].
pub fn auto_sampling(params: &SpectralParams) -> Result<Sampling> {
    let ls = index_l(params.h, params.alpha, params.beta);
    let rows = j_ranges(params, ls)?;
    let total: u64 = rows.iter().map(|(_, js)| js.len()).sum();
    if total <= FULL_LIMIT {
        return Ok(Sampling::Full);
    }
    let s_ell = (rows.len() as u64).div_ceil(128).max(1);
    let mut s_j = 1;
    while stride_count(&rows, s_ell, s_j) > SOLVE_BUDGET {
        s_j = (s_j * 5).div_ceil(4).max(s_j + 1);
    }
    Ok(Sampling::Stride { s_ell, s_j })
}

/// One sampled index pair with its weight in the fine pass and the nested
/// coarse pass (zero when not part of the coarse sample).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    ell: u64,
    j: u64,
    fine: f64,
    coarse: f64,
}

fn build_samples(params: &SpectralParams, sampling: Sampling) -> Result<Vec<Sample>> {
    let ls = index_l(params.h, params.alpha, params.beta);
    let rows = j_ranges(params, ls)?;
    let mut out = Vec::new();
    match sampling {
        Sampling::Full => {
            for (ell, js) in &rows {
                for j in js.lo..=js.hi {
                    out.push(Sample { ell: *ell, j, fine: 1.0, coarse: 1.0 });
                }
            }
        }
        Sampling::Stride { s_ell, s_j } => {
            // ℓ blocks over the rows that have a nonempty j-range
            let mut blocks = Vec::new();
            let mut i = 0;
            while i < rows.len() {
                let end = (i + s_ell as usize).min(rows.len());
                blocks.push((i + (end - i - 1) / 2, (end - i) as f64));
                i = end;
            }
            for (bi, &(row, w_ell)) in blocks.iter().enumerate() {
                let (ell, js) = rows[row];
                let w_ell_coarse = if bi % 2 == 0 {
                    w_ell + blocks.get(bi + 1).map_or(0.0, |b| b.1)
                } else {
                    0.0
                };
                let cs = cells(js, s_j);
                for (ci, &(j, w_j)) in cs.iter().enumerate() {
                    let w_j_coarse = if ci % 2 == 0 { w_j + cs.get(ci + 1).map_or(0.0, |c| c.1) } else { 0.0 };
                    out.push(Sample { ell, j, fine: w_ell * w_j, coarse: w_ell_coarse * w_j_coarse });
                }
            }
        }
        Sampling::Random { n, seed } => {
            let total: u64 = rows.iter().map(|(_, js)| js.len()).sum();
            if total == 0 {
                return Ok(out);
            }
            let mut cumulative = Vec::with_capacity(rows.len());
            let mut acc = 0;
            for (_, js) in &rows {
                acc += js.len();
                cumulative.push(acc);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let half = n / 2;
            for i in 0..n {
                let pick = rng.gen_range(0..total);
                let row = cumulative.partition_point(|&c| c <= pick);
                let before = if row == 0 { 0 } else { cumulative[row - 1] };
                let (ell, js) = rows[row];
                let j = js.lo + (pick - before);
                let w = total as f64 / n as f64;
                let coarse = if i < half { total as f64 / half as f64 } else { 0.0 };
                out.push(Sample { ell, j, fine: w, coarse });
            }
        }
    }
    Ok(out)
}

/// Aggregated normalised sum for one `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumReport {
    pub params: SpectralParams,
    pub sum_value: f64,
    pub lower_bound: f64,
    /// `Σ mult·(h/2)^p/((4πj)^d μ_d h^p)` over the same weighted sample
    pub analytic_floor: f64,
    pub n_records: u64,
    pub n_flagged: u64,
    pub flag_counts: BTreeMap<String, u64>,
    pub sampling: Sampling,
    pub est_rel_err: f64,
    /// records whose multiplicity falls below `ℓ^{d−2}/(d−2)!`
    pub multiplicity_violations: u64,
    /// `h^{−α}`, `h^{γ−½}`, `(log h)^{−q}`
    pub decay_diagnostics: [f64; 3],
}

/// Sampled records with the weight they carry in the fine pass.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedRecord {
    pub record: EigenRecord,
    pub weight: f64,
}

fn multiplicity_floor(d: u32, ell: u64) -> f64 {
    let fact: f64 = (1..=d.saturating_sub(2)).map(|k| k as f64).product();
    (ell as f64).powi(d as i32 - 2) / fact
}

/// Sum over the sampled index set, returning the report and the records.
pub fn sum_with_records(params: &SpectralParams, sampling: Sampling) -> Result<(SumReport, Vec<WeightedRecord>)> {
    params.validate()?;
    let samples = build_samples(params, sampling)?;
    if samples.is_empty() {
        return Err(Error::BelowThreshold(format!(
            "index sets are empty at h = {:e} (l in {:?})",
            params.h,
            index_l(params.h, params.alpha, params.beta)
        )));
    }
    let records: Vec<EigenRecord> = samples
        .par_iter()
        .map(|s| construct(params.d, params.h, s.ell, s.j))
        .collect::<Result<Vec<_>>>()?;

    let mu = crate::lt_divergence::unit_ball_volume(params.d);
    let norm = mu * params.h.powf(params.p_exp);
    let mut fine = NeumaierSum::default();
    let mut coarse = NeumaierSum::default();
    let mut floor = NeumaierSum::default();
    let mut n_flagged = 0;
    let mut flag_counts = BTreeMap::new();
    let mut violations = 0;
    for (s, rec) in samples.iter().zip(&records) {
        let mult = rec.multiplicity as f64;
        if rec.ell >= 2 && mult < multiplicity_floor(params.d, rec.ell) * (1.0 - 1e-12) {
            violations += 1;
        }
        if let Some(flag) = &rec.flag {
            n_flagged += 1;
            *flag_counts.entry(flag.label().to_string()).or_insert(0) += 1;
            continue;
        }
        let term = mult * lt_quotient(rec.lambda, params.p_exp, params.d)? / norm;
        fine.add(term * s.fine);
        coarse.add(term * s.coarse);
        let four_pi_j = 4.0 * std::f64::consts::PI * rec.j as f64;
        floor.add(s.fine * mult * (params.h / 2.0).powf(params.p_exp) / (four_pi_j.powi(params.d as i32) * norm));
    }
    if n_flagged == records.len() as u64 {
        return Err(Error::BelowThreshold(format!(
            "all {} sampled records flagged at h = {:e}: {:?}",
            records.len(),
            params.h,
            flag_counts
        )));
    }
    let sum_value = fine.value();
    let est_rel_err = match sampling {
        Sampling::Full => 0.0,
        _ => (sum_value - coarse.value()).abs() / sum_value,
    };
    let report = SumReport {
        params: *params,
        sum_value,
        lower_bound: sum_lower_bound(params),
        analytic_floor: floor.value(),
        n_records: records.len() as u64,
        n_flagged,
        flag_counts,
        sampling,
        est_rel_err,
        multiplicity_violations: violations,
        decay_diagnostics: [
            params.h.powf(-params.alpha),
            params.h.powf(params.gamma - 0.5),
            params.h.ln().powf(-params.q()),
        ],
    };
    let weighted = samples
        .iter()
        .zip(records)
        .map(|(s, record)| WeightedRecord { record, weight: s.fine })
        .collect();
    Ok((report, weighted))
}

/// Normalised eigenvalue sum over the sampled index set.
pub fn sum_exact(params: &SpectralParams, sampling: Sampling) -> Result<SumReport> {
    sum_with_records(params, sampling).map(|(r, _)| r)
}

/// One row of an `h`-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h: f64,
    pub report: std::result::Result<SumReport, String>,
    /// Slope fitted over this and all earlier successful rows.
    pub running_slope: Option<f64>,
}

impl SweepRow {
    pub fn passes_bound(&self) -> bool {
        match &self.report {
            Ok(r) => r.sum_value >= r.lower_bound * (1.0 - r.est_rel_err),
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub base: SpectralParams,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log(sum)` against `log(log h)`.
    pub slope: Option<f64>,
}

impl SweepTable {
    pub fn strictly_increasing(&self) -> bool {
        let vals: Vec<f64> = self.rows.iter().filter_map(|r| r.report.as_ref().ok().map(|x| x.sum_value)).collect();
        vals.len() == self.rows.len() && vals.windows(2).all(|w| w[1] > w[0])
    }

    pub fn all_rows_pass(&self) -> bool {
        self.rows.iter().all(SweepRow::passes_bound)
    }
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// How each row of a sweep is sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepSampling {
    Auto,
    Fixed(Sampling),
}

pub fn h_sweep(base: &SpectralParams, h_grid: &[f64], sampling: SweepSampling) -> Result<SweepTable> {
    if h_grid.len() < 3 {
        return Err(Error::Precondition(format!("h grid needs at least 3 points, got {}", h_grid.len())));
    }
    if h_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("h grid must be strictly ascending".into()));
    }
    if h_grid.iter().any(|&h| !(h > 1.0 && h.is_finite())) {
        return Err(Error::Precondition("h grid values must exceed 1".into()));
    }
    let mut rows = Vec::with_capacity(h_grid.len());
    let mut points = Vec::new();
    for &h in h_grid {
        let params = base.with_h(h);
        let report = match sampling {
            SweepSampling::Auto => auto_sampling(&params),
            SweepSampling::Fixed(s) => Ok(s),
        }
        .and_then(|s| sum_exact(&params, s))
        .map_err(|e| e.to_string());
        if let Ok(r) = &report {
            if r.sum_value > 0.0 {
                points.push((h.ln().ln(), r.sum_value.ln()));
            }
        }
        rows.push(SweepRow { h, report, running_slope: ls_slope(&points) });
    }
    Ok(SweepTable { base: *base, slope: ls_slope(&points), rows })
}

/// Formats a double with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn config_line(base: &SpectralParams, h_grid: &[f64], sampling: &str, seed: u64) -> String {
    let grid: Vec<String> = h_grid.iter().map(|h| fmt17(*h)).collect();
    format!(
        "# d={} p={} epsilon={} alpha={} beta={} gamma={} q={} h_grid={} sampling={} seed={}",
        base.d,
        fmt17(base.p_exp),
        fmt17(base.epsilon),
        fmt17(base.alpha),
        fmt17(base.beta),
        fmt17(base.gamma),
        fmt17(base.q()),
        grid.join(";"),
        sampling,
        seed
    )
}

/// CSV with a leading `#` line carrying the resolved configuration.
pub fn sweep_csv(table: &SweepTable, header: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{header}");
    let _ = writeln!(
        out,
        "h,sum_value,lower_bound,analytic_floor,n_records,n_flagged,est_rel_err,slope_running,sampling,status"
    );
    for row in &table.rows {
        let slope = row.running_slope.map(fmt17).unwrap_or_default();
        match &row.report {
            Ok(r) => {
                let status = if row.passes_bound() { "ok" } else { "below_bound" };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    fmt17(row.h),
                    fmt17(r.sum_value),
                    fmt17(r.lower_bound),
                    fmt17(r.analytic_floor),
                    r.n_records,
                    r.n_flagged,
                    fmt17(r.est_rel_err),
                    slope,
                    r.sampling,
                    status
                );
            }
            Err(e) => {
                let msg = e.replace([',', '\n'], ";");
                let _ = writeln!(out, "{},,,,,,,{},,error: {}", fmt17(row.h), slope, msg);
            }
        }
    }
    out
}

/// Line chart of `log(sum)` against `log(log h)` on an 800×500 canvas.
pub fn sweep_svg(table: &SweepTable, header: &str) -> String {
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter_map(|r| r.report.as_ref().ok().filter(|x| x.sum_value > 0.0).map(|x| (r.h.ln().ln(), x.sum_value.ln())))
        .collect();
    let bounds: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter_map(|r| r.report.as_ref().ok().map(|x| (r.h.ln().ln(), x.lower_bound.ln())))
        .collect();
    let all: Vec<&(f64, f64)> = pts.iter().chain(bounds.iter()).collect();
    let (w, h, pad) = (800.0, 500.0, 60.0);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 500" width="800" height="500">"#);
    let _ = writeln!(svg, "<!-- {} -->", header.trim_start_matches('#').trim().replace("--", "-"));
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="800" height="500" fill="white"/>"#);
    if all.is_empty() {
        let _ = writeln!(svg, r#"<text x="400" y="250" text-anchor="middle">no data</text>"#);
        svg.push_str("</svg>\n");
        return svg;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &all {
        x0 = x0.min(p.0);
        x1 = x1.max(p.0);
        y0 = y0.min(p.1);
        y1 = y1.max(p.1);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let _ = writeln!(
        svg,
        r#"<line x1="{pad}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{}" stroke="black"/>"#,
        h - pad,
        w - pad,
        h - pad,
        h - pad
    );
    let poly = |p: &[(f64, f64)]| p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect::<Vec<_>>().join(" ");
    let _ = writeln!(svg, r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#, poly(&pts));
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="firebrick" stroke-dasharray="6,4" points="{}"/>"#,
        poly(&bounds)
    );
    for &(x, y) in &pts {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="steelblue"/>"#, sx(x), sy(y));
    }
    let _ = writeln!(
        svg,
        r#"<text x="400" y="{}" text-anchor="middle" font-size="14">log log h</text>"#,
        h - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="250" text-anchor="middle" font-size="14" transform="rotate(-90 18 250)">log sum (solid), log bound (dashed)</text>"#
    );
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="{anchor}" font-size="11">{:.3}</text>"#,
            sx(x),
            h - pad + 16.0,
            x
        );
    }
    for y in [y0, y1] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{:.3}</text>"#,
            pad - 4.0,
            sy(y) + 4.0,
            y
        );
    }
    if let Some(s) = table.slope {
        let _ = writeln!(svg, r#"<text x="{}" y="30" text-anchor="end" font-size="13">fitted slope {:.4}</text>"#, w - pad, s);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_examples() {
        assert_eq!(index_l(1e4, 0.1, 0.2), IndexRange { lo: 252, hi: 630 });
        assert_eq!(index_l(1.0, 0.1, 0.2), IndexRange { lo: 1, hi: 1 });
        assert!(index_l(1e4, 0.2, 0.2).len() <= 1);
        let js = index_j(1e8, 100_000, 0.3, 1.0).unwrap();
        assert_eq!(js, IndexRange { lo: 1_151_293, hi: 2_511_886 });
        assert_eq!(index_j(1e8, 50, 0.3, 0.0).unwrap().lo, 50);
        assert!(index_j(1e8, 1, 0.3, 1.0).is_err());
        assert!(index_j(10.0, 1000, 0.3, 1.0).unwrap().is_empty());
    }

    #[test]
    fn ball_volumes() {
        let pi = std::f64::consts::PI;
        assert!((unit_ball_volume(2) - pi).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * pi / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - pi * pi / 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn quotient_examples() {
        assert_eq!(lt_quotient(C64::new(0.0, 1.0), 1.0, 2).unwrap(), 1.0);
        assert_eq!(lt_quotient(C64::new(3.0, 0.0), 1.0, 2).unwrap(), 0.0);
        assert!(lt_quotient(C64::new(0.0, 0.0), 1.0, 2).is_err());
    }

    #[test]
    fn constant_examples() {
        assert!((step5_constant(1.0, 2) - 3.1663e-3).abs() < 1e-7);
        assert!((step5_constant(2.0, 3) - 1.2598e-4).abs() < 1e-8);
        let p = SpectralParams::new(2, 1.0, 0.5, 0.05, 0.15, 0.3, 1e8).unwrap();
        assert!((sum_lower_bound(&p) - 1.359e-3).abs() < 1e-6);
    }

    #[test]
    fn neumaier_beats_naive() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        let s: NeumaierSum = xs.iter().copied().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn sampling_parse() {
        assert_eq!("full".parse::<Sampling>().unwrap(), Sampling::Full);
        assert_eq!("stride(2,16)".parse::<Sampling>().unwrap(), Sampling::Stride { s_ell: 2, s_j: 16 });
        assert_eq!("random(100, 7)".parse::<Sampling>().unwrap(), Sampling::Random { n: 100, seed: 7 });
        assert!("stride(0,1)".parse::<Sampling>().is_err());
        assert!("grid".parse::<Sampling>().is_err());
    }

    #[test]
    fn cells_cover_range() {
        let c = cells(IndexRange { lo: 10, hi: 26 }, 4);
        let total: f64 = c.iter().map(|x| x.1).sum();
        assert_eq!(total, 17.0);
        assert_eq!(c[0], (11, 4.0));
        assert_eq!(c.last().copied(), Some((26, 1.0)));
    }

    #[test]
    fn slope_of_line() {
        let pts = [(1.0, 2.0), (2.0, 2.5), (3.0, 3.0)];
        assert!((ls_slope(&pts).unwrap() - 0.5).abs() < 1e-15);
        assert!(ls_slope(&pts[..1]).is_none());
    }

    #[test]
    fn sweep_rejects_short_grid() {
        let p = SpectralParams::new(2, 1.0, 0.5, 0.05, 0.15, 0.3, 1e6).unwrap();
        assert!(h_sweep(&p, &[1e6], SweepSampling::Auto).is_err());
        assert!(h_sweep(&p, &[1e6, 1e5, 1e7], SweepSampling::Auto).is_err());
    }
}
