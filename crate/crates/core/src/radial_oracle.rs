//! Shooting check of the matching condition at `r = 1`, independent of the
//! phase-function machinery.
//!
//! The radial equation is taken in Liouville form `φ'' + κ²(r)φ = 0` with
//! `φ = r^{(d−1)/2}ψ` and `κ² = μ² − (ν² − ¼)/r²` (`μ = m` inside, `μ = k`
//! outside). The logarithmic derivative `w = φ'/φ` obeys `w' = −w² − κ²`, and
//! `ψ'/ψ = w + (1 − d)/(2r)`.
//!
//! Wherever the solution being followed is a growing exponential or a
//! travelling wave, `w` is smooth and is integrated with a three-stage Radau IIA
//! collocation step, which stays stable however large `|κ|·Δr` gets. Standing
//! waves only occur for the regular solution near its turning point; that short
//! stretch is crossed with a fourth-order Magnus step on the normalised pair
//! `(φ, φ'/s)`, `s = 1 + |μ|`, so zeros of `ψ` never enter the state. Past the
//! turning point the regular solution is split into two travelling waves whose
//! log-derivatives and phase integrals are carried to the matching radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_solver::{nu_of, EigenRecord};
use crate::C64;

/// `ψ'/ψ` at the matching radius with its step-halving error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootResult {
    pub log_deriv_at_1: C64,
    pub steps: u64,
    pub est_err: f64,
}

type Mat = [[C64; 2]; 2];
type Vec2 = [C64; 2];

const MAGNUS_TOL: f64 = 1e-13;
const RADAU_TOL: f64 = 1e-12;
const MAX_STEPS: usize = 1_000_000;
/// Largest `|κ'|/|κ|²` at which `w` is treated as smooth.
const SMOOTHNESS_LIMIT: f64 = 3e-4;
const RELAX_STEPS: usize = 16;
/// `|κ|·Δr` of one relaxation step.
const RELAX_LENGTH: f64 = 10.0;
/// Rounding slip per radian of accumulated phase.
const PHASE_ROUNDING: f64 = 8.0 * f64::EPSILON;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let mut c = [[czero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn apply(a: &Mat, y: &Vec2) -> Vec2 {
    [a[0][0] * y[0] + a[0][1] * y[1], a[1][0] * y[0] + a[1][1] * y[1]]
}

fn normalise(y: Vec2) -> Vec2 {
    let n = (y[0].norm_sqr() + y[1].norm_sqr()).sqrt();
    [y[0] / n, y[1] / n]
}

/// Sine of the angle between two lines in `ℂ²`.
fn projective_gap(a: &Vec2, b: &Vec2) -> f64 {
    let wedge = a[0] * b[1] - a[1] * b[0];
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let nb = (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
    wedge.norm() / (na * nb)
}

fn budget_error(r: f64) -> Error {
    Error::NoConvergence { reason: format!("step budget exhausted at r = {r}"), trail: Vec::new() }
}

/// Radau IIA, three stages, order five.
struct RadauTableau {
    a: [[f64; 3]; 3],
    c: [f64; 3],
}

fn radau() -> RadauTableau {
    let s6 = 6f64.sqrt();
    RadauTableau {
        a: [
            [(88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0],
            [(296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0],
            [(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0],
        ],
        c: [(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0],
    }
}

/// Solves a 3×3 complex system by Gaussian elimination with partial pivoting.
fn solve3(mut m: [[C64; 3]; 3], mut b: [C64; 3]) -> Option<[C64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))?;
        if m[piv][col].norm() == 0.0 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot = m[col];
            for (k, t) in pivot.iter().enumerate().skip(col) {
                m[row][k] -= f * t;
            }
            let t = b[col];
            b[row] -= f * t;
        }
    }
    let mut x = [czero(); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Result of a smooth-`w` integration: end value and `∫w dr`.
#[derive(Debug, Clone, Copy)]
struct RiccatiEnd {
    w: C64,
    phase: C64,
}

/// Liouville equation for one radial channel.
struct Channel {
    c: f64,
    mu2: C64,
    scale: f64,
}

impl Channel {
    fn kappa_sq(&self, r: f64) -> C64 {
        self.mu2 - self.c / (r * r)
    }

    /// `|κ'|/|κ|²`
    fn roughness(&self, r: f64) -> f64 {
        let k2 = self.kappa_sq(r).norm();
        if k2 == 0.0 {
            return f64::INFINITY;
        }
        self.c.abs() / (r.powi(3) * k2.powf(1.5))
    }

    /// `iκ − κ'/(2κ)`, the first-order WKB log-derivative of a travelling
    /// wave, with the sign of `κ` fixed by `branch`.
    fn wave_start(&self, r: f64, branch: WaveBranch) -> C64 {
        let mut kappa = self.kappa_sq(r).sqrt();
        // orientation of e^{iκr}: growing outward, ties broken toward Re κ > 0
        let growth = (C64::i() * kappa).re;
        let outward = growth > 0.0 || (growth == 0.0 && kappa.re >= 0.0);
        let flip = match branch {
            WaveBranch::GrowsOutward => !outward,
            WaveBranch::GrowsInward => outward,
            WaveBranch::DecaysOutward => kappa.im < 0.0,
        };
        if flip {
            kappa = -kappa;
        }
        let kp = self.c / (r.powi(3) * kappa);
        C64::i() * kappa - kp / (2.0 * kappa)
    }

    fn generator(&self, r: f64) -> Mat {
        [[czero(), C64::new(self.scale, 0.0)], [-self.kappa_sq(r) / self.scale, czero()]]
    }

    /// `exp(Ω)` up to a scalar factor, for the two-point Gauss Magnus step.
    fn propagator(&self, r: f64, dr: f64) -> Mat {
        let g = 3f64.sqrt() / 6.0;
        let a1 = self.generator(r + (0.5 - g) * dr);
        let a2 = self.generator(r + (0.5 + g) * dr);
        let p = matmul(&a1, &a2);
        let q = matmul(&a2, &a1);
        let w = 3f64.sqrt() / 12.0 * dr * dr;
        let mut om = [[czero(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                om[i][j] = (a1[i][j] + a2[i][j]) * (dr / 2.0) - (p[i][j] - q[i][j]) * w;
            }
        }
        // Ω is traceless, so Ω² = s²·I
        let mut s = (om[0][0] * om[0][0] + om[0][1] * om[1][0]).sqrt();
        if s.re < 0.0 {
            s = -s;
        }
        // e^{−s}·cosh s and e^{−s}·sinh(s)/s
        let (ch, sh) = if s.norm() < 1e-4 {
            let s2 = s * s;
            let e = (-s).exp();
            (e * (1.0 + s2 / 2.0 + s2 * s2 / 24.0), e * (1.0 + s2 / 6.0 + s2 * s2 / 120.0))
        } else {
            let e2 = (-s * 2.0).exp();
            ((1.0 + e2) * 0.5, (1.0 - e2) * 0.5 / s)
        };
        [[ch + sh * om[0][0], sh * om[0][1]], [sh * om[1][0], ch + sh * om[1][1]]]
    }

    /// Adaptive Magnus integration of `(φ, φ'/s)`; returns the end state and mesh.
    fn magnus(&self, r0: f64, r1: f64, y0: Vec2) -> Result<(Vec2, Vec<f64>)> {
        let dir = (r1 - r0).signum();
        let mut r = r0;
        let mut y = normalise(y0);
        let k = self.kappa_sq(r0).norm().sqrt().max(self.kappa_sq(r1).norm().sqrt());
        let mut dr = (0.5 / (k + 1.0)).min((r1 - r0).abs()) * dir;
        let mut mesh = vec![r0];
        while (r1 - r) * dir > 0.0 {
            if mesh.len() > MAX_STEPS {
                return Err(budget_error(r));
            }
            if ((r + dr) - r1) * dir > 0.0 {
                dr = r1 - r;
            }
            let full = apply(&self.propagator(r, dr), &y);
            let half = apply(&self.propagator(r, dr / 2.0), &y);
            let two = apply(&self.propagator(r + dr / 2.0, dr / 2.0), &half);
            let gap = projective_gap(&full, &two);
            if !gap.is_finite() {
                return Err(Error::Numerical(format!("non-finite state at r = {r}")));
            }
            if gap <= MAGNUS_TOL || dr.abs() < 1e-15 * r.abs().max(1.0) {
                r = if (r1 - (r + dr)) * dir <= 0.0 { r1 } else { r + dr };
                y = normalise(two);
                mesh.push(r);
            }
            let factor = if gap == 0.0 { 2.0 } else { (0.9 * (MAGNUS_TOL / gap).powf(0.2)).clamp(0.2, 2.0) };
            dr *= factor;
        }
        Ok((y, mesh))
    }

    /// Repeats a Magnus integration on a fixed mesh, each cell split in two.
    fn magnus_replay(&self, mesh: &[f64], y0: Vec2) -> Vec2 {
        let mut y = normalise(y0);
        for w in mesh.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            for (lo, hi) in [(a, mid), (mid, b)] {
                let dr = hi - lo;
                let h1 = apply(&self.propagator(lo, dr / 2.0), &y);
                y = normalise(apply(&self.propagator(lo + dr / 2.0, dr / 2.0), &h1));
            }
        }
        y
    }

    /// One Radau step for `w' = −w² − κ²`; returns `w(r + dr)` and `∫w`.
    fn radau_step(&self, tab: &RadauTableau, r: f64, dr: f64, w: C64) -> Option<(C64, C64)> {
        let k2: [C64; 3] = std::array::from_fn(|i| self.kappa_sq(r + tab.c[i] * dr));
        let kn = self.kappa_sq(r).sqrt();
        let mut stage: [C64; 3] = std::array::from_fn(|i| {
            let guess = w * (k2[i].sqrt() / kn);
            if guess.re.is_finite() && guess.im.is_finite() && kn.norm() > 0.0 {
                guess
            } else {
                w
            }
        });
        let mut prev = f64::INFINITY;
        for it in 0..40 {
            let mut g = [czero(); 3];
            let mut jac = [[czero(); 3]; 3];
            for i in 0..3 {
                let mut acc = stage[i] - w;
                for j in 0..3 {
                    acc += (stage[j] * stage[j] + k2[j]) * (dr * tab.a[i][j]);
                    jac[i][j] = stage[j] * (2.0 * dr * tab.a[i][j]);
                }
                jac[i][i] += 1.0;
                g[i] = -acc;
            }
            let delta = solve3(jac, g)?;
            let mut size = 0.0f64;
            let mut mag = 0.0f64;
            for i in 0..3 {
                stage[i] += delta[i];
                size = size.max(delta[i].norm());
                mag = mag.max(stage[i].norm());
            }
            if !(size.is_finite()) {
                return None;
            }
            let stalled = it >= 2 && size >= 0.5 * prev && size <= 1e-11 * (mag + 1.0);
            prev = size;
            if size <= 4e-15 * (mag + 1.0) || stalled {
                let phase = (stage[0] * tab.a[2][0] + stage[1] * tab.a[2][1] + stage[2] * tab.a[2][2]) * dr;
                return Some((stage[2], phase));
            }
        }
        None
    }

    /// Log-derivative at `r` of a pure travelling wave that will be carried in
    /// direction `travel`.
    ///
    /// The first-order WKB value carries a small admixture of the opposite
    /// wave, which would persist as ripples in `w`. When `|κ|r` is large the
    /// wave is started a short distance ahead of `r` and brought back to it with
    /// fixed Radau steps of length `RELAX_LENGTH/|κ|`; the method's damping of
    /// stiff components removes the admixture while the smooth part is carried
    /// accurately.
    fn clean_wave(&self, r: f64, travel: f64, branch: WaveBranch) -> C64 {
        let fallback = self.wave_start(r, branch);
        let kappa = self.kappa_sq(r).norm().sqrt();
        let step = RELAX_LENGTH / kappa;
        if !(kappa * r >= 10.0 * RELAX_LENGTH * RELAX_STEPS as f64) {
            return fallback;
        }
        let start = r + travel * RELAX_STEPS as f64 * step;
        let tab = radau();
        let mut w = self.wave_start(start, branch);
        for i in 0..RELAX_STEPS {
            let at = start - travel * step * i as f64;
            let dr = if i + 1 == RELAX_STEPS { r - at } else { -travel * step };
            match self.radau_step(&tab, at, dr, w) {
                Some((wn, _)) => w = wn,
                None => return fallback,
            }
        }
        w
    }

    /// Adaptive Radau integration of a smooth `w` from `r0` to `r1`.
    fn riccati(&self, r0: f64, r1: f64, w0: C64) -> Result<(RiccatiEnd, Vec<f64>)> {
        let tab = radau();
        let dir = (r1 - r0).signum();
        let mut r = r0;
        let mut w = w0;
        let mut phase = czero();
        let mut dr = (0.01 * r0.abs().min(r1.abs())).min((r1 - r0).abs()) * dir;
        let mut mesh = vec![r0];
        while (r1 - r) * dir > 0.0 {
            if mesh.len() > MAX_STEPS {
                return Err(budget_error(r));
            }
            if ((r + dr) - r1) * dir > 0.0 {
                dr = r1 - r;
            }
            let one = self.radau_step(&tab, r, dr, w);
            let two = self
                .radau_step(&tab, r, dr / 2.0, w)
                .and_then(|(wh, ph)| self.radau_step(&tab, r + dr / 2.0, dr / 2.0, wh).map(|(w2, p2)| (w2, ph + p2)));
            let gap = match (one, two) {
                (Some((w1, p1)), Some((w2, p2))) => {
                    ((w1 - w2).norm() / (w2.norm() + 1.0)).max((p1 - p2).norm() / (p2.norm() + 1.0))
                }
                _ => f64::INFINITY,
            };
            if gap <= RADAU_TOL || (dr.abs() < 1e-15 * r.abs().max(1.0) && gap.is_finite()) {
                let (w2, p2) = two.expect("finite gap implies both steps succeeded");
                r = if (r1 - (r + dr)) * dir <= 0.0 { r1 } else { r + dr };
                w = w2;
                phase += p2;
                mesh.push(r);
            }
            let factor = if gap == 0.0 {
                2.0
            } else if gap.is_finite() {
                (0.9 * (RADAU_TOL / gap).powf(1.0 / 6.0)).clamp(0.2, 2.0)
            } else {
                0.25
            };
            dr *= factor;
            if dr.abs() < 1e-300 {
                return Err(Error::Numerical(format!("step size underflow at r = {r}")));
            }
        }
        Ok((RiccatiEnd { w, phase }, mesh))
    }

    /// Repeats a Radau integration on a fixed mesh, each cell split in two.
    fn riccati_replay(&self, mesh: &[f64], w0: C64) -> Result<RiccatiEnd> {
        let tab = radau();
        let mut w = w0;
        let mut phase = czero();
        for cell in mesh.windows(2) {
            let (a, b) = (cell[0], cell[1]);
            let mid = 0.5 * (a + b);
            for (lo, hi) in [(a, mid), (mid, b)] {
                let (wn, p) = self
                    .radau_step(&tab, lo, hi - lo, w)
                    .ok_or_else(|| Error::Numerical(format!("Radau replay failed at r = {lo}")))?;
                w = wn;
                phase += p;
            }
        }
        Ok(RiccatiEnd { w, phase })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WaveBranch {
    GrowsOutward,
    GrowsInward,
    DecaysOutward,
}

/// A value computed twice: on the adaptive mesh and on the halved replay.
#[derive(Debug, Clone, Copy)]
struct Paired<T> {
    fine: T,
    coarse: T,
}

fn liouville_c(d: u32, ell: u64) -> f64 {
    let nu = nu_of(d, ell);
    nu * nu - 0.25
}

/// Start radius of the outward integration: `10⁻³`, reduced so that the
/// Frobenius start stays accurate, `(m r₀)² ≪ 2ℓ + d`.
pub fn inner_start_radius(d: u32, ell: u64, m: C64) -> f64 {
    let room = (2.0 * ell as f64 + d as f64).sqrt();
    1e-3f64.min(0.1 * room / m.norm().max(1e-300))
}

/// Boundary in `[lo, hi]` between `roughness ≤ limit` and `> limit`, with
/// `smooth_at_lo` telling which side `lo` is on.
fn roughness_crossing(ch: &Channel, lo: f64, hi: f64, smooth_at_lo: bool) -> f64 {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (ch.roughness(mid) <= SMOOTHNESS_LIMIT) == smooth_at_lo {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-15 * b {
            break;
        }
    }
    if smooth_at_lo {
        a
    } else {
        b
    }
}

/// `R'/R` of the power series `R = r^ℓ Σ a_k r^{2k}` regular at the origin,
/// summed until the terms drop below rounding.
fn frobenius_log_deriv(d: u32, ell: u64, m: C64, r: f64) -> C64 {
    let l = ell as f64;
    let x = -(m * r) * (m * r);
    let (mut term, mut sum, mut dsum) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(l, 0.0));
    for k in 1..200 {
        let kf = k as f64;
        term = term * x / (2.0 * kf * (2.0 * kf + 2.0 * l + d as f64 - 2.0));
        sum += term;
        dsum += term * (l + 2.0 * kf);
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    dsum / (sum * r)
}

/// Log-derivative `w` of the regular solution carried to `r_end`.
fn regular_solution(ch: &Channel, d: u32, ell: u64, m: C64, r_end: f64) -> Result<(Paired<C64>, u64)> {
    let r0 = inner_start_radius(d, ell, m);
    let w0 = frobenius_log_deriv(d, ell, m, r0) + (d as f64 - 1.0) / (2.0 * r0);

    // r0 ≤ ra ≤ r1 ≤ r_end: smooth growth, standing wave, travelling waves
    let turning = if ch.c > 0.0 && ch.mu2.re > 0.0 { (ch.c / ch.mu2.re).sqrt() } else { 0.0 };
    let mut ra = r0;
    if turning > r0 && ch.roughness(r0) <= SMOOTHNESS_LIMIT {
        let top = turning.min(r_end);
        ra = if ch.roughness(top) <= SMOOTHNESS_LIMIT { top } else { roughness_crossing(ch, r0, top, true) };
    }
    let from = ra.max(turning).min(r_end);
    let r1 = if ch.roughness(r_end) > SMOOTHNESS_LIMIT {
        r_end
    } else if ch.roughness(from) <= SMOOTHNESS_LIMIT {
        from
    } else {
        roughness_crossing(ch, from, r_end, false)
    }
    .max(ra);

    let mut steps = 0u64;
    let mut wa = Paired { fine: w0, coarse: w0 };
    if ra > r0 {
        let (coarse, mesh) = ch.riccati(r0, ra, w0)?;
        let fine = ch.riccati_replay(&mesh, w0)?;
        steps += mesh.len() as u64 - 1;
        wa = Paired { fine: fine.w, coarse: coarse.w };
    }
    let start = |w: C64| [C64::new(1.0, 0.0), w / ch.scale];
    let mut y1 = Paired { fine: start(wa.fine), coarse: start(wa.coarse) };
    if r1 > ra {
        let (coarse, mesh) = ch.magnus(ra, r1, y1.coarse)?;
        let fine = ch.magnus_replay(&mesh, y1.fine);
        steps += mesh.len() as u64 - 1;
        y1 = Paired { fine, coarse };
    }
    if r1 >= r_end {
        let to_w = |y: &Vec2| -> Result<C64> {
            if y[0].norm() == 0.0 {
                return Err(Error::Numerical(format!("ψ vanishes at r = {r_end}")));
            }
            Ok(y[1] / y[0] * ch.scale)
        };
        return Ok((Paired { fine: to_w(&y1.fine)?, coarse: to_w(&y1.coarse)? }, steps));
    }

    // split into travelling waves φ± with φ±(r1) = 1
    let wp0 = ch.clean_wave(r1, 1.0, WaveBranch::GrowsOutward);
    let (plus_c, mesh_p) = ch.riccati(r1, r_end, wp0)?;
    let plus_f = ch.riccati_replay(&mesh_p, wp0)?;
    let wm_end = ch.clean_wave(r_end, -1.0, WaveBranch::GrowsInward);
    let (minus_c, mesh_m) = ch.riccati(r_end, r1, wm_end)?;
    let minus_f = ch.riccati_replay(&mesh_m, wm_end)?;
    steps += (mesh_p.len() + mesh_m.len()) as u64 - 2;

    let combine = |y: &Vec2, plus: &RiccatiEnd, minus: &RiccatiEnd| -> C64 {
        let (phi, dphi) = (y[0], y[1] * ch.scale);
        let num = wp0 * phi - dphi;
        let den = dphi - minus.w * phi;
        if num.norm() == 0.0 {
            return plus.w;
        }
        if den.norm() == 0.0 {
            return wm_end;
        }
        // ρ = (b/a)·φ₋(r_end)/φ₊(r_end), with ∫w₋ taken from r1 to r_end
        let log_rho = num.ln() - den.ln() - minus.phase - plus.phase;
        if log_rho.re > 0.0 {
            let e = (-log_rho).exp();
            (plus.w * e + wm_end) / (e + 1.0)
        } else {
            let e = log_rho.exp();
            (plus.w + wm_end * e) / (e + 1.0)
        }
    };
    Ok((
        Paired { fine: combine(&y1.fine, &plus_f, &minus_f), coarse: combine(&y1.coarse, &plus_c, &minus_c) },
        steps,
    ))
}

/// Error in `w(r)` from rounding in the phase carried over `[0, r]`.
///
/// A phase slip `δ` moves `w` by `δ·(κ² + w²)/κ`, which vanishes for a pure
/// travelling wave and is largest for a standing one.
fn rounding_floor(ch: &Channel, m: C64, r: f64, w: C64) -> f64 {
    let k2 = ch.kappa_sq(r);
    let k = k2.norm().sqrt().max(1.0);
    PHASE_ROUNDING * (1.0 + m.norm() * r) * (k2 + w * w).norm() / k
}

/// `ψ'/ψ` at `r` for the solution regular at the origin.
pub fn shoot_inner_to(d: u32, ell: u64, m: C64, r: f64) -> Result<ShootResult> {
    if !(m.re > 0.0) {
        return Err(Error::Precondition(format!("Re m = {} must be positive", m.re)));
    }
    if d < 2 {
        return Err(Error::Precondition(format!("d = {d} must be at least 2")));
    }
    let r0 = inner_start_radius(d, ell, m);
    if !(r > r0) {
        return Err(Error::Precondition(format!("r = {r} lies inside the start radius {r0}")));
    }
    let ch = Channel { c: liouville_c(d, ell), mu2: m * m, scale: 1.0 + m.norm() };
    let (w, steps) = regular_solution(&ch, d, ell, m, r)?;
    let shift = (1.0 - d as f64) / (2.0 * r);
    let est_err = (w.fine - w.coarse).norm() + rounding_floor(&ch, m, r, w.fine);
    Ok(ShootResult { log_deriv_at_1: w.fine + shift, steps, est_err })
}

/// `ψ'/ψ` at `r = 1` for the solution regular at the origin.
pub fn shoot_inner(d: u32, ell: u64, m: C64) -> Result<ShootResult> {
    shoot_inner_to(d, ell, m, 1.0)
}

/// Default outer radius: `max(10(1 + ν/|k|), 1 + 25/Im k)`.
pub fn default_outer_radius(d: u32, ell: u64, k: C64) -> f64 {
    let nu = nu_of(d, ell);
    (10.0 * (1.0 + nu / k.norm())).max(1.0 + 25.0 / k.im)
}

/// `ψ'/ψ` at `r = 1` for the solution decaying at infinity, integrated inward
/// from `outer_radius`.
pub fn shoot_outer(d: u32, ell: u64, k: C64, outer_radius: f64) -> Result<ShootResult> {
    if !(k.im > 0.0) {
        return Err(Error::Precondition(format!("Im k = {} must be positive", k.im)));
    }
    let nu = nu_of(d, ell);
    if !(outer_radius >= 10.0 * (1.0 + nu / k.norm()) * (1.0 - 1e-12)) {
        return Err(Error::Precondition(format!("outer radius {outer_radius} below 10(1 + nu/|k|)")));
    }
    if d < 2 {
        return Err(Error::Precondition(format!("d = {d} must be at least 2")));
    }
    let ch = Channel { c: liouville_c(d, ell), mu2: k * k, scale: 1.0 + k.norm() };
    let w0 = ch.clean_wave(outer_radius, -1.0, WaveBranch::DecaysOutward);
    let (coarse, mesh) = ch.riccati(outer_radius, 1.0, w0)?;
    let fine = ch.riccati_replay(&mesh, w0)?;
    let shift = (1.0 - d as f64) / 2.0;
    Ok(ShootResult {
        log_deriv_at_1: fine.w + shift,
        steps: mesh.len() as u64 - 1,
        est_err: (fine.w - coarse.w).norm(),
    })
}

/// Matching defect of the inner and outer radial solutions at one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub ell: u64,
    pub j: u64,
    /// `|u_in(1) − u_out(1)|/(1 + |k|)`
    pub mismatch: f64,
    pub inner_err: f64,
    pub outer_err: f64,
    #[serde(rename = "R_used")]
    pub r_used: f64,
}

/// Matching defect at an arbitrary `(m, k)`.
pub fn mismatch_at(d: u32, ell: u64, j: u64, m: C64, k: C64) -> Result<OracleCheck> {
    let r = default_outer_radius(d, ell, k);
    let inner = shoot_inner(d, ell, m)?;
    let outer = shoot_outer(d, ell, k, r)?;
    let scale = 1.0 + k.norm();
    Ok(OracleCheck {
        ell,
        j,
        mismatch: (inner.log_deriv_at_1 - outer.log_deriv_at_1).norm() / scale,
        inner_err: inner.est_err / scale,
        outer_err: outer.est_err / scale,
        r_used: r,
    })
}

/// Matching defect at a certified record.
pub fn oracle_mismatch(d: u32, record: &EigenRecord) -> Result<OracleCheck> {
    if !record.certified() {
        return Err(Error::Precondition(format!("record (l={}, j={}) is not certified", record.ell, record.j)));
    }
    mismatch_at(d, record.ell, record.j, record.m, record.k)
}

/// `(m, k)` for `λ(1 + rel)`, with `m` on the branch nearest the record's.
pub fn perturbed_pair(record: &EigenRecord, h: f64, rel: f64) -> (C64, C64) {
    let lam = record.lambda * (1.0 + rel);
    let mut m = (lam - C64::new(0.0, h)).sqrt();
    if (m - record.m).norm() > (m + record.m).norm() {
        m = -m;
    }
    (m, lam.sqrt())
}

/// Mismatch at a certified record next to the mismatch at `λ(1 + rel)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleContrast {
    pub check: OracleCheck,
    pub perturbed_mismatch: f64,
}

impl OracleContrast {
    pub fn ratio(&self) -> f64 {
        self.perturbed_mismatch / self.check.mismatch.max(f64::MIN_POSITIVE)
    }
}

pub fn oracle_contrast(d: u32, h: f64, record: &EigenRecord, rel: f64) -> Result<OracleContrast> {
    let check = oracle_mismatch(d, record)?;
    let (m, k) = perturbed_pair(record, h, rel);
    let perturbed = mismatch_at(d, record.ell, record.j, m, k)?;
    Ok(OracleContrast { check, perturbed_mismatch: perturbed.mismatch })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_closed_form_three_dimensions() {
        for m in [C64::new(3.7, 0.0), C64::new(40.3, -2.0), C64::new(900.0, -5.0)] {
            let s = shoot_inner(3, 0, m).unwrap();
            let exact = m * m.cos() / m.sin() - 1.0;
            assert!((s.log_deriv_at_1 - exact).norm() < 1e-9 * (1.0 + m.norm()), "{m}: {} vs {exact}", s.log_deriv_at_1);
        }
    }

    #[test]
    fn series_start_matches_spherical_bessel() {
        // d = 3, ℓ = 0: R = sin(mr)/(mr)
        for m in [C64::new(1200.0, 0.0), C64::new(80.0, -3.0)] {
            let r = inner_start_radius(3, 0, m);
            // both terms of the reference are of size 1/r and cancel
            let exact = m / (m * r).tan() - 1.0 / r;
            assert!((frobenius_log_deriv(3, 0, m, r) - exact).norm() < 1e-13 / r);
        }
    }

    #[test]
    fn outer_closed_form_three_dimensions() {
        for k in [C64::new(5.0, 3.0), C64::new(300.0, 0.5), C64::new(2000.0, 40.0)] {
            let r = default_outer_radius(3, 0, k);
            let s = shoot_outer(3, 0, k, r).unwrap();
            let exact = C64::i() * k - 1.0;
            assert!((s.log_deriv_at_1 - exact).norm() < 1e-9 * (1.0 + k.norm()), "{k}");
        }
    }

    #[test]
    fn preconditions() {
        assert!(shoot_inner(2, 3, C64::new(-1.0, 0.0)).is_err());
        assert!(shoot_outer(2, 3, C64::new(10.0, -1.0), 100.0).is_err());
        assert!(shoot_outer(2, 3, C64::new(10.0, 1.0), 2.0).is_err());
    }
}
