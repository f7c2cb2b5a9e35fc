//! Construction of the eigenvalues `λ = ih + m²` of `−Δ + ih·χ_{B₁}`.
//!
//! For every admissible `(ℓ, j)` the chain is
//! `m⁽⁰⁾ → m⁽¹⁾ → m`: the explicit centre, the zero of the auxiliary phase
//! equation, and the zero of the full characteristic equation written as
//! `F(m) = f(m) + i·log(1 + err(m))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_functions::{evaluate, hankel_defect, region_contains, PhaseEval, RemainderConstants};
use crate::scalar::half_secant_factor;
use crate::C64;

/// One experiment: dimension, exponent and the scale parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub d: u32,
    /// Lieb–Thirring exponent
    pub p_exp: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub h: f64,
}

impl SpectralParams {
    pub fn new(d: u32, p_exp: f64, epsilon: f64, alpha: f64, beta: f64, gamma: f64, h: f64) -> Result<Self> {
        let params = Self { d, p_exp, epsilon, alpha, beta, gamma, h };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Precondition(format!("dimension must be at least 2, got {}", self.d)));
        }
        if !(self.p_exp > 0.0 && self.p_exp.is_finite()) {
            return Err(Error::Precondition(format!("exponent must be positive, got {}", self.p_exp)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Precondition(format!("epsilon must lie in (0,1), got {}", self.epsilon)));
        }
        if !(0.0 < self.alpha && self.alpha < self.beta && self.beta < self.gamma && self.gamma < 0.5) {
            return Err(Error::Precondition(format!(
                "need 0 < alpha < beta < gamma < 1/2, got {}, {}, {}",
                self.alpha, self.beta, self.gamma
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Precondition(format!("h must be positive, got {}", self.h)));
        }
        Ok(())
    }

    /// `q = (1 − ε)/(d − 1)`
    pub fn q(&self) -> f64 {
        (1.0 - self.epsilon) / (self.d as f64 - 1.0)
    }

    pub fn with_h(&self, h: f64) -> Self {
        Self { h, ..*self }
    }
}

/// `ν = ℓ + d/2 − 1`
pub fn nu_of(d: u32, ell: u64) -> f64 {
    ell as f64 + d as f64 / 2.0 - 1.0
}

fn binomial(n: i128, k: i128) -> Result<i128> {
    if n < 0 || k < 0 || k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 1..=k {
        // acc·(n−k+i)/i stays integral at every step
        acc = acc
            .checked_mul(n - k + i)
            .ok_or_else(|| Error::Overflow(format!("binomial({n}, {k})")))?
            / i;
    }
    Ok(acc)
}

/// Dimension of the degree-`ℓ` spherical harmonics on `S^{d−1}`.
pub fn multiplicity(d: u32, ell: u64) -> Result<u128> {
    let (d, l) = (d as i128, ell as i128);
    let m = binomial(d + l - 1, d - 1)? - binomial(d + l - 3, d - 1)?;
    Ok(m as u128)
}

/// `m⁽⁰⁾ = 2πj + νπ/2 + π/2 + i·log(√h/(4πj))`
pub fn m_initial(nu: f64, j: u64, h: f64) -> C64 {
    let pi = std::f64::consts::PI;
    let jf = j as f64;
    C64::new(2.0 * pi * jf + nu * pi / 2.0 + pi / 2.0, (h.sqrt() / (4.0 * pi * jf)).ln())
}

fn phase_at(nu: f64, m: C64) -> Result<PhaseEval<f64>> {
    evaluate(nu, m)
}

/// `f(m) = θ_ν(m) − π/4 − 2πj − i·log(√h/(4πj))`, evaluated as `(m − m⁽⁰⁾) − ψ_ν(m)`.
pub fn f_aux(nu: f64, j: u64, h: f64, m: C64) -> Result<C64> {
    let pe = phase_at(nu, m)?;
    Ok((m - m_initial(nu, j, h)) - pe.psi)
}

/// Principal `√(ih + m²)`.
pub fn k_of(m: C64, h: f64) -> Result<C64> {
    let lam = C64::new(0.0, h) + m * m;
    if lam.im == 0.0 && lam.re < 0.0 {
        return Err(Error::Domain(format!("ih + m² = {lam} lies on the branch cut")));
    }
    Ok(lam.sqrt())
}

/// Outcome of a damped Newton solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonRoot {
    pub root: C64,
    pub residual: f64,
    pub iterations: u32,
}

const MAX_NEWTON: u32 = 50;
const MAX_HALVINGS: u32 = 6;

/// Damped Newton: step length capped at `cap`, halved up to six times while `|F|`
/// fails to decrease, at most 50 iterations, confined to the disc `ball`.
fn damped_newton<F>(mut eval: F, seed: C64, cap: f64, ball: (C64, f64), tol: impl Fn(C64) -> f64) -> Result<NewtonRoot>
where
    F: FnMut(C64) -> Result<(C64, C64)>,
{
    let mut m = seed;
    let mut trail = vec![(m.re, m.im)];
    let (mut f, mut df) = eval(m)?;
    for it in 0..=MAX_NEWTON {
        if f.norm() < tol(m) {
            // one polishing step when it helps
            let cand = m - f / df;
            if let Ok((fc, _)) = eval(cand) {
                if fc.norm() < f.norm() && (cand - ball.0).norm() < ball.1 {
                    return Ok(NewtonRoot { root: cand, residual: fc.norm(), iterations: it + 1 });
                }
            }
            return Ok(NewtonRoot { root: m, residual: f.norm(), iterations: it });
        }
        if it == MAX_NEWTON {
            break;
        }
        let mut step = -f / df;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return Err(Error::NoConvergence { reason: "singular Newton derivative".into(), trail });
        }
        if step.norm() > cap {
            step = step * (cap / step.norm());
        }
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = m + step;
            if (cand - ball.0).norm() < ball.1 {
                if let Ok((fc, dfc)) = eval(cand) {
                    if fc.norm() < f.norm() {
                        accepted = Some((cand, fc, dfc));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, fc, dfc)) => {
                m = cand;
                f = fc;
                df = dfc;
                trail.push((m.re, m.im));
            }
            None => {
                return Err(Error::NoConvergence {
                    reason: format!("no decrease of |F| = {:e} within the ball", f.norm()),
                    trail,
                })
            }
        }
    }
    Err(Error::NoConvergence { reason: format!("iteration cap reached with |F| = {:e}", f.norm()), trail })
}

fn newton_tol(m: C64) -> f64 {
    1e-12 * (1.0 + m.norm())
}

/// The zero `m⁽¹⁾` of [`f_aux`] inside `B_{ν/2}(m⁽⁰⁾)`.
pub fn solve_m1(nu: f64, j: u64, h: f64) -> Result<NewtonRoot> {
    let m0 = m_initial(nu, j, h);
    let radius = nu / 2.0;
    damped_newton(
        |m| {
            let pe = phase_at(nu, m)?;
            Ok(((m - m0) - pe.psi, pe.theta_prime))
        },
        m0,
        radius.max(1.0),
        (m0, radius),
        newton_tol,
    )
}

/// Pieces of the characteristic function at one `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicParts {
    pub phase: PhaseEval<f64>,
    pub k: C64,
    pub xi: C64,
    pub err: C64,
    /// `f(m) + i·log(1 + err)`
    pub value: C64,
}

fn k_phase(nu: f64, k: C64) -> Result<PhaseEval<f64>> {
    let limits = RemainderConstants::<f64>::derived();
    if !(k.norm() > limits.hankel_threshold()) {
        return Err(Error::Region(format!("|k| = {} too small for the Hankel ratio", k.norm())));
    }
    evaluate(nu, k).map_err(|e| match e {
        Error::Region(msg) => Error::Region(format!("k: {msg}")),
        other => other,
    })
}

/// `ξ_ν(m) = [tan²θ + R²]·cos²θ` with `R = (J'/J)(m)·(H/H')(k)`.
///
/// The bracket is factored as `(tan θ + iR)(tan θ − iR)`; the small factor is
/// `i·Z₀·(H/H') − i·g·tan θ` with `g = θ'(m)(H/H')(k) + i` from
/// [`hankel_defect`].
pub fn xi_from(pm: &PhaseEval<f64>, pk: &PhaseEval<f64>) -> Result<C64> {
    let i = C64::i();
    let tan = pm.tan_theta();
    let g = hankel_defect(pm.nu, pm.z, pm.p_used, pk.z, pk.p_used)?;
    let small = i * pm.z0 * pk.hankel_ratio - i * g * tan;
    let large = tan * 2.0 - small;
    let c = pm.theta.cos();
    let xi = small * large * c * c;
    if !(xi.re.is_finite() && xi.im.is_finite()) {
        return Err(Error::Overflow("xi".into()));
    }
    Ok(xi)
}

pub fn xi(nu: f64, m: C64, h: f64) -> Result<C64> {
    let pm = phase_at(nu, m)?;
    let pk = k_phase(nu, k_of(m, h)?)?;
    xi_from(&pm, &pk)
}

/// `err = −1 + (m/(2πj))·(1 + e^{−2iθ})^{−1}·√(1 − ξ)`
pub fn err_from(j: u64, m: C64, theta: C64, xi: C64) -> Result<C64> {
    if xi.norm() >= 1.0 {
        return Err(Error::BelowThreshold(format!("|xi| = {} >= 1", xi.norm())));
    }
    let two_pi_j = 2.0 * std::f64::consts::PI * j as f64;
    let one = C64::new(1.0, 0.0);
    Ok(m / two_pi_j * half_secant_factor(theta) * (one - xi).sqrt() - one)
}

pub fn err_term(nu: f64, j: u64, h: f64, m: C64) -> Result<C64> {
    let pm = phase_at(nu, m)?;
    let x = xi(nu, m, h)?;
    err_from(j, m, pm.theta, x)
}

/// Evaluates `F(m)` and its ingredients.
pub fn characteristic(nu: f64, j: u64, h: f64, m: C64) -> Result<CharacteristicParts> {
    let pm = phase_at(nu, m)?;
    let k = k_of(m, h)?;
    let pk = k_phase(nu, k)?;
    let xi = xi_from(&pm, &pk)?;
    let err = err_from(j, m, pm.theta, xi)?;
    let one = C64::new(1.0, 0.0);
    if (one + err).norm() == 0.0 {
        return Err(Error::Numerical("log(1 + err) at zero".into()));
    }
    let f = (m - m_initial(nu, j, h)) - pm.psi;
    Ok(CharacteristicParts { phase: pm, k, xi, err, value: f + C64::i() * (one + err).ln() })
}

const FD_STEP: f64 = 1e-6;

fn characteristic_with_slope(nu: f64, j: u64, h: f64, m: C64) -> Result<(C64, C64)> {
    let c = characteristic(nu, j, h, m)?;
    let e_plus = err_term_only(nu, j, h, m + FD_STEP)?;
    let e_minus = err_term_only(nu, j, h, m - FD_STEP)?;
    let derr = (e_plus - e_minus) / (2.0 * FD_STEP);
    let slope = c.phase.theta_prime + C64::i() * derr / (c.err + 1.0);
    Ok((c.value, slope))
}

fn err_term_only(nu: f64, j: u64, h: f64, m: C64) -> Result<C64> {
    let pm = phase_at(nu, m)?;
    let pk = k_phase(nu, k_of(m, h)?)?;
    let x = xi_from(&pm, &pk)?;
    err_from(j, m, pm.theta, x)
}

/// `r = (J'/J)(m)·(H/H')(k)·(m/k)`, equal to one at a solution.
pub fn matching_ratio(nu: f64, m: C64, k: C64) -> Result<C64> {
    let pm = phase_at(nu, m)?;
    let pk = k_phase(nu, k)?;
    Ok(pm.log_deriv_j()?.value * pk.hankel_ratio * (m / k))
}

/// True when `m` solves the characteristic equation rather than its
/// sign-flipped partner.
pub fn verify_sign(nu: f64, m: C64, k: C64) -> bool {
    match matching_ratio(nu, m, k) {
        Ok(r) => (r - 1.0).norm() < (r + 1.0).norm(),
        Err(_) => false,
    }
}

/// Newton on the characteristic function from an arbitrary seed, confined to
/// `B₂(m⁽¹⁾)`.
pub fn refine_from(nu: f64, j: u64, h: f64, m1: C64, seed: C64) -> Result<NewtonRoot> {
    damped_newton(|m| characteristic_with_slope(nu, j, h, m), seed, 1.0, (m1, 2.0), newton_tol)
}

/// Why a record is excluded from sums.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// A precondition of the construction fails at this `h` (region membership,
    /// `|ξ| < 1`, ...); the parameter set is below its empirical threshold.
    BelowThreshold(String),
    NoConvergence(String),
    LeftBall,
    Residual,
    Sign,
    Strip,
    Resonance,
}

impl Flag {
    pub fn label(&self) -> &'static str {
        match self {
            Flag::BelowThreshold(_) => "below_h0",
            Flag::NoConvergence(_) => "no_convergence",
            Flag::LeftBall => "left_ball",
            Flag::Residual => "residual",
            Flag::Sign => "sign",
            Flag::Strip => "strip",
            Flag::Resonance => "resonance",
        }
    }
}

/// One constructed eigenvalue together with its certification data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub ell: u64,
    pub j: u64,
    pub nu: f64,
    pub m0: C64,
    pub m1: C64,
    pub m: C64,
    pub k: C64,
    pub lambda: C64,
    pub multiplicity: u128,
    pub char_residual: f64,
    pub sign_ok: bool,
    pub strip_ok: bool,
    pub bounds_ok: bool,
    pub newton_iters: u32,
    pub im_theta: f64,
    pub xi_abs: f64,
    pub err_abs: f64,
    pub flag: Option<Flag>,
}

impl EigenRecord {
    pub fn certified(&self) -> bool {
        self.flag.is_none()
    }
}

/// Acceptance threshold for `|1 − r|`.
pub const RESIDUAL_TOL: f64 = 1e-8;

fn classify(e: &Error) -> Flag {
    match e {
        Error::Region(msg) | Error::BelowThreshold(msg) | Error::Precondition(msg) => Flag::BelowThreshold(msg.clone()),
        Error::NoConvergence { reason, .. } => Flag::NoConvergence(reason.clone()),
        other => Flag::NoConvergence(other.to_string()),
    }
}

/// Runs the chain for one `(ℓ, j)` without checking index-set membership.
pub fn construct(d: u32, h: f64, ell: u64, j: u64) -> Result<EigenRecord> {
    if j == 0 {
        return Err(Error::Precondition("j must be positive".into()));
    }
    let nu = nu_of(d, ell);
    let m0 = m_initial(nu, j, h);
    let mut rec = EigenRecord {
        ell,
        j,
        nu,
        m0,
        m1: m0,
        m: m0,
        k: C64::new(0.0, 0.0),
        lambda: C64::new(0.0, h) + m0 * m0,
        multiplicity: multiplicity(d, ell)?,
        char_residual: f64::INFINITY,
        sign_ok: false,
        strip_ok: false,
        bounds_ok: false,
        newton_iters: 0,
        im_theta: f64::NAN,
        xi_abs: f64::NAN,
        err_abs: f64::NAN,
        flag: None,
    };
    if !region_contains(nu, m0) {
        rec.flag = Some(Flag::BelowThreshold("m0 outside the phase region".into()));
        return Ok(rec);
    }
    let m1 = match solve_m1(nu, j, h) {
        Ok(r) => r.root,
        Err(e) => {
            rec.flag = Some(classify(&e));
            return Ok(rec);
        }
    };
    rec.m1 = m1;
    rec.m = m1;
    let solved = refine_from(nu, j, h, m1, m1);
    let root = match solved {
        Ok(r) => r,
        Err(e) => {
            rec.flag = Some(classify(&e));
            return Ok(rec);
        }
    };
    let m = root.root;
    rec.m = m;
    rec.newton_iters = root.iterations;
    let parts = match characteristic(nu, j, h, m) {
        Ok(p) => p,
        Err(e) => {
            rec.flag = Some(classify(&e));
            return Ok(rec);
        }
    };
    let k = parts.k;
    let lambda = C64::new(0.0, h) + m * m;
    rec.k = k;
    rec.lambda = lambda;
    rec.im_theta = parts.phase.theta.im;
    rec.xi_abs = parts.xi.norm();
    rec.err_abs = parts.err.norm();
    let r = match matching_ratio(nu, m, k) {
        Ok(r) => r,
        Err(e) => {
            rec.flag = Some(classify(&e));
            return Ok(rec);
        }
    };
    rec.char_residual = (1.0 - r).norm();
    rec.sign_ok = (r - 1.0).norm() < (r + 1.0).norm();
    let tol = 1e-10 * (1.0 + lambda.norm());
    rec.strip_ok = lambda.re >= -tol && lambda.im >= -tol && lambda.im <= h + tol;
    let four_pi_j = 4.0 * std::f64::consts::PI * j as f64;
    rec.bounds_ok = lambda.im >= h / 2.0 && lambda.norm() <= four_pi_j * four_pi_j;
    rec.flag = if (m - m1).norm() >= 2.0 || (m1 - m0).norm() >= nu / 2.0 {
        Some(Flag::LeftBall)
    } else if k.im <= 0.0 {
        Some(Flag::Resonance)
    } else if !(rec.char_residual < RESIDUAL_TOL) {
        Some(Flag::Residual)
    } else if !rec.sign_ok {
        Some(Flag::Sign)
    } else if !rec.strip_ok {
        Some(Flag::Strip)
    } else {
        None
    };
    Ok(rec)
}

/// Solves for `(ℓ, j)` after checking both index sets.
pub fn solve_characteristic(params: &SpectralParams, ell: u64, j: u64) -> Result<EigenRecord> {
    params.validate()?;
    let ls = crate::lt_divergence::index_l(params.h, params.alpha, params.beta);
    if !ls.contains(ell) {
        return Err(Error::Precondition(format!("l = {ell} not in [{}, {}]", ls.lo, ls.hi)));
    }
    let js = crate::lt_divergence::index_j(params.h, ell, params.gamma, params.q())?;
    if !js.contains(j) {
        return Err(Error::Precondition(format!("j = {j} not in [{}, {}]", js.lo, js.hi)));
    }
    construct(params.d, params.h, ell, j)
}
