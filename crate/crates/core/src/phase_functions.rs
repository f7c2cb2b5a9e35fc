//! Modulus and phase of the Bessel pair `J_ν, Y_ν` in the sector
//! `M_ν = { Aν < Re z, |z| < 2 Re z }`.
//!
//! With `T(z) = (πz/2)(J² + Y²)` truncated at order `p`:
//!
//! * `M²(z) = T(z)` and `θ'(z) = 1/T(z)`;
//! * `θ(z) = z − νπ/2 − π/4 − ψ(z)` where `ψ(z) = ∫_z^{z+∞} (θ'(u) − 1) du`
//!   along the horizontal ray;
//! * `J'/J = Z₀ − θ' tan θ` and `Y'/Y = Z₀ + θ' cot θ` with
//!   `Z₀ = (J J' + Y Y')/(J² + Y²)`;
//! * `H/H' = (J² + Y²)/(J J' + Y Y' + 2i/(πz))`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::scalar::{count, lit, tan_stable, Real};
use crate::special_functions::{
    bessel_k_scaled, check_series_args, horner, j2y2_coefficients, j2y2_constant, jjp_coefficients,
    jjp_constant, scale_of, series_j2_y2, series_terminates,
};

/// Largest truncation order used by [`adaptive_order`].
pub const MAX_ORDER: usize = 32;

/// Constants that gate the certified region and the derivative bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderConstants<T> {
    pub c0: T,
    pub c1: T,
    pub c1_prime: T,
    /// `√(π C'₁)`
    pub a: T,
    /// `2π(C'₁ + 2C₁)`
    pub a_tilde: T,
}

impl<T: Real> RemainderConstants<T> {
    pub fn derived() -> Self {
        let c0 = jjp_constant::<T>(0);
        let c1 = jjp_constant::<T>(1);
        let c1_prime = j2y2_constant::<T>(1);
        let pi = T::PI();
        Self {
            c0,
            c1,
            c1_prime,
            a: (pi * c1_prime).sqrt(),
            a_tilde: lit::<T>(2.0) * pi * (c1_prime + lit::<T>(2.0) * c1),
        }
    }

    /// `|z|` must exceed this for the Hankel-ratio estimate.
    pub fn hankel_threshold(&self) -> T {
        T::one() + self.c1 / self.c1_prime
    }
}

pub fn region_contains<T: Real>(nu: T, z: Complex<T>) -> bool {
    let k = RemainderConstants::<T>::derived();
    k.a * nu < z.re && z.norm() < lit::<T>(2.0) * z.re
}

fn require_region<T: Real>(nu: T, z: Complex<T>) -> Result<()> {
    if region_contains(nu, z) {
        Ok(())
    } else {
        Err(Error::Region(format!("z = {z} is outside the phase region for order {nu}")))
    }
}

/// Smallest order whose two remainder bounds fall below `450·ε` of the leading
/// terms, capped by `⌊ν⌋` and [`MAX_ORDER`]. Half-odd-integer orders whose
/// series terminates get the terminating order.
pub fn adaptive_order<T: Real>(nu: T, z: Complex<T>) -> usize {
    let r = z.norm();
    for p in 1..=MAX_ORDER {
        if series_terminates(nu, p) {
            return p;
        }
    }
    let cap = nu.floor().to_usize().unwrap_or(0).min(MAX_ORDER);
    let target = T::epsilon() * lit::<T>(450.0);
    let ratio = (nu / r).powi(2);
    let mut power = T::one();
    for p in 0..=cap {
        // relative to 2/(π|z|) and 1/(π|z|²)
        let rel_y = j2y2_constant::<T>(p) * power * T::PI() / lit::<T>(2.0);
        let rel_x = jjp_constant::<T>(p) * power * T::PI();
        if rel_y.max(rel_x) < target {
            return p;
        }
        power *= ratio;
    }
    cap
}

/// Truncated sums at one point: `T = Σ τ_n σⁿ`, `U = Σ δ_n σⁿ`.
#[derive(Debug, Clone, Copy)]
struct Sums<T> {
    t: Complex<T>,
    /// `T − 1` summed without the leading one
    excess: Complex<T>,
    u: Complex<T>,
}

fn sums<T: Real>(nu: T, z: Complex<T>, p: usize) -> Sums<T> {
    let s = scale_of(nu);
    let zi = z.inv();
    let sigma = zi * zi * (s * s);
    let tau = j2y2_coefficients(nu, p);
    let excess = if p > 1 { horner(&tau[1..], sigma) * sigma } else { Complex::new(T::zero(), T::zero()) };
    Sums {
        t: excess + T::one(),
        excess,
        u: horner(&jjp_coefficients(nu, p), sigma),
    }
}

/// `θ'_ν(m)·(H/H')(k) + i` for two points of the region, formed from the
/// differences of the series so that the cancellation near `−i` is exact.
pub fn hankel_defect<T: Real>(nu: T, m: Complex<T>, pm: usize, k: Complex<T>, pk: usize) -> Result<Complex<T>> {
    check(nu, m, pm)?;
    check(nu, k, pk)?;
    let sm = sums(nu, m, pm);
    let sk = sums(nu, k, pk);
    let i = Complex::<T>::i();
    let q = sk.u / (k * lit::<T>(2.0));
    Ok((sk.excess - sm.excess - i * sm.t * q) / (sm.t * (i - q)))
}

fn check<T: Real>(nu: T, z: Complex<T>, p: usize) -> Result<()> {
    require_region(nu, z)?;
    if p == 0 {
        return Err(Error::Precondition("phase quantities need truncation order p >= 1".into()));
    }
    check_series_args(z, nu, p)
}

/// `θ'_ν(z) = (2/(πz))/(J² + Y²)`.
pub fn theta_prime<T: Real>(nu: T, z: Complex<T>, p: usize) -> Result<Complex<T>> {
    check(nu, z, p)?;
    Ok(sums(nu, z, p).t.inv())
}

/// `M²_ν(z) = (πz/2)(J² + Y²)`.
pub fn modulus_sq<T: Real>(nu: T, z: Complex<T>, p: usize) -> Result<Complex<T>> {
    check(nu, z, p)?;
    Ok(sums(nu, z, p).t)
}

/// `ψ_ν` from term-by-term integration, with a certified bound on what the
/// truncation leaves out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiSeries<T> {
    pub value: Complex<T>,
    pub tail_bound: T,
}

/// Fast path for `ψ_ν(z)`.
///
/// `1/T` is expanded as `P = Σ_{n<p} β_n σⁿ` (`β₀ = 1`), and
/// `ψ = z Σ_{n≥1} β_n σⁿ/(2n−1)`. The neglected part of `ψ'` at a point with
/// `|σ| = s` is bounded by
/// `E(s) = δ/(L(L−δ)) + Σ_{k≥p} |e_k| s^k / L`, where `L = 1 − Σ|τ_n| sⁿ`
/// bounds `|T|` from below, `δ` is the `J² + Y²` remainder scaled by `π|z|/2`,
/// and `e_k` are the coefficients of `1 − T·P`. Since `E(s)/s^p` grows with `s`
/// and `|u| ≥ |z|` on the ray, integrating `|u|^{−2p}` gives the tail bound.
pub fn psi_series<T: Real>(nu: T, z: Complex<T>, p: usize) -> Result<PsiSeries<T>> {
    check(nu, z, p)?;
    let s = scale_of(nu);
    let zi = z.inv();
    let sigma = zi * zi * (s * s);
    let tau = j2y2_coefficients(nu, p);
    let mut beta = vec![T::zero(); p];
    beta[0] = T::one();
    for n in 1..p {
        let mut acc = T::zero();
        for k in 1..=n {
            acc += tau[k] * beta[n - k];
        }
        beta[n] = -acc;
    }
    let mut poly = vec![T::zero(); p];
    for n in 1..p {
        poly[n] = beta[n] / count::<T>(2 * n - 1);
    }
    let value = z * horner(&poly, sigma);

    let r = z.norm();
    let sabs = sigma.norm();
    let lower: T = T::one() - (1..p).fold(T::zero(), |acc, n| acc + tau[n].abs() * sabs.powi(n as i32));
    let delta = if series_terminates(nu, p) {
        T::zero()
    } else {
        T::PI() / lit::<T>(2.0) * j2y2_constant::<T>(p) * (nu / r).powi(2 * p as i32)
    };
    if !(lower - delta > T::zero()) {
        return Err(Error::Region(format!("phase remainder not certifiable at z = {z}")));
    }
    let mut mismatch = T::zero();
    for k in p..=(2 * p).saturating_sub(2) {
        let mut e = T::zero();
        for i in (k + 1 - p)..p {
            e += tau[i] * beta[k - i];
        }
        mismatch += e.abs() * sabs.powi(k as i32);
    }
    let e_z = delta / (lower * (lower - delta)) + mismatch / lower;
    let stretch = r / z.re;
    let tail_bound = e_z * r * stretch.powi(2 * p as i32 - 1) / count::<T>(2 * p - 1);
    Ok(PsiSeries { value, tail_bound })
}

/// `ψ_ν(z)` by the fast path.
pub fn psi<T: Real>(nu: T, z: Complex<T>, p: usize) -> Result<Complex<T>> {
    psi_series(nu, z, p).map(|s| s.value)
}

/// Both evaluation paths of `ψ_ν` side by side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiCheck<T> {
    pub fast: Complex<T>,
    pub tail_bound: T,
    pub quadrature: Complex<T>,
    pub quadrature_err: T,
}

/// Numerical ray integral of `θ' − 1`, mapped to `(0, 1]` by `u = z + x(1/τ − 1)`
/// with `x = Re z`, compared against the fast path.
pub fn psi_cross_checked<T: Real>(nu: T, z: Complex<T>, p: usize) -> Result<PsiCheck<T>> {
    let fast = psi_series(nu, z, p)?;
    let x = z.re;
    let s = scale_of(nu);
    let tau = j2y2_coefficients(nu, p);
    let integrand = |t: T| {
        let u = z + Complex::new(x * (T::one() / t - T::one()), T::zero());
        let ui = u.inv();
        let sigma = ui * ui * (s * s);
        // θ' − 1 = −(T − 1)/T, with T − 1 summed without the leading one
        let excess = horner(&tau[1..], sigma) * sigma;
        -excess / (excess + T::one()) * (x / (t * t))
    };
    let scale = T::one() + fast.value.norm();
    let tol = Tolerance { abs: T::epsilon() * lit::<T>(50.0) * scale, rel: T::epsilon() * lit::<T>(50.0), max_intervals: 400 };
    let q = integrate(integrand, T::zero(), T::one(), tol)?;
    let gap = (q.value - fast.value).norm();
    let allowed = fast.tail_bound + q.abs_err + T::epsilon() * lit::<T>(1e3) * scale;
    if gap > allowed {
        return Err(Error::InternalConsistency(format!(
            "phase paths disagree by {gap:e} (allowed {allowed:e}) at z = {z}"
        )));
    }
    Ok(PsiCheck { fast: fast.value, tail_bound: fast.tail_bound, quadrature: q.value, quadrature_err: q.abs_err })
}

/// `θ_ν(z) = z − νπ/2 − π/4 − ψ_ν(z)`.
pub fn theta<T: Real>(nu: T, z: Complex<T>, p: usize) -> Result<Complex<T>> {
    let psi = psi(nu, z, p)?;
    Ok(phase_shift(nu, z) - psi)
}

/// `z − νπ/2 − π/4`.
pub fn phase_shift<T: Real>(nu: T, z: Complex<T>) -> Complex<T> {
    z - (nu * T::FRAC_PI_2() + T::FRAC_PI_4())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDerivative<T> {
    pub value: Complex<T>,
    /// Bound `C₀π/|z|` on the `Z₀` part of the value.
    pub err_bound: T,
}

fn near_zero_guard<T: Real>(theta: Complex<T>) -> Result<()> {
    let cos_abs = theta.cos().norm();
    let floor = T::min_positive_value() * lit::<T>(1e18);
    if cos_abs < floor {
        return Err(Error::NearZeroOfJ { cos_abs: cos_abs.to_f64().unwrap_or(0.0) });
    }
    Ok(())
}

/// `J'_ν(z)/J_ν(z) = Z₀ − θ' tan θ`.
pub fn log_deriv_j<T: Real>(nu: T, z: Complex<T>, p: usize) -> Result<LogDerivative<T>> {
    let pe = evaluate_with_order(nu, z, p)?;
    pe.log_deriv_j()
}

/// `H⁽¹⁾_ν(z)/(H⁽¹⁾_ν)'(z) = T/(i − U/(2z))`.
pub fn hankel_ratio<T: Real>(nu: T, z: Complex<T>, p: usize) -> Result<Complex<T>> {
    check(nu, z, p)?;
    let k = RemainderConstants::<T>::derived();
    if !(z.norm() > k.hankel_threshold()) {
        return Err(Error::Precondition(format!("|z| must exceed {}", k.hankel_threshold())));
    }
    let sm = sums(nu, z, p);
    Ok(hankel_ratio_from(z, sm))
}

fn hankel_ratio_from<T: Real>(z: Complex<T>, sm: Sums<T>) -> Complex<T> {
    let i = Complex::<T>::i();
    sm.t / (i - sm.u / (z * lit::<T>(2.0)))
}

/// Everything the solver needs at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEval<T> {
    pub z: Complex<T>,
    pub nu: T,
    pub theta: Complex<T>,
    pub psi: Complex<T>,
    pub theta_prime: Complex<T>,
    pub modulus_sq: Complex<T>,
    /// `Z₀ = (J J' + Y Y')/(J² + Y²)`
    pub z0: Complex<T>,
    /// `H/H'` at the same point
    pub hankel_ratio: Complex<T>,
    pub p_used: usize,
    /// `2A²ν²/|z|`
    pub psi_bound: T,
    pub psi_tail: T,
    pub in_region: bool,
}

/// Evaluates every phase quantity with the order chosen by [`adaptive_order`].
pub fn evaluate<T: Real>(nu: T, z: Complex<T>) -> Result<PhaseEval<T>> {
    evaluate_with_order(nu, z, adaptive_order(nu, z))
}

pub fn evaluate_with_order<T: Real>(nu: T, z: Complex<T>, p: usize) -> Result<PhaseEval<T>> {
    let ps = psi_series(nu, z, p)?;
    let sm = sums(nu, z, p);
    let k = RemainderConstants::<T>::derived();
    let z0 = -sm.u / (z * sm.t * lit::<T>(2.0));
    Ok(PhaseEval {
        z,
        nu,
        theta: phase_shift(nu, z) - ps.value,
        psi: ps.value,
        theta_prime: sm.t.inv(),
        modulus_sq: sm.t,
        z0,
        hankel_ratio: hankel_ratio_from(z, sm),
        p_used: p,
        psi_bound: lit::<T>(2.0) * k.a * k.a * nu * nu / z.norm(),
        psi_tail: ps.tail_bound,
        in_region: true,
    })
}

impl<T: Real> PhaseEval<T> {
    pub fn tan_theta(&self) -> Complex<T> {
        tan_stable(self.theta)
    }

    pub fn log_deriv_j(&self) -> Result<LogDerivative<T>> {
        near_zero_guard(self.theta)?;
        let k = RemainderConstants::<T>::derived();
        Ok(LogDerivative {
            value: self.z0 - self.theta_prime * self.tan_theta(),
            err_bound: k.c0 * T::PI() / self.z.norm(),
        })
    }

    /// `Y'/Y = Z₀ + θ' cot θ`.
    pub fn log_deriv_y(&self) -> Result<Complex<T>> {
        let s = self.theta.sin();
        if s.norm() < T::min_positive_value() * lit::<T>(1e18) {
            return Err(Error::Numerical("point is numerically at a zero of Y".into()));
        }
        Ok(self.z0 + self.theta_prime / self.tan_theta())
    }

    /// `J, Y, J', Y', H⁽¹⁾, H⁽¹⁾'` rebuilt from modulus and phase.
    pub fn assemble(&self) -> Result<AssembledBessel<T>> {
        let amp = (self.z * T::PI() / lit::<T>(2.0)).inv().sqrt() * self.modulus_sq.sqrt();
        let (c, s) = (self.theta.cos(), self.theta.sin());
        let i = Complex::<T>::i();
        let e = (i * self.theta).exp();
        let out = AssembledBessel {
            j: amp * c,
            y: amp * s,
            jp: amp * (self.z0 * c - self.theta_prime * s),
            yp: amp * (self.z0 * s + self.theta_prime * c),
            h1: amp * e,
            h1p: amp * (self.z0 + i * self.theta_prime) * e,
        };
        let all = [out.j, out.y, out.jp, out.yp, out.h1, out.h1p];
        if all.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Overflow(format!("Bessel assembly at z = {}", self.z)));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssembledBessel<T> {
    pub j: Complex<T>,
    pub y: Complex<T>,
    pub jp: Complex<T>,
    pub yp: Complex<T>,
    pub h1: Complex<T>,
    pub h1p: Complex<T>,
}

/// Result of comparing Nicholson's integral with the truncated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NicholsonCheck<T> {
    pub residual: T,
    pub remainder_bound: T,
    pub quadrature_err: T,
    pub order: usize,
}

/// Largest order accepted by [`nicholson_validate`].
pub const NICHOLSON_MAX_ORDER: f64 = 60.0;

/// Evaluates `(8/π²)∫₀^∞ K₀(2z sinh t) cosh(2νt) dt` numerically and compares
/// with the `J² + Y²` series at order `min(4, ⌊ν⌋)`.
///
/// With `u = sinh t` the integral is `∫₀^∞ K₀(2zu) cosh(2ν asinh u)/√(1+u²) du`.
/// The ray `u = s e^{−i arg z}` turns the Bessel argument real; it stays clear
/// of the branch points `±i` because `|arg z| ≤ π/3`.
pub fn nicholson_validate<T: Real>(nu: T, z: Complex<T>) -> Result<NicholsonCheck<T>> {
    if !(z.re > T::zero()) {
        return Err(Error::Precondition("Nicholson's integral needs Re z > 0".into()));
    }
    if nu > lit(NICHOLSON_MAX_ORDER) || nu < T::zero() {
        return Err(Error::Precondition(format!("order {nu} outside [0, {NICHOLSON_MAX_ORDER}]")));
    }
    let p = (1..=4usize).rev().find(|&p| series_terminates(nu, p) || count::<T>(p) <= nu).unwrap_or(0);
    let series = series_j2_y2(z, nu, p)?;
    let r = z.norm();
    let rot = Complex::from_polar(T::one(), -z.arg());
    let two = lit::<T>(2.0);
    let two_nu = two * nu;
    // far end: K₀ decay beats the (1+2s)^{2ν} growth by e^{-750}
    let mut s_max = lit::<T>(750.0) / (two * r);
    while two * r * s_max - two_nu * (T::one() + two * s_max).ln() < lit::<T>(750.0) {
        s_max *= two;
    }
    let integrand = |s: T| {
        if s == T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        let x = two * r * s;
        let w = rot * s;
        let one = Complex::new(T::one(), T::zero());
        let root = (one + w * w).sqrt();
        let a = (w + root).ln();
        // K₀(x) cosh(2ν a) with the exponentials merged
        let k0 = if x <= two {
            crate::special_functions::bessel_k(0, x).map(|k| k.value).unwrap_or(T::zero())
        } else {
            bessel_k_scaled(0, x)
        };
        let shift = if x <= two { T::zero() } else { x };
        let grow = (a * two_nu - shift).exp();
        let decay = (-a * two_nu - shift).exp();
        (grow + decay) * (k0 / two) / root * rot
    };
    let tol = Tolerance { abs: T::epsilon() * lit::<T>(10.0) / r, rel: T::epsilon() * lit::<T>(10.0), max_intervals: 2000 };
    // split at the K₀ log singularity scale
    let cut = (T::one() / r).min(s_max);
    let q1 = integrate(integrand, T::zero(), cut, tol)?;
    let q2 = integrate(integrand, cut, s_max, tol)?;
    let factor = lit::<T>(8.0) / (T::PI() * T::PI());
    let value = (q1.value + q2.value) * factor;
    Ok(NicholsonCheck {
        residual: (value - series.value).norm(),
        remainder_bound: series.remainder_bound,
        quadrature_err: (q1.abs_err + q2.abs_err) * factor,
        order: p,
    })
}
