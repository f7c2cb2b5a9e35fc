//! Large-argument expansions of `J² + Y²` and `J J' + Y Y'` with explicit
//! remainder bounds, real-argument `K₀`/`K₁`, and the order-½ closed forms.
//!
//! Both expansions are written in the scaled variable `σ = (s/z)²` with
//! `s = max(ν, 1)`, so the coefficients stay of order one for large orders.
//!
//! # Remainder constants
//!
//! For the `J J' + Y Y'` family the constant is
//! `C_p = (2/π)·(2p+2)!/(p!(p+1)!)`.
//!
//! For the `J² + Y²` family the constant is derived the same way, starting from
//! Nicholson's integral `J² + Y² = (8/π²)∫₀^∞ K₀(2z sinh t) cosh(2νt) dt`.
//! Substitute `u = sinh t`, expand `cosh(2ν asinh u)/√(1+u²)` in powers of `u²`
//! with Taylor remainder of order `p`, and integrate term by term using
//! `∫₀^∞ K₀(2zu) u^{2n} du = Γ(n+½)²/(4 z^{2n+1})`. The remainder term is
//! bounded with `|K₀(2zu)| ≤ K₀(2u Re z) ≤ K₀(u|z|)` (valid for `|z| ≤ 2 Re z`) and
//! `∫₀^∞ K₀(t) t^{2p} dt = 2^{2p-1} Γ(p+½)²`. The Taylor coefficient of the
//! remainder is bounded by `ν^{2p}·4^p/(2p)!`, which leaves
//!
//! `C'_p = (4/π)·binom(2p, p)`,
//!
//! so `C'₀ = 4/π` and `C'₁ = 8/π`. With `p = 0` the bound reproduces the leading
//! size `2/(π|z|)` up to the factor two lost in the modulus estimate.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{count, lit, Real};

/// Truncated series together with its certified remainder bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue<T> {
    pub value: Complex<T>,
    pub truncation_order: usize,
    pub remainder_bound: T,
}

/// `(ν, n) = (1/n!)·∏_{j=1..n} [ν² − (j − ½)²]`.
pub fn hankel_symbol<T: Real>(nu: T, n: usize) -> T {
    let nu2 = nu * nu;
    let half = lit::<T>(0.5);
    let mut acc = T::one();
    for j in 1..=n {
        let a = count::<T>(j) - half;
        acc = acc * (nu2 - a * a) / count::<T>(j);
    }
    acc
}

/// Remainder constant of the `J J' + Y Y'` expansion.
pub fn jjp_constant<T: Real>(p: usize) -> T {
    // (2p+2)!/(p!(p+1)!) = (p+1)·binom(2p+2, p+1)
    lit::<T>(2.0) / T::PI() * count::<T>(p + 1) * binomial_central::<T>(p + 1)
}

/// Remainder constant of the `J² + Y²` expansion, see the module docs.
pub fn j2y2_constant<T: Real>(p: usize) -> T {
    lit::<T>(4.0) / T::PI() * binomial_central::<T>(p)
}

fn binomial_central<T: Real>(n: usize) -> T {
    // binom(2n, n) as a running product
    let mut b = T::one();
    for k in 1..=n {
        b = b * count::<T>(n + k) / count::<T>(k);
    }
    b
}

/// True when `ν` is a half-odd-integer whose symbols vanish from order `p` on.
pub fn series_terminates<T: Real>(nu: T, p: usize) -> bool {
    let twice = nu * lit::<T>(2.0);
    if twice.fract() != T::zero() || twice.to_i64().is_none_or(|k| k % 2 == 0) {
        return false;
    }
    nu + lit::<T>(0.5) <= count::<T>(p)
}

/// The scale `s` used in `σ = (s/z)²`.
pub(crate) fn scale_of<T: Real>(nu: T) -> T {
    nu.max(T::one())
}

/// Coefficients `τ_n = c_n·(ν,n)/s^{2n}` with `c_n = (2n)!/(4ⁿ n!)`, so that
/// `(πz/2)(J² + Y²) ≈ Σ τ_n σⁿ`.
pub(crate) fn j2y2_coefficients<T: Real>(nu: T, p: usize) -> Vec<T> {
    scaled_coefficients(nu, p, -1)
}

/// Coefficients `δ_n = d_n·(ν,n)/s^{2n}` with `d_n = (2n+1)!/(4ⁿ n!)`, so that
/// `−π z² (J J' + Y Y') ≈ Σ δ_n σⁿ`.
pub(crate) fn jjp_coefficients<T: Real>(nu: T, p: usize) -> Vec<T> {
    scaled_coefficients(nu, p, 1)
}

fn scaled_coefficients<T: Real>(nu: T, p: usize, shift: i32) -> Vec<T> {
    let s2 = scale_of(nu).powi(2);
    let nu2 = nu * nu;
    let half = lit::<T>(0.5);
    let mut out = Vec::with_capacity(p);
    let mut c = T::one();
    for n in 0..p {
        if n > 0 {
            let nn = count::<T>(n);
            let a = nn - half;
            let ratio = (lit::<T>(2.0) * nn + lit::<T>(shift as f64)) / lit::<T>(2.0);
            c = c * ratio * ((nu2 - a * a) / s2) / nn;
        }
        out.push(c);
    }
    out
}

pub(crate) fn horner<T: Real>(coeffs: &[T], x: Complex<T>) -> Complex<T> {
    coeffs
        .iter()
        .rev()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * x + c)
}

pub(crate) fn check_series_args<T: Real>(z: Complex<T>, nu: T, p: usize) -> Result<()> {
    if !(nu.is_finite() && nu >= T::zero()) {
        return Err(Error::Precondition(format!("order must be finite and non-negative, got {nu}")));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Precondition("non-finite argument".into()));
    }
    let r = z.norm();
    if !(r > T::zero()) || r > lit::<T>(2.0) * z.re {
        return Err(Error::Region(format!("need 0 < |z| <= 2 Re z, got z = {z}")));
    }
    if nu < count::<T>(p) && !series_terminates(nu, p) {
        return Err(Error::Precondition(format!("truncation order {p} exceeds order {nu}")));
    }
    Ok(())
}

/// `J²_ν(z) + Y²_ν(z) ≈ (2/π) Σ_{n<p} (2n)!/(4ⁿ n!)·(ν,n)/z^{2n+1}`.
pub fn series_j2_y2<T: Real>(z: Complex<T>, nu: T, p: usize) -> Result<SeriesValue<T>> {
    check_series_args(z, nu, p)?;
    let s = scale_of(nu);
    let zi = z.inv();
    let sigma = zi * zi * (s * s);
    let sum = horner(&j2y2_coefficients(nu, p), sigma);
    let value = zi * sum * (lit::<T>(2.0) / T::PI());
    let r = z.norm();
    let bound = if series_terminates(nu, p) { T::zero() } else { j2y2_constant::<T>(p) * (nu / r).powi(2 * p as i32) / r };
    Ok(SeriesValue { value, truncation_order: p, remainder_bound: bound })
}

/// `J_ν J'_ν + Y_ν Y'_ν ≈ −(1/π) Σ_{n<p} (2n+1)!/(4ⁿ n!)·(ν,n)/z^{2n+2}`.
pub fn series_jjp_yyp<T: Real>(z: Complex<T>, nu: T, p: usize) -> Result<SeriesValue<T>> {
    check_series_args(z, nu, p)?;
    let s = scale_of(nu);
    let zi = z.inv();
    let zi2 = zi * zi;
    let sigma = zi2 * (s * s);
    let sum = horner(&jjp_coefficients(nu, p), sigma);
    let value = -zi2 * sum / T::PI();
    let r = z.norm();
    let bound =
        if series_terminates(nu, p) { T::zero() } else { jjp_constant::<T>(p) * (nu / r).powi(2 * p as i32) / (r * r) };
    Ok(SeriesValue { value, truncation_order: p, remainder_bound: bound })
}

/// Real-argument `K₀(x)` or `K₁(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselK<T> {
    pub value: T,
    pub underflow: bool,
}

const K_SERIES_LIMIT: f64 = 2.0;

/// `K₀(x)` (order 0) or `K₁(x)` (order 1) for real `x > 0`.
pub fn bessel_k<T: Real>(order: u32, x: T) -> Result<BesselK<T>> {
    if order > 1 {
        return Err(Error::Domain(format!("only orders 0 and 1 are provided, got {order}")));
    }
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::Domain(format!("K needs a finite positive argument, got {x}")));
    }
    if x <= lit(K_SERIES_LIMIT) {
        let value = if order == 0 { k0_series(x) } else { k1_series(x) };
        return Ok(BesselK { value, underflow: false });
    }
    let scaled = bessel_k_scaled(order, x);
    let decay = (-x).exp();
    let value = scaled * decay;
    let underflow = decay == T::zero() || value < T::min_positive_value();
    Ok(BesselK { value: if underflow { T::zero() } else { value }, underflow })
}

/// `e^x K_n(x)` for `x > 2` by the trapezoidal rule on
/// `∫₀^∞ exp(−x(cosh t − 1)) cosh(n t) dt`.
///
/// The integrand is analytic in the strip `|Im t| < π/2`, so the rule converges
/// geometrically in the step; the step shrinks like `x^{-1/2}` to follow the
/// Gaussian width of the peak.
pub fn bessel_k_scaled<T: Real>(order: u32, x: T) -> T {
    let h = lit::<T>(0.1).min(lit::<T>(0.5) / x.sqrt());
    let ord = lit::<T>(order as f64);
    let mut sum = lit::<T>(0.5);
    let mut k = 1usize;
    loop {
        let t = h * count::<T>(k);
        let term = (-(x * (t.cosh() - T::one()))).exp() * (ord * t).cosh();
        sum += term;
        if term < T::epsilon() * lit::<T>(1e-3) * sum {
            break;
        }
        k += 1;
    }
    sum * h
}

fn k0_series<T: Real>(x: T) -> T {
    let y = x * x / lit::<T>(4.0);
    let lead = -((x / lit::<T>(2.0)).ln() + lit::<T>(EULER_GAMMA));
    let mut term = T::one();
    let mut harmonic = T::zero();
    let mut sum = lead;
    let mut k = 1usize;
    loop {
        let kk = count::<T>(k);
        term = term * y / (kk * kk);
        harmonic += T::one() / kk;
        let add = term * (lead + harmonic);
        sum += add;
        if add.abs() < T::epsilon() * sum.abs() * lit::<T>(0.01) || k > 60 {
            break;
        }
        k += 1;
    }
    sum
}

fn k1_series<T: Real>(x: T) -> T {
    // K₁ = 1/x + ln(x/2) I₁ − (x/4) Σ [ψ(k+1) + ψ(k+2)] (x²/4)^k / (k!(k+1)!)
    let y = x * x / lit::<T>(4.0);
    let g = lit::<T>(EULER_GAMMA);
    let half_x = x / lit::<T>(2.0);
    let log = half_x.ln();
    let mut term = T::one();
    let mut psi_k1 = -g;
    let mut psi_k2 = -g + T::one();
    let mut i1 = T::zero();
    let mut rest = T::zero();
    let mut k = 0usize;
    loop {
        if k > 0 {
            let kk = count::<T>(k);
            term = term * y / (kk * (kk + T::one()));
            psi_k1 += T::one() / kk;
            psi_k2 += T::one() / (kk + T::one());
        }
        i1 += term;
        let add = term * (psi_k1 + psi_k2);
        rest += add;
        if k > 0 && term < T::epsilon() * lit::<T>(0.01) * i1 || k > 60 {
            break;
        }
        k += 1;
    }
    T::one() / x + log * half_x * i1 - x / lit::<T>(4.0) * rest
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `J_{1/2}`, `Y_{1/2}` and their derivatives in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfIntegerBessel<T> {
    pub j: Complex<T>,
    pub y: Complex<T>,
    pub jp: Complex<T>,
    pub yp: Complex<T>,
}

pub fn half_integer_reference<T: Real>(z: Complex<T>) -> Result<HalfIntegerBessel<T>> {
    if z.norm() == T::zero() || !(z.re > T::zero()) {
        return Err(Error::Domain(format!("closed forms need Re z > 0, got {z}")));
    }
    let amp = (z * T::PI() / lit::<T>(2.0)).inv().sqrt();
    let (s, c) = (z.sin(), z.cos());
    let half_inv = z.inv() / lit::<T>(2.0);
    Ok(HalfIntegerBessel {
        j: amp * s,
        y: -amp * c,
        jp: amp * (c - s * half_inv),
        yp: amp * (s + c * half_inv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_small_cases() {
        assert_eq!(hankel_symbol(7.0_f64, 0), 1.0);
        assert_eq!(hankel_symbol(0.5_f64, 3), 0.0);
        assert!((hankel_symbol(1.5_f64, 1) - 2.0).abs() < 1e-15);
        // (ν,2) = (ν² − 1/4)(ν² − 9/4)/2
        let nu = 3.2_f64;
        let want = (nu * nu - 0.25) * (nu * nu - 2.25) / 2.0;
        assert!((hankel_symbol(nu, 2) - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn constants() {
        assert!((jjp_constant::<f64>(0) - 4.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!((jjp_constant::<f64>(1) - 24.0 / std::f64::consts::PI).abs() < 1e-14);
        assert!((j2y2_constant::<f64>(1) - 8.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!((j2y2_constant::<f64>(2) - 24.0 / std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn order_half_terminates() {
        assert!(series_terminates(0.5_f64, 1));
        assert!(series_terminates(2.5_f64, 3));
        assert!(!series_terminates(2.5_f64, 2));
        assert!(!series_terminates(2.0_f64, 5));
    }

    #[test]
    fn order_half_closed_forms() {
        let z = Complex::new(5.0_f64, 0.0);
        let a = series_jjp_yyp(z, 0.5, 1).unwrap();
        assert!((a.value.re + 1.0 / (25.0 * std::f64::consts::PI)).abs() < 1e-16);
        let b = series_j2_y2(z, 0.5, 3).unwrap();
        assert!((b.value.re - 2.0 / (5.0 * std::f64::consts::PI)).abs() < 1e-16);
    }

    #[test]
    fn jjp_remainder_example() {
        let v = series_jjp_yyp(Complex::new(100.0_f64, 0.0), 10.0, 1).unwrap();
        let want = 24.0 / std::f64::consts::PI * 100.0 / 1e8;
        assert!((v.remainder_bound - want).abs() < 1e-15 * want);
    }

    #[test]
    fn region_rejected() {
        let z = Complex::new(1.0_f64, 3.0);
        assert!(matches!(series_j2_y2(z, 1.0, 1), Err(Error::Region(_))));
        assert!(matches!(series_j2_y2(Complex::new(10.0, 0.0), 1.2, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn k_values() {
        let k0 = bessel_k(0, 1.0_f64).unwrap().value;
        let k1 = bessel_k(1, 1.0_f64).unwrap().value;
        assert!((k0 - 0.421_024_438_240_708_3).abs() < 1e-15);
        assert!((k1 - 0.601_907_230_197_234_6).abs() < 1e-15);
        let r = bessel_k(1, 500.0_f64).unwrap().value / bessel_k(0, 500.0_f64).unwrap().value;
        assert!((r - 1.0).abs() < 1e-2);
        assert!(bessel_k(0, 0.0_f64).is_err());
        assert!(bessel_k(2, 1.0_f64).is_err());
    }

    #[test]
    fn k_underflow_single_precision() {
        let v = bessel_k(0, 700.0_f32).unwrap();
        assert!(v.underflow);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn half_integer_points() {
        let pi = std::f64::consts::PI;
        let a = half_integer_reference(Complex::new(pi / 2.0, 0.0)).unwrap();
        assert!((a.j.re - 2.0 / pi).abs() < 1e-15);
        let b = half_integer_reference(Complex::new(pi, 0.0)).unwrap();
        assert!((b.y.re - 2f64.sqrt() / pi).abs() < 1e-15);
        assert!(half_integer_reference(Complex::new(0.0_f64, 0.0)).is_err());
    }
}
