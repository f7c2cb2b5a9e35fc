//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex-valued
//! integrands on a finite interval.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: Complex<T>,
    pub abs_err: T,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
    pub max_intervals: usize,
}

struct Piece<T> {
    a: T,
    b: T,
    value: Complex<T>,
    err: T,
}

fn kronrod<T: Real, F: FnMut(T) -> Complex<T>>(f: &mut F, a: T, b: T) -> (Complex<T>, T) {
    let half = lit::<T>(0.5);
    let c = (a + b) * half;
    let r = (b - a) * half;
    let fc = f(c);
    let mut k = fc * lit::<T>(WGK[7]);
    let mut g = fc * lit::<T>(WG[3]);
    for i in 0..7 {
        let dx = r * lit::<T>(XGK[i]);
        let s = f(c - dx) + f(c + dx);
        k += s * lit::<T>(WGK[i]);
        if i % 2 == 1 {
            g += s * lit::<T>(WG[i / 2]);
        }
    }
    let value = k * r;
    let err = ((k - g) * r).norm();
    (value, err)
}

/// Integrates `f` over `[a, b]`, bisecting the worst interval until the summed
/// error estimate meets `max(abs, rel·|I|)`.
pub fn integrate<T, F>(mut f: F, a: T, b: T, tol: Tolerance<T>) -> Result<Quadrature<T>>
where
    T: Real,
    F: FnMut(T) -> Complex<T>,
{
    let (v0, e0) = kronrod(&mut f, a, b);
    let mut pieces = vec![Piece { a, b, value: v0, err: e0 }];
    let mut evaluations = 15;
    loop {
        let total: Complex<T> = pieces.iter().fold(Complex::new(T::zero(), T::zero()), |s, p| s + p.value);
        let err: T = pieces.iter().fold(T::zero(), |s, p| s + p.err);
        if !(total.re.is_finite() && total.im.is_finite()) {
            return Err(Error::Numerical("non-finite integrand value".into()));
        }
        if err <= tol.abs.max(tol.rel * total.norm()) {
            return Ok(Quadrature { value: total, abs_err: err, evaluations });
        }
        if pieces.len() >= tol.max_intervals {
            return Err(Error::Numerical(format!(
                "quadrature did not converge: error {err:e} after {} intervals",
                pieces.len()
            )));
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = pieces.swap_remove(worst);
        let mid = (p.a + p.b) * lit::<T>(0.5);
        let (vl, el) = kronrod(&mut f, p.a, mid);
        let (vr, er) = kronrod(&mut f, mid, p.b);
        evaluations += 30;
        pieces.push(Piece { a: p.a, b: mid, value: vl, err: el });
        pieces.push(Piece { a: mid, b: p.b, value: vr, err: er });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance<f64> {
        Tolerance { abs: 1e-14, rel: 1e-13, max_intervals: 200 }
    }

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x: f64| Complex::new(x.powi(5), 0.0), 0.0, 2.0, tol()).unwrap();
        assert!((q.value.re - 64.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_complex() {
        // ∫₀^π e^{ix} dx = 2i
        let q = integrate(|x: f64| Complex::new(0.0, x).exp(), 0.0, std::f64::consts::PI, tol()).unwrap();
        assert!(q.value.re.abs() < 1e-13);
        assert!((q.value.im - 2.0).abs() < 1e-13);
    }

    #[test]
    fn log_singularity() {
        let q = integrate(|x: f64| Complex::new(x.ln(), 0.0), 0.0, 1.0, tol()).unwrap();
        assert!((q.value.re + 1.0).abs() < 1e-12);
    }
}
