//! Scalar abstraction shared by the numerical kernels.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point type the kernels are written against (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + LowerExp + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in target float type")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in target float type")
}

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn is_finite_c<T: Real>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// `tan θ` evaluated from whichever of `e^{±2iθ}` has modulus at most one.
pub fn tan_stable<T: Real>(theta: Complex<T>) -> Complex<T> {
    let i = Complex::<T>::i();
    let one = Complex::<T>::new(T::one(), T::zero());
    if theta.im < T::zero() {
        // |e^{-2iθ}| = e^{2 Im θ} < 1
        let e = (-i * theta * lit::<T>(2.0)).exp();
        -i * (one - e) / (one + e)
    } else {
        let e = (i * theta * lit::<T>(2.0)).exp();
        i * (one - e) / (one + e)
    }
}

/// `1 / (1 + e^{-2iθ})` without forming the large exponential.
pub fn half_secant_factor<T: Real>(theta: Complex<T>) -> Complex<T> {
    let i = Complex::<T>::i();
    let one = Complex::<T>::new(T::one(), T::zero());
    let two = lit::<T>(2.0);
    if theta.im < T::zero() {
        one / (one + (-i * theta * two).exp())
    } else {
        let e = (i * theta * two).exp();
        e / (e + one)
    }
}
