//! Generic scalar abstraction: the numeric code works over `f32` or `f64`.

use nalgebra as na;
use num_traits as nt;

/// Real scalar type the numeric core is generic over: `f32` or `f64`.
pub trait Real: Copy + nt::FromPrimitive + na::RealField + Send + Sync {
    const ZERO: Self;
    const ONE: Self;
    const INFINITY: Self;
}

macro_rules! impl_real {
    ($f:ty) => {
        impl Real for $f {
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            const INFINITY: Self = Self::INFINITY;
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Complex number over a [`Real`] scalar.
pub type Cplx<T> = num_complex::Complex<T>;

/// Converts an `f64` literal to the generic scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Unit-modulus complex exponential `exp(j·phase)`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Cplx<T> {
    Cplx::new(phase.cos(), phase.sin())
}

/// Zero complex value.
#[inline]
pub fn czero<T: Real>() -> Cplx<T> {
    Cplx::new(T::ZERO, T::ZERO)
}

/// Modulus of a complex value over a generic scalar.
#[inline]
pub fn cmod<T: Real>(z: Cplx<T>) -> T {
    z.norm_sqr().sqrt()
}
