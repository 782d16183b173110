//! Quintic smoothstep and the compact window built from it.

use crate::scalar::Real;

/// `6x^5 - 15x^4 + 10x^3` on [0, 1], clamped outside.
#[inline]
pub fn smoothstep5<T: Real>(x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    x * x * x * (x * (x * T::lit(6.0) - T::lit(15.0)) + T::lit(10.0))
}

#[inline]
pub fn smoothstep5_d1<T: Real>(x: T) -> T {
    if x <= T::zero() || x >= T::one() {
        return T::zero();
    }
    let y = x * (T::one() - x);
    T::lit(30.0) * y * y
}

#[inline]
pub fn smoothstep5_d2<T: Real>(x: T) -> T {
    if x <= T::zero() || x >= T::one() {
        return T::zero();
    }
    // 60x(1-x)(1-2x)
    T::lit(60.0) * x * (T::one() - x) * (T::one() - T::lit(2.0) * x)
}

/// Maximum of the smoothstep derivative on [0, 1], attained at x = 1/2.
pub const SMOOTHSTEP5_MAX_SLOPE: f64 = 15.0 / 8.0;

/// C² bump `S(1 - |s|)`, supported on [-1, 1] with value 1 at the origin.
#[inline]
pub fn window<T: Real>(s: T) -> T {
    smoothstep5(T::one() - s.abs())
}

#[inline]
pub fn window_d1<T: Real>(s: T) -> T {
    let sg = if s < T::zero() { -T::one() } else { T::one() };
    -sg * smoothstep5_d1(T::one() - s.abs())
}

#[inline]
pub fn window_d2<T: Real>(s: T) -> T {
    smoothstep5_d2(T::one() - s.abs())
}
