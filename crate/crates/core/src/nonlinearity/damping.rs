use crate::error::{Error, Result};
use crate::scalar::Real;

/// Monotone damping `g`. The shipped model is the pure power
/// `g(s) = a|s|^{m-1}s`, for which `l_m = L_m = a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingSpec<T> {
    pub m: T,
    pub l_m: T,
    pub upper_l_m: T,
}

impl<T: Real> DampingSpec<T> {
    pub fn power(m: T, a: T) -> Result<Self> {
        if !(m >= T::zero()) || !m.is_finite() {
            return Err(Error::Domain(format!("damping exponent must be >= 0, got {m}")));
        }
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::Domain(format!("damping coefficient must be > 0, got {a}")));
        }
        Ok(DampingSpec { m, l_m: a, upper_l_m: a })
    }

    /// No damping (`g ≡ 0`), for linear-wave reference runs.
    pub fn zero() -> Self {
        DampingSpec { m: T::one(), l_m: T::zero(), upper_l_m: T::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.l_m == T::zero() && self.upper_l_m == T::zero()
    }

    #[inline]
    pub fn coeff(&self) -> T {
        self.l_m
    }

    #[inline]
    pub fn is_linear(&self) -> bool {
        self.m == T::one()
    }

    /// `a|s|^{m-1}s`.
    #[inline]
    pub fn eval(&self, s: T) -> T {
        if s == T::zero() {
            return T::zero();
        }
        if self.m == T::one() {
            return self.l_m * s;
        }
        self.l_m * s.abs().powf(self.m) * s.signum()
    }

    /// `g'(s) = a m |s|^{m-1}`; infinite at 0 when `m < 1`.
    #[inline]
    pub fn derivative(&self, s: T) -> T {
        if self.m == T::one() {
            return self.l_m;
        }
        if self.m == T::zero() {
            return T::zero();
        }
        self.l_m * self.m * s.abs().powf(self.m - T::one())
    }
}

pub fn eval_damping<T: Real>(dmp: &DampingSpec<T>, s: T) -> T {
    dmp.eval(s)
}

pub const DAMPING_MAX_ITER: usize = 200;

/// Solves `v + dt·g(v) = rhs` for the unique `v`.
///
/// The root lies between 0 and `rhs`, and `|v| ≤ (|rhs|/(dt·a))^{1/m}` narrows
/// the bracket further for large `rhs`. Newton steps are taken when they stay inside the bracket, bisection otherwise. `m = 0` is
/// treated through the sign graph, so `|rhs| ≤ dt·a` maps to 0.
pub fn solve_damping_update<T: Real>(v_guess: T, rhs: T, dt: T, dmp: &DampingSpec<T>) -> Result<T> {
    if !(dt > T::zero()) {
        return Err(Error::Domain(format!("damping update needs dt > 0, got {dt}")));
    }
    if !rhs.is_finite() {
        return Err(Error::Numerical(format!("non-finite right-hand side {rhs}")));
    }
    if rhs == T::zero() {
        return Ok(T::zero());
    }
    let a = dmp.coeff();
    if dmp.m == T::one() {
        return Ok(rhs / (T::one() + dt * a));
    }
    if dmp.m == T::zero() {
        let k = dt * a;
        return Ok(if rhs.abs() <= k { T::zero() } else { rhs - k * rhs.signum() });
    }

    let tol = T::solve_tol() * rhs.abs().max(T::one());
    let resid = |v: T| v + dt * dmp.eval(v) - rhs;
    // the root also satisfies dt a |v|^m <= |rhs|
    let cap = rhs.abs().min((rhs.abs() / (dt * a)).powf(T::one() / dmp.m));
    let (mut lo, mut hi) = if rhs > T::zero() { (T::zero(), cap) } else { (-cap, T::zero()) };
    let mut v = if v_guess > lo && v_guess < hi { v_guess } else { (lo + hi) * T::lit(0.5) };
    for _ in 0..DAMPING_MAX_ITER {
        let r = resid(v);
        if r.abs() <= tol {
            return Ok(v);
        }
        if r > T::zero() {
            hi = v;
        } else {
            lo = v;
        }
        let slope = T::one() + dt * dmp.derivative(v);
        let newton = v - r / slope;
        let next = if slope.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) * T::lit(0.5)
        };
        if next == v || hi - lo <= T::epsilon() * hi.abs().max(lo.abs()) {
            // bracket exhausted at machine resolution
            let best = if resid(lo).abs() < resid(hi).abs() { lo } else { hi };
            let best = if resid(next).abs() < resid(best).abs() { next } else { best };
            if resid(best).abs() <= T::lit(1e3) * tol {
                return Ok(best);
            }
            break;
        }
        v = next;
    }
    Err(Error::Numerical(format!(
        "damping update did not converge (rhs = {rhs}, dt = {dt}, m = {})",
        dmp.m
    )))
}
