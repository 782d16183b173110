use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::scalar::Real;

use super::cutoff::{build_cutoff_eta, CutoffProfile};

/// Sign of the source as it enters `u_tt - Δu + f(u) + g(u_t) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `+1`: the source term is dissipative.
    Plus,
    /// `-1`: focusing; pumps energy and can drive blow-up.
    Minus,
}

impl Sign {
    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }

    pub fn from_int(s: i64) -> Option<Sign> {
        match s {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

/// `f(s) = sign·coeff·|s|^{p-1}s`, optionally multiplied by the cutoff `η_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec<T> {
    pub p: T,
    pub coeff: T,
    pub sign: Sign,
    pub truncation: Option<CutoffProfile<T>>,
}

/// Raised when a finite argument overflows the power law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overflow;

impl<T: Real> SourceSpec<T> {
    pub fn new(p: T, coeff: T, sign: Sign) -> Result<Self> {
        if !(p >= T::one() && p < T::lit(6.0)) {
            return Err(Error::Domain(format!("source exponent must lie in [1, 6), got {p}")));
        }
        if !(coeff > T::zero()) || !coeff.is_finite() {
            return Err(Error::Domain(format!("source coefficient must be > 0, got {coeff}")));
        }
        Ok(SourceSpec { p, coeff, sign, truncation: None })
    }

    /// `f = 0`, used for linear wave runs.
    pub fn zero() -> Self {
        SourceSpec { p: T::one(), coeff: T::zero(), sign: Sign::Plus, truncation: None }
    }

    pub fn is_zero(&self) -> bool {
        self.coeff == T::zero()
    }

    pub fn truncated(mut self, n: T) -> Result<Self> {
        self.truncation = Some(build_cutoff_eta(n)?);
        Ok(self)
    }

    pub fn untruncated(mut self) -> Self {
        self.truncation = None;
        self
    }

    pub fn level(&self) -> Option<T> {
        self.truncation.map(|t| t.level)
    }

    /// `f(s)` without the cutoff.
    #[inline]
    pub fn eval_untruncated(&self, s: T) -> T {
        if self.coeff == T::zero() || s == T::zero() {
            return T::zero();
        }
        let mag = if self.p == T::one() {
            s
        } else if self.p == T::lit(2.0) {
            s.abs() * s
        } else if self.p == T::lit(3.0) {
            s * s * s
        } else {
            s.abs().powf(self.p - T::one()) * s
        };
        self.sign.value::<T>() * self.coeff * mag
    }

    /// `f_n(s)`, or `f(s)` when untruncated. May return ±∞ on overflow.
    #[inline]
    pub fn eval(&self, s: T) -> T {
        match &self.truncation {
            Some(eta) => {
                let e = eta.eval(s);
                if e == T::zero() {
                    T::zero()
                } else if e == T::one() {
                    self.eval_untruncated(s)
                } else {
                    self.eval_untruncated(s) * e
                }
            }
            None => self.eval_untruncated(s),
        }
    }

    /// Like [`eval`](Self::eval) but flags overflow of a finite argument.
    #[inline]
    pub fn try_eval(&self, s: T) -> std::result::Result<T, Overflow> {
        let v = self.eval(s);
        if v.is_finite() || !s.is_finite() {
            Ok(v)
        } else {
            Err(Overflow)
        }
    }

    /// Antiderivative of `f_n` vanishing at 0, with cached ramp constants.
    pub fn potential(&self) -> SourcePotential<T> {
        SourcePotential::new(*self)
    }
}

pub fn eval_source<T: Real>(src: &SourceSpec<T>, s: T) -> T {
    src.eval(s)
}

/// `F_n(s) = ∫_0^s f_n`. Closed form on the plateau, 64-point Gauss–Legendre
/// on the ramp `[n, 2n]`, constant beyond `2n`.
#[derive(Debug, Clone, Copy)]
pub struct SourcePotential<T> {
    src: SourceSpec<T>,
    at_level: T,
    at_tail: T,
}

impl<T: Real> SourcePotential<T> {
    fn new(src: SourceSpec<T>) -> Self {
        let mut pot = SourcePotential { src, at_level: T::zero(), at_tail: T::zero() };
        if let Some(eta) = src.truncation {
            let n = eta.level;
            pot.at_level = pot.plateau(n);
            pot.at_tail = pot.at_level + integrate(n, n + n, |t| src.eval(t));
        }
        pot
    }

    #[inline]
    fn plateau(&self, a: T) -> T {
        let p1 = self.src.p + T::one();
        self.src.sign.value::<T>() * self.src.coeff * a.powf(p1) / p1
    }

    /// `F_n(s)`; even in `s`.
    pub fn eval(&self, s: T) -> T {
        if self.src.coeff == T::zero() {
            return T::zero();
        }
        let a = s.abs();
        match self.src.truncation {
            None => self.plateau(a),
            Some(eta) => {
                let n = eta.level;
                if a <= n {
                    self.plateau(a)
                } else if a >= n + n {
                    self.at_tail
                } else {
                    let src = self.src;
                    self.at_level + integrate(n, a, |t| src.eval(t))
                }
            }
        }
    }
}
