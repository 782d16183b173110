use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::smooth::{smoothstep5, smoothstep5_d1, SMOOTHSTEP5_MAX_SLOPE};

/// Shape of the ramp on `[n, 2n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RampKind {
    /// `1 - S((|s| - n) / n)` with the quintic smoothstep `S`.
    QuinticSmoothstep,
}

/// Even cutoff `η`: 1 on `[-n, n]`, 0 outside `(-2n, 2n)`, `|η'| ≤ C/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffProfile<T> {
    pub level: T,
    pub transition: RampKind,
    /// `C` in `|η'| ≤ C/n`.
    pub deriv_bound: T,
}

pub fn build_cutoff_eta<T: Real>(n: T) -> Result<CutoffProfile<T>> {
    if !(n >= T::one()) || !n.is_finite() {
        return Err(Error::Domain(format!("cutoff level must be >= 1, got {n}")));
    }
    Ok(CutoffProfile {
        level: n,
        transition: RampKind::QuinticSmoothstep,
        deriv_bound: T::lit(SMOOTHSTEP5_MAX_SLOPE),
    })
}

impl<T: Real> CutoffProfile<T> {
    #[inline]
    pub fn eval(&self, s: T) -> T {
        let a = s.abs();
        let n = self.level;
        if a <= n {
            T::one()
        } else if a >= n + n {
            T::zero()
        } else {
            match self.transition {
                RampKind::QuinticSmoothstep => T::one() - smoothstep5((a - n) / n),
            }
        }
    }

    pub fn derivative(&self, s: T) -> T {
        let a = s.abs();
        let n = self.level;
        if a <= n || a >= n + n {
            return T::zero();
        }
        let sg = if s < T::zero() { -T::one() } else { T::one() };
        match self.transition {
            RampKind::QuinticSmoothstep => -sg * smoothstep5_d1((a - n) / n) / n,
        }
    }
}
