//! Source and damping nonlinearities, the truncation cutoff, and the
//! structural assumptions placed on them.

mod assumptions;
mod cutoff;
mod damping;
mod lipschitz;
mod source;

pub use assumptions::{check_assumptions, AfBranch, AssumptionReport, EPSILON_SEARCH_DEPTH};
pub use cutoff::{build_cutoff_eta, CutoffProfile, RampKind};
pub use damping::{eval_damping, solve_damping_update, DampingSpec, DAMPING_MAX_ITER};
pub use lipschitz::{lipschitz_probe, LipschitzSample};
pub use source::{eval_source, Overflow, Sign, SourceSpec, SourcePotential};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Position of `p` relative to the `H¹ ⊂ L⁶` embedding in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
    SuperSupercritical,
}

pub fn classify_exponent<T: Real>(p: T) -> Result<Criticality> {
    if !(p >= T::one() && p < T::lit(6.0)) {
        return Err(Error::Domain(format!("exponent {p} outside [1, 6)")));
    }
    Ok(if p < T::lit(3.0) {
        Criticality::Subcritical
    } else if p == T::lit(3.0) {
        Criticality::Critical
    } else if p < T::lit(5.0) {
        Criticality::Supercritical
    } else {
        Criticality::SuperSupercritical
    })
}
