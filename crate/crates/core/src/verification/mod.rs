//! Independent checks of the properties the construction relies on.

mod convergence;
mod speed;
mod weak;

pub use convergence::{fn_convergence_check, DecayRow};
pub use speed::{
    domain_of_dependence_check, finite_speed_check, write_speed_csv, SpeedReport, MACHINE_TOLERANCE,
    SPEED_CSV_HEADER,
};
pub use weak::{corrupt, weak_residual, TestBasis, TestFunction, VariationalResidual};

/// Outcome of one named check, as recorded in run manifests.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        CheckResult { name: name.to_string(), value, tolerance, passed: value <= tolerance }
    }
}
