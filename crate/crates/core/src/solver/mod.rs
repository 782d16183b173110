//! Dirichlet problem on one patch with the truncated source: time stepping,
//! energy ledger, a-priori envelope and blow-up detection.

mod envelope;
mod ledger;
mod scheme;

pub use envelope::{check_apriori, AprioriEnvelope, AprioriReport};
pub use ledger::{read_ledger, write_ledger, EnergySnapshot, LedgerRow, LEDGER_HEADER};
pub use scheme::{energy, solve_on_patch, step, Solver, StepFailure, BLOWUP_THRESHOLD};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::scalar::Real;

/// Displacement and velocity at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub u: Field<T>,
    pub v: Field<T>,
    pub t: T,
}

impl<T: Real> State<T> {
    pub fn new(u: Field<T>, v: Field<T>, t: T) -> Result<Self> {
        if u.grid != v.grid {
            return Err(Error::Precondition("u and u_t must share a grid".into()));
        }
        Ok(State { u, v, t })
    }

    pub fn rest(grid: GridSpec<T>) -> Self {
        State { u: Field::zeros(grid), v: Field::zeros(grid), t: T::zero() }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.u.grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome<T> {
    Completed(T),
    BlewUp(T),
    NumericalFailure(T),
}

impl<T: Real> Outcome<T> {
    pub fn is_completed(&self) -> bool {
        matches!(self, Outcome::Completed(_))
    }

    pub fn time(&self) -> T {
        match *self {
            Outcome::Completed(t) | Outcome::BlewUp(t) | Outcome::NumericalFailure(t) => t,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Completed(_) => "completed",
            Outcome::BlewUp(_) => "blew_up",
            Outcome::NumericalFailure(_) => "numerical_failure",
        }
    }
}

/// What a run keeps besides the per-step ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observers {
    /// Keep every `snapshot_stride`-th state (plus the first and last).
    pub snapshot_stride: usize,
}

impl Default for Observers {
    fn default() -> Self {
        Observers { snapshot_stride: 1 }
    }
}

impl Observers {
    pub fn every(stride: usize) -> Self {
        Observers { snapshot_stride: stride.max(1) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub states: Vec<State<T>>,
    pub ledger: Vec<LedgerRow<T>>,
    pub outcome: Outcome<T>,
    pub dt: T,
    pub stride: usize,
}

impl<T: Real> Trajectory<T> {
    pub fn initial(&self) -> &State<T> {
        &self.states[0]
    }

    pub fn last(&self) -> &State<T> {
        self.states.last().expect("trajectory holds at least its initial state")
    }

    /// Largest energy-identity residual in the ledger.
    pub fn max_identity_residual(&self) -> T {
        self.ledger.iter().fold(T::zero(), |m, r| m.max(r.identity_residual))
    }

    /// Recorded state at step `k`, if it was kept.
    pub fn state_at_step(&self, k: usize) -> Option<&State<T>> {
        let t0 = self.states[0].t;
        let target = t0 + T::from_usize(k).unwrap() * self.dt;
        let tol = self.dt * T::lit(1e-6);
        self.states.iter().find(|s| (s.t - target).abs() <= tol)
    }

    /// All recorded states are one step apart.
    pub fn is_dense(&self) -> bool {
        let tol = self.dt * T::lit(1e-6);
        self.states.windows(2).all(|w| (w[1].t - w[0].t - self.dt).abs() <= tol)
    }
}
