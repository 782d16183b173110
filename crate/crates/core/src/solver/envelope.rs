use crate::error::{Error, Result};
use crate::grid::norm_lq_weighted;
use crate::scalar::Real;

use super::{Solver, Trajectory};

/// Gronwall-type bound `|u_t(T)|² + |∇u(T)|² ≤ (Y₀ + C̄T) e^{C T}` together
/// with a budget for `∫₀^T |u_t|^{m+1}_{m+1}`.
///
/// The constants are fitted to a trajectory: `ε₁ = l_m/4`, Young's inequality
/// with exponents `m+1` and `(m+1)/m`, and an empirical growth constant
/// `L = sup_t |f_n(u)|^{m̃}_{m̃} / (1 + |∇u|²)`. They are diagnostics, not
/// proof-grade constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriEnvelope<T> {
    pub y0: T,
    pub c_bar: T,
    pub c_exp: T,
    pub epsilon1: T,
    pub growth_fit: T,
    pub horizon: T,
    pub budget_m1: T,
}

impl<T: Real> AprioriEnvelope<T> {
    pub fn fit(traj: &Trajectory<T>, solver: &Solver<T>) -> Result<Self> {
        let m = solver.dmp.m;
        if !(m > T::zero()) {
            return Err(Error::Domain("a-priori envelope needs m > 0".into()));
        }
        let first = traj.states.first().ok_or_else(|| Error::Precondition("empty trajectory".into()))?;
        let l_m = solver.dmp.l_m;
        let eps1 = l_m / T::lit(4.0);
        let m1 = m + T::one();
        let mtilde = m1 / m;
        // Young: ab ≤ ε a^{m+1} + C_ε b^{m̃}
        let c_eps = (eps1 * m1).powf(-T::one() / m) * m / m1;
        let w = solver.weights();
        let mut growth = T::zero();
        for st in &traj.states {
            let f: Vec<T> = st.u.values.iter().map(|&u| solver.src.eval(u)).collect();
            let fq = norm_lq_weighted(&f, w, mtilde)?.powf(mtilde);
            let g2 = solver.energy(st).gradient * T::lit(2.0);
            growth = growth.max(fq / (T::one() + g2));
        }
        let volume: T = w.iter().copied().sum();
        let c_exp = T::lit(2.0) * c_eps * growth;
        let c_bar = T::lit(2.0) * (l_m * volume + c_eps * growth);
        let y0 = solver.energy(first).mechanical_sq();
        let horizon = traj.states.last().map(|s| s.t).unwrap_or(first.t) - first.t;
        let mut env = AprioriEnvelope { y0, c_bar, c_exp, epsilon1: eps1, growth_fit: growth, horizon, budget_m1: T::zero() };
        let half = T::lit(0.5);
        env.budget_m1 =
            (half * y0 + half * c_bar * horizon + half * c_exp * horizon * env.envelope(horizon)) / (l_m - eps1);
        Ok(env)
    }

    /// Bound on `|u_t|² + |∇u|²` after elapsed time `t`.
    pub fn envelope(&self, t: T) -> T {
        (self.y0 + self.c_bar * t) * (self.c_exp * t).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AprioriReport<T> {
    /// Smallest `envelope(t) - (|u_t|² + |∇u|²)` over recorded times.
    pub min_margin: T,
    /// Margin at the first and last recorded time.
    pub first_margin: T,
    pub last_margin: T,
    pub violations: Vec<T>,
    pub budget_used: T,
    pub budget_ok: bool,
}

impl<T: Real> AprioriReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.budget_ok
    }
}

/// Compares every ledger instant against the envelope.
pub fn check_apriori<T: Real>(traj: &Trajectory<T>, env: &AprioriEnvelope<T>) -> Result<AprioriReport<T>> {
    if !traj.outcome.is_completed() {
        return Err(Error::Precondition("a-priori check needs a completed trajectory".into()));
    }
    let t0 = traj.ledger.first().map(|r| r.t).unwrap_or(T::zero());
    let mut min_margin = T::infinity();
    let mut violations = Vec::new();
    let mut margins = Vec::with_capacity(traj.ledger.len());
    for row in &traj.ledger {
        let lhs = row.snapshot().mechanical_sq();
        let margin = env.envelope(row.t - t0) - lhs;
        margins.push(margin);
        min_margin = min_margin.min(margin);
        if margin < T::zero() {
            violations.push(row.t);
        }
    }
    let budget_used = traj.ledger.last().map(|r| r.velocity_budget).unwrap_or(T::zero());
    Ok(AprioriReport {
        min_margin,
        first_margin: margins.first().copied().unwrap_or(T::zero()),
        last_margin: margins.last().copied().unwrap_or(T::zero()),
        violations,
        budget_ok: budget_used <= env.budget_m1,
        budget_used,
    })
}
