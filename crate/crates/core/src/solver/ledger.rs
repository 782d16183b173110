use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Energy components at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySnapshot<T> {
    /// `½|u_t|²`
    pub kinetic: T,
    /// `½|∇u|²`
    pub gradient: T,
    /// `∫ F_n(u)`
    pub source_potential: T,
}

impl<T: Real> EnergySnapshot<T> {
    pub fn total(&self) -> T {
        self.kinetic + self.gradient + self.source_potential
    }

    /// `|u_t|² + |∇u|²`, the quantity bounded by the a-priori envelope.
    pub fn mechanical_sq(&self) -> T {
        (self.kinetic + self.gradient) * T::lit(2.0)
    }
}

/// One row of the energy ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow<T> {
    pub t: T,
    pub kinetic: T,
    pub gradient: T,
    pub source_potential: T,
    /// Cumulative `∫∫ g(u_t) u_t`.
    pub dissipation: T,
    pub identity_residual: T,
    /// `|u_t|^{m+1}_{m+1}` at this instant (not exported).
    pub velocity_power: T,
    /// Cumulative `∫ |u_t|^{m+1}_{m+1} dt` (not exported).
    pub velocity_budget: T,
}

impl<T: Real> LedgerRow<T> {
    pub fn new(t: T, e: EnergySnapshot<T>, dissipation: T, residual: T, velocity_power: T, velocity_budget: T) -> Self {
        LedgerRow {
            t,
            kinetic: e.kinetic,
            gradient: e.gradient,
            source_potential: e.source_potential,
            dissipation,
            identity_residual: residual,
            velocity_power,
            velocity_budget,
        }
    }

    pub fn snapshot(&self) -> EnergySnapshot<T> {
        EnergySnapshot { kinetic: self.kinetic, gradient: self.gradient, source_potential: self.source_potential }
    }
}

pub const LEDGER_HEADER: &str = "t,kinetic,gradient,source_potential,dissipation,identity_residual";

pub fn write_ledger<T: Real, W: Write>(mut w: W, rows: &[LedgerRow<T>]) -> Result<()> {
    writeln!(w, "{LEDGER_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.t.as_f64(),
            r.kinetic.as_f64(),
            r.gradient.as_f64(),
            r.source_potential.as_f64(),
            r.dissipation.as_f64(),
            r.identity_residual.as_f64()
        )?;
    }
    Ok(())
}

/// Reads the exported ledger columns; the velocity-power columns come back as 0.
pub fn read_ledger<T: Real, R: BufRead>(r: R) -> Result<Vec<LedgerRow<T>>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty ledger".into()))??;
    if header.trim() != LEDGER_HEADER {
        return Err(Error::Format(format!("ledger header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let c: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("ledger row {}: {e}", i + 2)))?;
        if c.len() != 6 {
            return Err(Error::Format(format!("ledger row {} has {} columns", i + 2, c.len())));
        }
        rows.push(LedgerRow {
            t: T::lit(c[0]),
            kinetic: T::lit(c[1]),
            gradient: T::lit(c[2]),
            source_potential: T::lit(c[3]),
            dissipation: T::lit(c[4]),
            identity_residual: T::lit(c[5]),
            velocity_power: T::zero(),
            velocity_budget: T::zero(),
        });
    }
    Ok(rows)
}
