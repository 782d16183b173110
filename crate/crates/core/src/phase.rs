//! Survival versus blow-up over the `(p, m)` exponent plane at fixed data.
//!
//! A cell is labelled by a single 1D run with a focusing source. Survival is
//! censored at the protocol horizon; blow-up means the amplitude escaped the
//! solver threshold.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::data::Profile;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::nonlinearity::{DampingSpec, Sign, SourceSpec};
use crate::scalar::Real;
use crate::solver::{solve_on_patch, Observers, Outcome, State};

pub const PHASE_CSV_HEADER: &str = "p,m,lambda,outcome,t_star";

pub const DEFAULT_P: [f64; 5] = [1.5, 2.5, 3.5, 4.5, 5.5];
pub const DEFAULT_M: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];
pub const DEFAULT_LAMBDAS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellOutcome<T> {
    Survived(T),
    BlewUp(T),
    Failed,
}

impl<T: Real> CellOutcome<T> {
    pub fn label(&self) -> &'static str {
        match self {
            CellOutcome::Survived(_) => "survived",
            CellOutcome::BlewUp(_) => "blew_up",
            CellOutcome::Failed => "failed",
        }
    }

    pub fn blowup_time(&self) -> Option<T> {
        match *self {
            CellOutcome::BlewUp(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCell<T> {
    pub p: T,
    pub m: T,
    pub data_scale: T,
    pub outcome: CellOutcome<T>,
}

/// Fixed numerical setup shared by every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol<T> {
    /// Half-width of the interval `[-L, L]`.
    pub half_width: T,
    pub h: T,
    pub courant: T,
    /// Source coefficient; the sign is always focusing.
    pub source_coeff: T,
    pub damping_coeff: T,
    /// Centred bump of unit amplitude before scaling by `λ`.
    pub bump_radius: T,
    /// Horizon in crossing times of the interval.
    pub crossings: T,
}

impl<T: Real> Default for Protocol<T> {
    fn default() -> Self {
        Protocol {
            half_width: T::one(),
            h: T::lit(1.0 / 32.0),
            courant: T::lit(0.5),
            source_coeff: T::one(),
            damping_coeff: T::one(),
            bump_radius: T::lit(0.5),
            crossings: T::lit(20.0),
        }
    }
}

impl<T: Real> Protocol<T> {
    pub fn grid(&self) -> Result<GridSpec<T>> {
        GridSpec::line(T::zero(), self.half_width, self.h, self.h * self.courant)
    }

    pub fn horizon(&self) -> T {
        self.crossings * (self.half_width + self.half_width)
    }

    pub fn data(&self, lambda: T) -> Profile<T> {
        Profile::bump(lambda, self.bump_radius, [T::zero(); 3])
    }

    pub fn descriptor(&self) -> String {
        format!(
            "line [-{L}, {L}], h = {h}, dt = {dt}, T = {t}, u0 = λ·bump(radius {r}), u1 = 0, f = -{c}|u|^(p-1)u, g = {a}|s|^(m-1)s",
            L = self.half_width,
            h = self.h,
            dt = self.h * self.courant,
            t = self.horizon(),
            r = self.bump_radius,
            c = self.source_coeff,
            a = self.damping_coeff,
        )
    }

    /// One cell: a single run to the protocol horizon.
    pub fn run_cell(&self, p: T, m: T, lambda: T) -> PhaseCell<T> {
        let outcome = self.try_cell(p, m, lambda).unwrap_or(CellOutcome::Failed);
        PhaseCell { p, m, data_scale: lambda, outcome }
    }

    fn try_cell(&self, p: T, m: T, lambda: T) -> Result<CellOutcome<T>> {
        let grid = self.grid()?;
        let src = SourceSpec::new(p, self.source_coeff, Sign::Minus)?;
        let dmp = DampingSpec::power(m, self.damping_coeff)?;
        let mut init = State::rest(grid);
        init.u = self.data(lambda).sample(&grid)?;
        let horizon = self.horizon();
        let steps = (horizon / grid.dt).round().to_usize().unwrap_or(usize::MAX);
        let traj = solve_on_patch(&init, &grid, &src, &dmp, horizon, &Observers::every(steps.max(1)))?;
        Ok(match traj.outcome {
            Outcome::Completed(t) => CellOutcome::Survived(t),
            Outcome::BlewUp(t) => CellOutcome::BlewUp(t),
            Outcome::NumericalFailure(_) => CellOutcome::Failed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram<T> {
    pub p_values: Vec<T>,
    pub m_values: Vec<T>,
    pub lambda: T,
    /// Row-major in `p`, then `m`.
    pub cells: Vec<PhaseCell<T>>,
    pub protocol: Protocol<T>,
}

impl<T: Real> PhaseDiagram<T> {
    pub fn cell(&self, ip: usize, im: usize) -> &PhaseCell<T> {
        &self.cells[ip * self.m_values.len() + im]
    }

    /// Fraction of cells with `m ≥ p` that survived and of cells with `m < p`
    /// that blew up.
    pub fn dichotomy(&self) -> Dichotomy {
        let mut d = Dichotomy::default();
        for c in &self.cells {
            if c.m >= c.p {
                d.strong_total += 1;
                if matches!(c.outcome, CellOutcome::Survived(_)) {
                    d.strong_survived += 1;
                }
            } else {
                d.weak_total += 1;
                if matches!(c.outcome, CellOutcome::BlewUp(_)) {
                    d.weak_blew_up += 1;
                }
            }
        }
        d
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(PHASE_CSV_HEADER);
        s.push('\n');
        for c in &self.cells {
            let t = c.outcome.blowup_time().map(|t| format!("{t}")).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{}", c.p, c.m, c.data_scale, c.outcome.label(), t);
        }
        s
    }

    /// Blocks of `p m code` separated by blank lines, for `splot ... with image`:
    /// 1 survived, -1 blew up, 0 failed.
    pub fn to_gnuplot(&self) -> String {
        let mut s = format!("# {}\n# lambda = {}\n# p m code\n", self.protocol.descriptor(), self.lambda);
        for (ip, &p) in self.p_values.iter().enumerate() {
            for (im, &m) in self.m_values.iter().enumerate() {
                let code = match self.cell(ip, im).outcome {
                    CellOutcome::Survived(_) => 1,
                    CellOutcome::BlewUp(_) => -1,
                    CellOutcome::Failed => 0,
                };
                let _ = writeln!(s, "{p} {m} {code}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Dichotomy {
    pub strong_total: usize,
    pub strong_survived: usize,
    pub weak_total: usize,
    pub weak_blew_up: usize,
}

impl Dichotomy {
    pub fn survived_fraction(&self) -> f64 {
        if self.strong_total == 0 {
            1.0
        } else {
            self.strong_survived as f64 / self.strong_total as f64
        }
    }

    pub fn blew_up_fraction(&self) -> f64 {
        if self.weak_total == 0 {
            1.0
        } else {
            self.weak_blew_up as f64 / self.weak_total as f64
        }
    }
}

/// Runs every `(p, m)` cell concurrently. Failures are recorded per cell.
pub fn sweep<T: Real>(p_values: &[T], m_values: &[T], lambda: T, protocol: &Protocol<T>) -> Result<PhaseDiagram<T>> {
    if p_values.is_empty() || m_values.is_empty() {
        return Err(Error::Precondition("sweep needs at least one p and one m".into()));
    }
    if lambda < T::zero() {
        return Err(Error::Domain("data scale must be nonnegative".into()));
    }
    protocol.grid()?;
    let pairs: Vec<(T, T)> = p_values.iter().flat_map(|&p| m_values.iter().map(move |&m| (p, m))).collect();
    let cells = pairs.par_iter().map(|&(p, m)| protocol.run_cell(p, m, lambda)).collect();
    Ok(PhaseDiagram {
        p_values: p_values.to_vec(),
        m_values: m_values.to_vec(),
        lambda,
        cells,
        protocol: *protocol,
    })
}

/// `t*` for each data scale at fixed `m < p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable<T> {
    pub p: T,
    pub m: T,
    pub rows: Vec<PhaseCell<T>>,
}

impl<T: Real> ScalingTable<T> {
    /// Blow-up times never increase with `λ` among the cells that blew up.
    pub fn is_monotone(&self) -> bool {
        let times: Vec<T> = self.rows.iter().filter_map(|c| c.outcome.blowup_time()).collect();
        times.windows(2).all(|w| w[1] <= w[0])
    }
}

pub fn blowup_time_scaling<T: Real>(p: T, m: T, lambdas: &[T], protocol: &Protocol<T>) -> Result<ScalingTable<T>> {
    if m >= p {
        return Err(Error::Precondition("blow-up scaling needs m < p".into()));
    }
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let rows = sorted.par_iter().map(|&l| protocol.run_cell(p, m, l)).collect();
    Ok(ScalingTable { p, m, rows })
}
