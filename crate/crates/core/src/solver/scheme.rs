use crate::error::{Error, Result};
use crate::grid::{Field, Geometry, GridSpec};
use crate::nonlinearity::{solve_damping_update, DampingSpec, SourcePotential, SourceSpec};
use crate::scalar::Real;

use super::ledger::{EnergySnapshot, LedgerRow};
use super::{Observers, Outcome, State, Trajectory};

/// Amplitude above which a run is declared blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e8;

/// Why a step could not produce a finite state.
#[derive(Debug, Clone, PartialEq)]
pub enum StepFailure<T> {
    /// Amplitude escaped, or the power law overflowed; carries the offending state.
    BlowUp(Box<State<T>>),
    Numerical(String),
}

/// Leapfrog integrator for `u_tt - Δu + f_n(u) + g(u_t) = 0` on one grid.
///
/// One step, written in velocity form with `w ≈ u_t` at integer times:
///
/// ```text
/// v½   = w + dt/2 (Δu - f(u) - g(w))
/// u'   = u + dt v½
/// w'   solves  w' + dt/2 g(w') = v½ + dt/2 (Δu' - f(u'))
/// ```
///
/// This is the three-level leapfrog with the damping averaged over the two
/// half-step velocities. The nonlinear solve is pointwise, maps 0 to 0, and
/// every node only reads its stencil neighbours, so data move at most one
/// cell per step.
#[derive(Debug, Clone)]
pub struct Solver<T> {
    pub grid: GridSpec<T>,
    pub src: SourceSpec<T>,
    pub dmp: DampingSpec<T>,
    pub blowup_threshold: T,
    weights: Vec<T>,
    free: Vec<bool>,
    potential: SourcePotential<T>,
}

impl<T: Real> Solver<T> {
    pub fn new(grid: GridSpec<T>, src: SourceSpec<T>, dmp: DampingSpec<T>) -> Result<Self> {
        let free = (0..grid.len())
            .map(|n| !grid.is_pinned(n) && !(grid.geometry == Geometry::Radial3D && n == 0))
            .collect();
        Ok(Solver {
            weights: grid.weights(),
            potential: src.potential(),
            free,
            grid,
            src,
            dmp,
            blowup_threshold: T::lit(BLOWUP_THRESHOLD),
        })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    fn laplacian(&self, u: &[T], out: &mut [T]) {
        let g = &self.grid;
        let inv_h2 = T::one() / (g.h * g.h);
        let two = T::lit(2.0);
        match g.geometry {
            Geometry::Line1D => {
                for i in 0..u.len() {
                    out[i] = if self.free[i] { (u[i - 1] - two * u[i] + u[i + 1]) * inv_h2 } else { T::zero() };
                }
            }
            Geometry::Radial3D => {
                // (ρu)_ρρ / ρ with ρ_i = i h
                out[0] = T::zero();
                for i in 1..u.len() {
                    out[i] = if self.free[i] {
                        let fi = T::from_usize(i).unwrap();
                        ((fi + T::one()) * u[i + 1] - two * fi * u[i] + (fi - T::one()) * u[i - 1]) * inv_h2 / fi
                    } else {
                        T::zero()
                    };
                }
            }
            Geometry::Box3D => {
                let sx = g.dims[1] * g.dims[2];
                let sy = g.dims[2];
                let six = T::lit(6.0);
                for n in 0..u.len() {
                    out[n] = if self.free[n] {
                        (u[n - sx] + u[n + sx] + u[n - sy] + u[n + sy] + u[n - 1] + u[n + 1] - six * u[n]) * inv_h2
                    } else {
                        T::zero()
                    };
                }
            }
        }
    }

    /// Regularity at the centre of a radial grid: `u(ρ) ≈ a + bρ²`.
    fn radial_center(&self, x: &mut [T]) {
        if self.grid.geometry == Geometry::Radial3D {
            x[0] = (T::lit(4.0) * x[1] - x[2]) / T::lit(3.0);
        }
    }

    /// Advances one time step.
    pub fn step(&self, st: &State<T>) -> std::result::Result<State<T>, StepFailure<T>> {
        let len = self.grid.len();
        let dt = self.grid.dt;
        let half = dt * T::lit(0.5);
        let u = &st.u.values;
        let w = &st.v.values;
        let mut lap = vec![T::zero(); len];
        let mut u_next = vec![T::zero(); len];
        let mut v_half = vec![T::zero(); len];
        let mut overflow = false;

        self.laplacian(u, &mut lap);
        for n in 0..len {
            if !self.free[n] {
                continue;
            }
            let f = self.src.eval(u[n]);
            overflow |= !f.is_finite() && u[n].is_finite();
            let acc = lap[n] - f - self.dmp.eval(w[n]);
            v_half[n] = w[n] + half * acc;
            u_next[n] = u[n] + dt * v_half[n];
        }
        self.radial_center(&mut u_next);

        self.laplacian(&u_next, &mut lap);
        let mut w_next = vec![T::zero(); len];
        let mut solve_error = None;
        for n in 0..len {
            if !self.free[n] {
                continue;
            }
            let f = self.src.eval(u_next[n]);
            overflow |= !f.is_finite() && u_next[n].is_finite();
            let rhs = v_half[n] + half * (lap[n] - f);
            if !rhs.is_finite() {
                w_next[n] = rhs;
                continue;
            }
            match solve_damping_update(w[n], rhs, half, &self.dmp) {
                Ok(v) => w_next[n] = v,
                Err(e) => {
                    w_next[n] = T::nan();
                    solve_error.get_or_insert(e.to_string());
                }
            }
        }
        self.radial_center(&mut w_next);

        let next = State {
            u: Field { grid: self.grid, values: u_next },
            v: Field { grid: self.grid, values: w_next },
            t: st.t + dt,
        };
        let mut nan = false;
        let mut peak = T::zero();
        for &x in &next.u.values {
            if x.is_nan() {
                nan = true;
            } else {
                peak = peak.max(x.abs());
            }
        }
        let inf_v = next.v.values.iter().any(|x| x.is_infinite());
        if overflow || peak > self.blowup_threshold || (inf_v && !nan) {
            return Err(StepFailure::BlowUp(Box::new(next)));
        }
        if nan || next.v.values.iter().any(|x| x.is_nan()) {
            return Err(StepFailure::Numerical(
                solve_error.unwrap_or_else(|| "non-finite value in state".into()),
            ));
        }
        Ok(next)
    }

    /// Instantaneous energy components of a state.
    pub fn energy(&self, st: &State<T>) -> EnergySnapshot<T> {
        let half = T::lit(0.5);
        let w = &self.weights;
        let kinetic = half * st.v.values.iter().zip(w).fold(T::zero(), |a, (&v, &w)| a + w * v * v);
        let gradient = half
            * st.u
                .gradient_sq()
                .iter()
                .zip(w)
                .fold(T::zero(), |a, (&g, &w)| a + w * g);
        let source_potential = if self.src.is_zero() {
            T::zero()
        } else {
            st.u.values.iter().zip(w).fold(T::zero(), |a, (&u, &w)| a + w * self.potential.eval(u))
        };
        EnergySnapshot { kinetic, gradient, source_potential }
    }

    /// `∫ g(u_t) u_t dx` and `∫ |u_t|^{m+1} dx` at one instant.
    pub fn dissipation_rates(&self, st: &State<T>) -> (T, T) {
        let m1 = self.dmp.m + T::one();
        st.v.values.iter().zip(&self.weights).fold((T::zero(), T::zero()), |(d, p), (&v, &w)| {
            (d + w * self.dmp.eval(v) * v, p + w * v.abs().powf(m1))
        })
    }

    /// Number of steps used to reach time `horizon`.
    pub fn steps_for(&self, horizon: T) -> usize {
        if horizon <= T::zero() {
            return 0;
        }
        let ratio = (horizon / self.grid.dt).as_f64();
        let r = ratio.round();
        if (ratio - r).abs() <= 1e-9 * ratio.max(1.0) {
            r as usize
        } else {
            ratio.ceil() as usize
        }
    }

    /// Integrates from `init` to `horizon`, recording the ledger at every step.
    pub fn solve(&self, init: &State<T>, horizon: T, observers: &Observers) -> Result<Trajectory<T>> {
        if init.u.grid != self.grid || init.v.grid != self.grid {
            return Err(Error::Precondition("initial state lives on a different grid".into()));
        }
        if !init.u.satisfies_dirichlet() {
            return Err(Error::Precondition("initial displacement does not vanish on the boundary".into()));
        }
        if !init.u.is_finite() || !init.v.is_finite() {
            return Err(Error::Precondition("initial state is not finite".into()));
        }
        let mut first = init.clone();
        // velocity on pinned nodes is irrelevant to the scheme; keep the state consistent
        for n in 0..self.grid.len() {
            if self.grid.is_pinned(n) {
                first.v.values[n] = T::zero();
            }
        }
        let steps = self.steps_for(horizon);
        let stride = observers.snapshot_stride.max(1);
        let t0 = first.t;
        let dt = self.grid.dt;
        let e0 = self.energy(&first);
        let (d0, p0) = self.dissipation_rates(&first);
        let mut ledger = vec![LedgerRow::new(t0, e0, T::zero(), T::zero(), T::zero(), T::zero())];
        let mut states = vec![first.clone()];
        let mut current = first;
        let (mut d_prev, mut p_prev) = (d0, p0);
        let (mut dissipation, mut budget) = (T::zero(), T::zero());
        let mut outcome = Outcome::Completed(t0 + T::from_usize(steps).unwrap() * dt);
        for k in 1..=steps {
            match self.step(&current) {
                Ok(mut next) => {
                    // keep times exact multiples of dt
                    next.t = t0 + T::from_usize(k).unwrap() * dt;
                    let e = self.energy(&next);
                    let (d, p) = self.dissipation_rates(&next);
                    dissipation = dissipation + half_sum(d_prev, d) * dt;
                    budget = budget + half_sum(p_prev, p) * dt;
                    let residual = (e.total() + dissipation - e0.total()).abs();
                    ledger.push(LedgerRow::new(next.t, e, dissipation, residual, p, budget));
                    d_prev = d;
                    p_prev = p;
                    if k % stride == 0 || k == steps {
                        states.push(next.clone());
                    }
                    current = next;
                }
                Err(StepFailure::BlowUp(mut st)) => {
                    st.t = t0 + T::from_usize(k).unwrap() * dt;
                    outcome = Outcome::BlewUp(st.t);
                    if states.last().map(|s| s.t) != Some(current.t) {
                        states.push(current.clone());
                    }
                    states.push(*st);
                    break;
                }
                Err(StepFailure::Numerical(_)) => {
                    outcome = Outcome::NumericalFailure(t0 + T::from_usize(k).unwrap() * dt);
                    if states.last().map(|s| s.t) != Some(current.t) {
                        states.push(current.clone());
                    }
                    break;
                }
            }
        }
        Ok(Trajectory { states, ledger, outcome, dt, stride })
    }
}

#[inline]
fn half_sum<T: Real>(a: T, b: T) -> T {
    (a + b) * T::lit(0.5)
}

/// One step of the scheme for a standalone state.
pub fn step<T: Real>(
    st: &State<T>,
    grid: &GridSpec<T>,
    src: &SourceSpec<T>,
    dmp: &DampingSpec<T>,
) -> std::result::Result<State<T>, StepFailure<T>> {
    let solver = Solver::new(*grid, *src, *dmp).map_err(|e| StepFailure::Numerical(e.to_string()))?;
    solver.step(st)
}

/// Runs the local problem on one patch grid up to `horizon`.
pub fn solve_on_patch<T: Real>(
    init: &State<T>,
    grid: &GridSpec<T>,
    src: &SourceSpec<T>,
    dmp: &DampingSpec<T>,
    horizon: T,
    observers: &Observers,
) -> Result<Trajectory<T>> {
    Solver::new(*grid, *src, *dmp)?.solve(init, horizon, observers)
}

/// Energy components of a state; builds the potential on the fly.
pub fn energy<T: Real>(st: &State<T>, src: &SourceSpec<T>) -> EnergySnapshot<T> {
    let dmp = DampingSpec { m: T::one(), l_m: T::one(), upper_l_m: T::one() };
    Solver { grid: st.u.grid, src: *src, dmp, blowup_threshold: T::lit(BLOWUP_THRESHOLD), weights: st.u.grid.weights(), free: Vec::new(), potential: src.potential() }
        .energy(st)
}
