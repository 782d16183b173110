use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Geometry, GridSpec};
use crate::nonlinearity::{DampingSpec, SourceSpec};
use crate::scalar::Real;
use crate::smooth::{window, window_d1};
use crate::solver::Trajectory;

/// `φ(x, t) = Π_a w((x_a - c_a)/a) · w((t - t_c)/b)` with `w(s) = S5(1 - |s|)`.
/// On a radial grid the spatial factor is `w(ρ/a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction<T> {
    pub center: [T; 3],
    pub a: T,
    pub t_center: T,
    pub b: T,
}

/// Fixed family of test functions: every spatial bump times every temporal bump.
#[derive(Debug, Clone, PartialEq)]
pub struct TestBasis<T> {
    pub spatial: Vec<([T; 3], T)>,
    pub temporal: Vec<(T, T)>,
    pub seed: u64,
}

pub const SPATIAL_SCALES: [f64; 3] = [0.25, 0.35, 0.5];
pub const TEMPORAL_SCALES: [f64; 3] = [0.25, 0.4, 0.6];
pub const CENTERS_PER_SCALE: usize = 3;

/// Offset of the temporal bump centre, as a fraction of its half-width, that
/// puts `t = 0` on a zero of the bump's third derivative.
fn temporal_offset() -> f64 {
    (1.0 - 1.0 / 3f64.sqrt()) / 2.0
}

impl<T: Real> TestBasis<T> {
    /// Three spatial scales (fractions of the half-width) with seeded random
    /// centres, times three temporal scales over `[0, horizon]`. Temporal
    /// bumps are placed so that `φ_t(0) ≠ 0` and `φ_ttt(0) = 0`.
    pub fn standard(grid: &GridSpec<T>, horizon: T, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ext = grid.extent();
        let center = grid.center();
        let mut spatial = Vec::new();
        for &f in &SPATIAL_SCALES {
            let a = ext * T::lit(f);
            if grid.geometry == Geometry::Radial3D {
                spatial.push(([T::zero(); 3], a));
                continue;
            }
            let room = (ext - a - grid.h - grid.h).max(T::zero()).as_f64();
            for _ in 0..CENTERS_PER_SCALE {
                let mut c = [T::zero(); 3];
                for (ax, ca) in c.iter_mut().enumerate().take(grid.dimension()) {
                    let off = if room > 0.0 { rng.gen_range(-room..=room) } else { 0.0 };
                    *ca = center[ax] + T::lit(off);
                }
                spatial.push((c, a));
            }
        }
        let temporal = TEMPORAL_SCALES
            .iter()
            .map(|&f| {
                let b = horizon * T::lit(f);
                (b * T::lit(temporal_offset()), b)
            })
            .collect();
        TestBasis { spatial, temporal, seed }
    }

    pub fn functions(&self) -> Vec<TestFunction<T>> {
        let mut out = Vec::new();
        for &(center, a) in &self.spatial {
            for &(t_center, b) in &self.temporal {
                out.push(TestFunction { center, a, t_center, b });
            }
        }
        out
    }

    pub fn descriptor(&self) -> String {
        format!(
            "{} spatial x {} temporal smoothstep bumps, seed {}",
            self.spatial.len(),
            self.temporal.len(),
            self.seed
        )
    }
}

/// Normalized residual of the weak form for every test function.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalResidual<T> {
    pub per_function: Vec<T>,
    pub descriptor: String,
}

impl<T: Real> VariationalResidual<T> {
    pub fn max(&self) -> T {
        self.per_function.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

fn spatial_factor<T: Real>(grid: &GridSpec<T>, center: [T; 3], a: T) -> Result<Vec<T>> {
    let dim = grid.dimension();
    let lo = grid.origin;
    match grid.geometry {
        Geometry::Radial3D => {
            let span = T::from_usize(grid.dims[0] - 1).unwrap() * grid.h;
            if a > span - grid.h {
                return Err(Error::Precondition("test function touches the outer boundary".into()));
            }
        }
        _ => {
            for ax in 0..dim {
                let hi = lo[ax] + T::from_usize(grid.dims[ax] - 1).unwrap() * grid.h;
                if center[ax] - a < lo[ax] + grid.h || center[ax] + a > hi - grid.h {
                    return Err(Error::Precondition("test function touches the spatial boundary".into()));
                }
            }
        }
    }
    Ok((0..grid.len())
        .map(|n| {
            let x = grid.coord(n);
            if grid.geometry == Geometry::Radial3D {
                return window(x[0] / a);
            }
            (0..dim).fold(T::one(), |p, ax| p * window((x[ax] - center[ax]) / a))
        })
        .collect())
}

/// `∫ ∇u·∇φ` from differences along grid edges (midpoint rule on each edge).
/// On a radial grid the edges carry `∂(ρu) ∂(ρφ)`, which integrates to the same value.
fn edge_dirichlet<T: Real>(grid: &GridSpec<T>, u: &[T], phi: &[T]) -> T {
    let h = grid.h;
    match grid.geometry {
        Geometry::Radial3D => {
            let mut acc = T::zero();
            for i in 0..grid.dims[0] - 1 {
                let (a, b) = (T::from_usize(i).unwrap(), T::from_usize(i + 1).unwrap());
                let dv = b * u[i + 1] - a * u[i];
                let dp = b * phi[i + 1] - a * phi[i];
                acc = acc + dv * dp;
            }
            T::lit(4.0) * T::PI() * h * acc
        }
        _ => {
            let dim = grid.dimension();
            let strides = [grid.dims[1] * grid.dims[2], grid.dims[2], 1];
            let mut acc = T::zero();
            for n in 0..grid.len() {
                let ijk = grid.unravel(n);
                for ax in 0..dim {
                    if ijk[ax] + 1 < grid.dims[ax] {
                        let m = n + strides[ax];
                        let dp = phi[m] - phi[n];
                        if dp != T::zero() {
                            acc = acc + (u[m] - u[n]) * dp;
                        }
                    }
                }
            }
            acc * h.powi(dim as i32 - 2)
        }
    }
}

/// Evaluates both sides of
/// `∫∫ (u φ_tt + ∇u·∇φ + f(u) φ + g(u_t) φ) = ∫ (u1 φ(0) - u0 φ_t(0))`
/// and divides the difference by the largest, over the basis, sum of the
/// magnitudes of the six terms. A test function the wave has not yet reached
/// thus reports an absolute, not a relative, mismatch.
///
/// The left side uses the recorded states with trapezoid weights in time,
/// second differences of φ at the state spacing for `φ_tt`, edge differences
/// for `∇u·∇φ`, and node quadrature for the rest. The right side uses the
/// exact `φ(0)` and `φ_t(0)`; the data `(u0, u1)` are the first state.
pub fn weak_residual<T: Real>(
    traj: &Trajectory<T>,
    src: &SourceSpec<T>,
    dmp: &DampingSpec<T>,
    basis: &TestBasis<T>,
) -> Result<VariationalResidual<T>> {
    if !traj.outcome.is_completed() {
        return Err(Error::Precondition("weak residual needs a completed trajectory".into()));
    }
    let states = &traj.states;
    if states.len() < 3 {
        return Err(Error::Precondition("weak residual needs at least three recorded states".into()));
    }
    let t0 = states[0].t;
    let step = states[1].t - t0;
    // keep the uniformly spaced prefix; a trailing off-stride final state is dropped
    let mut used = 1;
    while used < states.len() {
        let expect = t0 + T::from_usize(used).unwrap() * step;
        if (states[used].t - expect).abs() > step * T::lit(1e-6) {
            break;
        }
        used += 1;
    }
    let span = T::from_usize(used - 1).unwrap() * step;
    for f in basis.functions() {
        if f.t_center + f.b > span * (T::one() + T::lit(1e-12)) {
            return Err(Error::Precondition(format!("test function reaches past the recorded horizon {span}")));
        }
    }
    let grid = states[0].u.grid;
    let w = grid.weights();
    let factors = basis
        .spatial
        .iter()
        .map(|&(c, a)| spatial_factor(&grid, c, a))
        .collect::<Result<Vec<_>>>()?;

    // spatial integrals per state and spatial factor: (u S, ∇u·∇S, f S, g S)
    let ns = factors.len();
    let mut per_state = vec![[T::zero(); 4]; used * ns];
    for (j, st) in states[..used].iter().enumerate() {
        let fu: Vec<T> = st.u.values.iter().map(|&x| src.eval(x)).collect();
        let gv: Vec<T> = st.v.values.iter().map(|&x| dmp.eval(x)).collect();
        for (k, sf) in factors.iter().enumerate() {
            let mut acc = [T::zero(); 4];
            for n in 0..grid.len() {
                let s = sf[n];
                if s == T::zero() {
                    continue;
                }
                let wn = w[n] * s;
                acc[0] = acc[0] + wn * st.u.values[n];
                acc[2] = acc[2] + wn * fu[n];
                acc[3] = acc[3] + wn * gv[n];
            }
            acc[1] = edge_dirichlet(&grid, &st.u.values, sf);
            per_state[j * ns + k] = acc;
        }
    }
    let (u0, u1) = (&states[0].u, &states[0].v);
    let data: Vec<(T, T)> = factors
        .iter()
        .map(|sf| {
            let mut a = T::zero();
            let mut b = T::zero();
            for n in 0..grid.len() {
                a = a + w[n] * u1.values[n] * sf[n];
                b = b + w[n] * u0.values[n] * sf[n];
            }
            (a, b)
        })
        .collect();

    let half = T::lit(0.5);
    let mut raw = Vec::with_capacity(ns * basis.temporal.len());
    for k in 0..ns {
        for &(tc, b) in &basis.temporal {
            let tau = |s: T| window((s - tc) / b);
            let mut terms = [T::zero(); 4];
            for j in 0..used {
                let s = T::from_usize(j).unwrap() * step;
                let t = tau(s);
                let t_tt = (tau(s + step) - t - t + tau(s - step)) / (step * step);
                let wt = if j == 0 || j + 1 == used { step * half } else { step };
                let acc = per_state[j * ns + k];
                terms[0] = terms[0] + wt * t_tt * acc[0];
                terms[1] = terms[1] + wt * t * acc[1];
                terms[2] = terms[2] + wt * t * acc[2];
                terms[3] = terms[3] + wt * t * acc[3];
            }
            let z0 = -tc / b;
            let r1 = data[k].0 * window(z0);
            let r2 = data[k].1 * window_d1(z0) / b;
            let lhs = terms[0] + terms[1] + terms[2] + terms[3];
            let scale = terms.iter().fold(T::zero(), |a, t| a + t.abs()) + r1.abs() + r2.abs();
            raw.push(((lhs - (r1 - r2)).abs(), scale));
        }
    }
    let scale = raw.iter().fold(T::zero(), |a, &(_, s)| a.max(s));
    let per_function = raw.iter().map(|&(r, _)| if scale > T::zero() { r / scale } else { T::zero() }).collect();
    Ok(VariationalResidual { per_function, descriptor: basis.descriptor() })
}

/// Copy of the trajectory with every displacement after the first scaled by
/// `factor`; the initial data are left alone.
pub fn corrupt<T: Real>(traj: &Trajectory<T>, factor: T) -> Trajectory<T> {
    let mut out = traj.clone();
    for st in out.states.iter_mut().skip(1) {
        st.u = st.u.map(|x| x * factor);
    }
    out
}
