//! Localizing the initial data: choose one radius `r` for every centre from
//! the energy budget `K`, build the cutoff θ, and produce patch-local data.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::{Field, Geometry, GridSpec, NodeBall};
use crate::scalar::Real;

/// Smallest admissible radius, in cells, for [`choose_radius`].
pub const MIN_RADIUS_CELLS: f64 = 8.0;
/// Smallest admissible radius, in cells, for [`ThetaCutoff`].
pub const MIN_THETA_CELLS: f64 = 4.0;
/// Relative slack allowed between the direct and the chained gradient bound.
pub const QUADRATURE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct CutPlan<T> {
    /// Budget on `|∇u0| + |u1|`.
    pub k: T,
    pub r: T,
    /// `C*` with `|u|_6³ ≤ C* (|∇u|_2 + |u|_2)³`.
    pub sobolev_c: T,
    /// Volume of the unit ball in the grid's dimension.
    pub omega: T,
    pub dimension: usize,
    /// `r` was supplied by the caller instead of chosen from the budget.
    pub overridden: bool,
    pub probes: Vec<[T; 3]>,
}

impl<T: Real> CutPlan<T> {
    /// Plan with a caller-chosen radius; the budget inequalities are not enforced.
    pub fn with_radius(grid: &GridSpec<T>, k: T, r: T) -> Result<Self> {
        if !(r >= T::lit(MIN_THETA_CELLS) * grid.h) {
            return Err(Error::Resolution(format!("radius {r} is below {MIN_THETA_CELLS} cells")));
        }
        Ok(CutPlan {
            k,
            r,
            sobolev_c: T::lit(sobolev_constant(grid.geometry).powi(3)),
            omega: T::lit(grid.geometry.unit_ball_volume()),
            dimension: grid.dimension(),
            overridden: true,
            probes: Vec::new(),
        })
    }

    /// Factor in front of `|∇u0|_B + |u0|_B` in the third budget inequality.
    /// Equals `2 (C* ω)^{1/3}` in three dimensions.
    pub fn poincare_factor(&self) -> T {
        poincare_factor(self.sobolev_c.cbrt(), self.omega, self.r, self.dimension)
    }

    /// The three budget inequalities on `B(p, r)`.
    pub fn ball_satisfies(&self, b: &BallNorms<T>) -> bool {
        let quarter = self.k * T::lit(0.25);
        b.grad_u0 < quarter && b.u1 < quarter && self.poincare_factor() * (b.grad_u0 + b.u0) < quarter
    }
}

fn poincare_factor<T: Real>(s: T, omega: T, r: T, dim: usize) -> T {
    // |u|_{L²(B)} ≤ |B|^{1/3} |u|_{L⁶(B)} and |∇θ| ≤ 2/r
    let vol = omega * r.powi(dim as i32);
    T::lit(2.0) * s * vol.cbrt() / r
}

/// `L²` norms restricted to a ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallNorms<T> {
    pub grad_u0: T,
    pub u0: T,
    pub u1: T,
}

/// Best constant `S` in `|u|_6 ≤ S (|∇u|_2 + |u|_2)` over a basket of
/// Gaussians, bumps and tents on a unit-size domain.
pub fn sobolev_constant(geometry: Geometry) -> f64 {
    static LINE: OnceLock<f64> = OnceLock::new();
    static SPACE: OnceLock<f64> = OnceLock::new();
    match geometry.dimension() {
        1 => *LINE.get_or_init(|| basket_max(GridSpec::line(0.0, 1.0, 1.0 / 1024.0, 1.0 / 1024.0).unwrap())),
        _ => *SPACE.get_or_init(|| basket_max(GridSpec::radial(1.0, 1.0 / 512.0, 0.5 / 512.0).unwrap())),
    }
}

fn basket_max(grid: GridSpec<f64>) -> f64 {
    let mut profiles: Vec<Box<dyn Fn(f64) -> f64>> = Vec::new();
    for w in [0.05, 0.1, 0.2, 0.4] {
        profiles.push(Box::new(move |d: f64| (-(d * d) / (w * w)).exp()));
    }
    for r in [0.1, 0.25, 0.5, 0.9] {
        profiles.push(Box::new(move |d: f64| crate::smooth::window(d / r)));
    }
    for r in [0.1, 0.3, 0.6] {
        profiles.push(Box::new(move |d: f64| (1.0 - d / r).max(0.0)));
    }
    profiles
        .iter()
        .map(|p| {
            let f = Field::from_fn(grid, |x| p(x[0].abs())).with_dirichlet();
            let l6 = f.norm_lq(6.0).unwrap();
            l6 / (f.seminorm_grad() + f.norm_l2())
        })
        .fold(0.0, f64::max)
}

/// Nodes of `grid` strictly inside `B(p, r)`. On a radial grid the ball is
/// centred at the origin.
pub fn ball_nodes<T: Real>(grid: &GridSpec<T>, p: [T; 3], r: T) -> Vec<usize> {
    let used = match grid.geometry {
        Geometry::Box3D => 3,
        _ => 1,
    };
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..used {
        let rel = match grid.geometry {
            Geometry::Radial3D => T::zero(),
            _ => (p[a] - grid.origin[a]) / grid.h,
        };
        let reach = r / grid.h;
        let last = grid.dims[a] - 1;
        let l = (rel - reach).floor().max(T::zero()).to_usize().unwrap_or(0).min(last);
        let h = (rel + reach).ceil().max(T::zero()).to_usize().unwrap_or(last).min(last);
        lo[a] = l;
        hi[a] = h;
    }
    let mut out = Vec::new();
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            for k in lo[2]..=hi[2] {
                let n = grid.index(i, j, k);
                if grid.distance_to(n, p) < r {
                    out.push(n);
                }
            }
        }
    }
    out
}

/// Pointwise densities `(|∇u0|², u0², u1²)` and quadrature weights, reused across probes.
struct Densities<T> {
    grad: Vec<T>,
    u0: Vec<T>,
    u1: Vec<T>,
    w: Vec<T>,
}

impl<T: Real> Densities<T> {
    fn new(u0: &Field<T>, u1: &Field<T>) -> Self {
        Densities {
            grad: u0.gradient_sq(),
            u0: u0.values.iter().map(|&x| x * x).collect(),
            u1: u1.values.iter().map(|&x| x * x).collect(),
            w: u0.grid.weights(),
        }
    }

    fn ball(&self, nodes: &[usize]) -> BallNorms<T> {
        let (mut g, mut a, mut b) = (T::zero(), T::zero(), T::zero());
        for &n in nodes {
            g = g + self.w[n] * self.grad[n];
            a = a + self.w[n] * self.u0[n];
            b = b + self.w[n] * self.u1[n];
        }
        BallNorms { grad_u0: g.sqrt(), u0: a.sqrt(), u1: b.sqrt() }
    }
}

/// Local norms of the data on `B(p, r)`.
pub fn ball_norms<T: Real>(u0: &Field<T>, u1: &Field<T>, p: [T; 3], r: T) -> BallNorms<T> {
    Densities::new(u0, u1).ball(&ball_nodes(&u0.grid, p, r))
}

/// Node where `|∇u0|² + |u1|²` peaks.
pub fn max_density_point<T: Real>(u0: &Field<T>, u1: &Field<T>) -> [T; 3] {
    let g = u0.gradient_sq();
    let mut best = (T::neg_infinity(), 0);
    for n in 0..g.len() {
        let d = g[n] + u1.values[n] * u1.values[n];
        if d > best.0 {
            best = (d, n);
        }
    }
    u0.grid.coord(best.1)
}

fn check_pair<T: Real>(u0: &Field<T>, u1: &Field<T>) -> Result<()> {
    if u0.grid != u1.grid {
        return Err(Error::Precondition("u0 and u1 must share a grid".into()));
    }
    if !u0.is_finite() || !u1.is_finite() {
        return Err(Error::Precondition("initial data are not finite".into()));
    }
    Ok(())
}

/// Global budget quantity `|∇u0|_2 + |u1|_2`.
pub fn data_norm<T: Real>(u0: &Field<T>, u1: &Field<T>) -> T {
    u0.seminorm_grad() + u1.norm_l2()
}

/// Largest `r` in `extent, extent/2, …` (not below eight cells) such that the
/// budget inequalities hold on `B(p, r)` for every probe `p`. The max-density
/// point of the data is probed as well.
pub fn choose_radius<T: Real>(u0: &Field<T>, u1: &Field<T>, k: T, centers: &[[T; 3]]) -> Result<CutPlan<T>> {
    check_pair(u0, u1)?;
    let grid = &u0.grid;
    let total = data_norm(u0, u1);
    if !(total < k) {
        return Err(Error::Precondition(format!("|∇u0| + |u1| = {total} is not below K = {k}")));
    }
    let mut probes = centers.to_vec();
    if grid.geometry == Geometry::Radial3D {
        probes.retain(|p| p.iter().all(|x| x.is_zero()));
        probes.push([T::zero(); 3]);
        probes.dedup();
    } else {
        probes.push(max_density_point(u0, u1));
    }
    let dens = Densities::new(u0, u1);
    let s = T::lit(sobolev_constant(grid.geometry));
    let mut plan = CutPlan {
        k,
        r: grid.extent(),
        sobolev_c: s.powi(3),
        omega: T::lit(grid.geometry.unit_ball_volume()),
        dimension: grid.dimension(),
        overridden: false,
        probes,
    };
    let floor = T::lit(MIN_RADIUS_CELLS) * grid.h;
    while plan.r >= floor {
        if plan.probes.iter().all(|&p| plan.ball_satisfies(&dens.ball(&ball_nodes(grid, p, plan.r)))) {
            return Ok(plan);
        }
        plan.r = plan.r * T::lit(0.5);
    }
    Err(Error::Resolution(format!(
        "no radius of at least {MIN_RADIUS_CELLS} cells meets the budget K = {k}; refine the grid"
    )))
}

/// Radial cutoff: 1 on `B(center, r/2)`, 0 outside `B(center, r)`, with a
/// mollified linear ramp in between.
///
/// For `r ≥ 16h` the plateau reaches one cell past `r/2`, so the velocity,
/// which the scheme spreads one cell further than the displacement, also
/// agrees across overlapping patches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaCutoff<T> {
    pub center: [T; 3],
    pub r: T,
    /// Ramp start and end before mollification.
    pub ramp: (T, T),
    /// Half-width of the mollifier support.
    pub mu: T,
}

impl<T: Real> ThetaCutoff<T> {
    pub fn new(center: [T; 3], r: T, h: T) -> Result<Self> {
        if !(r >= T::lit(MIN_THETA_CELLS) * h) {
            return Err(Error::Resolution(format!("cutoff radius {r} is below {MIN_THETA_CELLS} cells of {h}")));
        }
        let mu = h.min(r / T::lit(16.0));
        let ext = if r >= T::lit(16.0) * h { h } else { T::zero() };
        let half = r * T::lit(0.5);
        Ok(ThetaCutoff { center, r, ramp: (half + ext + mu, r - mu), mu })
    }

    /// Cutoff with an explicit ramp `[a, b]`; no invariants are enforced.
    pub fn with_ramp(center: [T; 3], r: T, a: T, b: T, mu: T) -> Self {
        ThetaCutoff { center, r, ramp: (a, b), mu }
    }

    /// Radius up to which θ is exactly 1.
    pub fn plateau(&self) -> T {
        self.ramp.0 - self.mu
    }

    /// Lipschitz constant of θ.
    pub fn grad_bound(&self) -> T {
        T::one() / (self.ramp.1 - self.ramp.0)
    }

    pub fn eval(&self, rho: T) -> T {
        let (a, b) = self.ramp;
        if rho <= a - self.mu {
            return T::one();
        }
        if rho >= b + self.mu || rho >= self.r {
            return T::zero();
        }
        let sigma = self.mu * T::lit(0.5);
        let v = (smoothed_relu(b - rho, sigma) - smoothed_relu(a - rho, sigma)) / (b - a);
        v.max(T::zero()).min(T::one())
    }

    pub fn sample(&self, grid: &GridSpec<T>) -> Field<T> {
        let values = (0..grid.len()).map(|n| self.eval(grid.distance_to(n, self.center))).collect();
        Field { grid: *grid, values }
    }
}

/// `max(x, 0)` convolved with a cubic B-spline of knot spacing `sigma`.
fn smoothed_relu<T: Real>(x: T, sigma: T) -> T {
    if sigma <= T::zero() {
        return x.max(T::zero());
    }
    let t = x / sigma;
    let two = T::lit(2.0);
    if t >= two {
        return x;
    }
    if t <= -two {
        return T::zero();
    }
    let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
    let mut acc = T::zero();
    for (k, &c) in binom.iter().enumerate() {
        let s = t + two - T::lit(k as f64);
        if s > T::zero() {
            let term = T::lit(c) * s.powi(5);
            acc = if k % 2 == 0 { acc + term } else { acc - term };
        }
    }
    sigma * acc / T::lit(120.0)
}

pub fn build_theta<T: Real>(center: [T; 3], r: T, grid: &GridSpec<T>) -> Result<ThetaCutoff<T>> {
    ThetaCutoff::new(center, r, grid.h)
}

/// Sub-grid of a global grid holding one ball, node-aligned with it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchGrid<T> {
    pub grid: GridSpec<T>,
    /// Global index of the patch's node `(0, 0, 0)`.
    pub offset: [usize; 3],
    /// Global index of the ball centre.
    pub center_node: [usize; 3],
}

impl<T: Real> PatchGrid<T> {
    /// Box of `ceil(r/h) + 1` cells around `center_node`, clipped to the
    /// global grid, with every node at distance `≥ r` pinned.
    pub fn around(global: &GridSpec<T>, center_node: [usize; 3], r: T) -> Result<Self> {
        let reach = (r / global.h).ceil().to_usize().unwrap_or(0) + 1;
        let used = match global.geometry {
            Geometry::Box3D => 3,
            _ => 1,
        };
        if global.geometry == Geometry::Radial3D && center_node[0] != 0 {
            return Err(Error::Domain("radial patches must be centred at the origin".into()));
        }
        let mut offset = [0usize; 3];
        let mut dims = [1usize; 3];
        let mut local = [0usize; 3];
        for a in 0..used {
            if center_node[a] >= global.dims[a] {
                return Err(Error::Domain(format!("centre node {:?} is outside the grid", center_node)));
            }
            let lo = center_node[a].saturating_sub(reach);
            let hi = (center_node[a] + reach).min(global.dims[a] - 1);
            offset[a] = lo;
            dims[a] = hi - lo + 1;
            local[a] = center_node[a] - lo;
        }
        let mut origin = global.origin;
        for a in 0..used {
            origin[a] = global.origin[a] + T::from_usize(offset[a]).unwrap() * global.h;
        }
        let grid = GridSpec::new(global.geometry, origin, dims, global.h, global.dt)?
            .with_ball(NodeBall { center: local, radius: r });
        Ok(PatchGrid { grid, offset, center_node })
    }

    /// Global flat index of local node `n`.
    pub fn global_index(&self, global: &GridSpec<T>, n: usize) -> usize {
        let l = self.grid.unravel(n);
        global.index(l[0] + self.offset[0], l[1] + self.offset[1], l[2] + self.offset[2])
    }

    /// Local flat index of global node `ijk`, if the patch holds it.
    pub fn local_index(&self, ijk: [usize; 3]) -> Option<usize> {
        let mut l = [0usize; 3];
        for a in 0..3 {
            let x = ijk[a].checked_sub(self.offset[a])?;
            if x >= self.grid.dims[a] {
                return None;
            }
            l[a] = x;
        }
        Some(self.grid.index(l[0], l[1], l[2]))
    }

    /// Restriction of a global field to the patch box.
    pub fn extract(&self, f: &Field<T>) -> Field<T> {
        let values = (0..self.grid.len()).map(|n| f.values[self.global_index(&f.grid, n)]).collect();
        Field { grid: self.grid, values }
    }

    /// Local nodes inside the ball.
    pub fn ball_mask(&self) -> Vec<bool> {
        let b = self.grid.ball.expect("patch grids carry a ball");
        (0..self.grid.len())
            .map(|n| self.grid.node_distance_sq(n, b.center) * self.grid.h * self.grid.h < b.radius * b.radius)
            .collect()
    }
}

/// Nearest node of `grid` to `p`.
pub fn snap_to_node<T: Real>(grid: &GridSpec<T>, p: [T; 3]) -> [usize; 3] {
    let used = match grid.geometry {
        Geometry::Box3D => 3,
        Geometry::Radial3D => return [0; 3],
        Geometry::Line1D => 1,
    };
    let mut ijk = [0usize; 3];
    for a in 0..used {
        let x = ((p[a] - grid.origin[a]) / grid.h).round().max(T::zero());
        ijk[a] = x.to_usize().unwrap_or(0).min(grid.dims[a] - 1);
    }
    ijk
}

/// Numerical check of the cutting chain on one ball.
#[derive(Debug, Clone, PartialEq)]
pub struct CutReport<T> {
    pub center: [T; 3],
    /// `|∇(θu0)|_B`, evaluated directly.
    pub grad_cut: T,
    /// `|θ|_∞ |∇u0|_B + |∇θ|_∞ |u0|_B`.
    pub chain_bound: T,
    pub u1_norm: T,
    pub norms: BallNorms<T>,
    pub k: T,
}

impl<T: Real> CutReport<T> {
    pub fn total(&self) -> T {
        self.grad_cut + self.u1_norm
    }

    /// Relative slack `1 - total/K`.
    pub fn margin(&self) -> T {
        T::one() - self.total() / self.k
    }

    pub fn chain_holds(&self) -> bool {
        self.grad_cut <= self.chain_bound * T::lit(1.0 + QUADRATURE_TOLERANCE)
    }

    pub fn passed(&self) -> bool {
        let half = self.k * T::lit(0.5);
        self.chain_holds()
            && self.chain_bound < half
            && self.u1_norm < self.k * T::lit(0.25)
            && self.total() < self.k
    }
}

/// Patch-local data `(θu0, u1)` on `B(center, r)` and its bound report.
#[derive(Debug, Clone, PartialEq)]
pub struct CutData<T> {
    pub patch: PatchGrid<T>,
    pub theta: ThetaCutoff<T>,
    pub u0: Field<T>,
    pub u1: Field<T>,
    pub report: CutReport<T>,
}

/// Cuts global data to the ball of radius `plan.r` around the node nearest `center`.
pub fn cut_data<T: Real>(u0: &Field<T>, u1: &Field<T>, center: [T; 3], plan: &CutPlan<T>) -> Result<CutData<T>> {
    check_pair(u0, u1)?;
    let global = &u0.grid;
    let node = snap_to_node(global, center);
    let c = global.coord(node[0] * global.dims[1] * global.dims[2] + node[1] * global.dims[2] + node[2]);
    let theta = ThetaCutoff::new(c, plan.r, global.h)?;
    cut_with_theta(u0, u1, node, theta, plan.k)
}

/// [`cut_data`] with an explicit cutoff; the cutoff must be centred on `node`.
pub fn cut_with_theta<T: Real>(
    u0: &Field<T>,
    u1: &Field<T>,
    node: [usize; 3],
    theta: ThetaCutoff<T>,
    k: T,
) -> Result<CutData<T>> {
    check_pair(u0, u1)?;
    let patch = PatchGrid::around(&u0.grid, node, theta.r)?;
    let mask = patch.ball_mask();
    let raw0 = patch.extract(u0);
    let th = theta.sample(&patch.grid);
    let mut cu0 = raw0.zip_map(&th, |u, t| t * u);
    let mut cu1 = patch.extract(u1);
    for n in 0..mask.len() {
        if !mask[n] || patch.grid.is_pinned(n) {
            cu0.values[n] = T::zero();
            cu1.values[n] = T::zero();
        }
    }
    let w = patch.grid.weights();
    let sum_in = |vals: &[T]| -> T {
        vals.iter().zip(&w).zip(&mask).fold(T::zero(), |a, ((&v, &w), &m)| if m { a + w * v } else { a }).sqrt()
    };
    let sq = |f: &Field<T>| f.values.iter().map(|&x| x * x).collect::<Vec<_>>();
    let norms = BallNorms { grad_u0: sum_in(&raw0.gradient_sq()), u0: sum_in(&sq(&raw0)), u1: sum_in(&sq(&cu1)) };
    let theta_max = th.values.iter().zip(&mask).fold(T::zero(), |a, (&t, &m)| if m { a.max(t) } else { a });
    let report = CutReport {
        center: theta.center,
        grad_cut: sum_in(&cu0.gradient_sq()),
        chain_bound: theta_max * norms.grad_u0 + theta.grad_bound() * norms.u0,
        u1_norm: norms.u1,
        norms,
        k,
    };
    Ok(CutData { patch, theta, u0: cu0, u1: cu1, report })
}
