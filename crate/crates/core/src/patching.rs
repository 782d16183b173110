//! Gluing ball solutions into one solution along backward cones.
//!
//! Each centre `x_j` of a lattice gets its own Dirichlet problem on
//! `B(x_j, r)` with cut data. Patch `j` is trusted on the cone
//! `|y - x_j| ≤ r/2 - c s`, where `c` is the numerical cone speed, and the
//! global field at `(y, t)` is read from the nearest centre whose cone holds
//! the point.

use rayon::prelude::*;

use crate::cutting::{cut_data, CutData, CutPlan, CutReport};
use crate::error::{Error, Result};
use crate::grid::{Field, Geometry, GridSpec};
use crate::nonlinearity::{DampingSpec, SourceSpec};
use crate::scalar::Real;
use crate::solver::{solve_on_patch, Observers, Outcome, State, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice<T> {
    pub centers: Vec<[T; 3]>,
    /// Global node of every centre.
    pub nodes: Vec<[usize; 3]>,
    pub d: T,
    /// Largest distance from a domain point to its nearest centre.
    pub covering_radius: T,
}

impl<T: Real> Lattice<T> {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Largest distance from any grid node to its nearest centre.
    pub fn sampled_covering_radius(&self, grid: &GridSpec<T>) -> T {
        let mut worst = T::zero();
        for n in 0..grid.len() {
            let best = self
                .nodes
                .iter()
                .map(|&c| grid.node_distance_sq(n, c))
                .fold(T::infinity(), |a, b| a.min(b));
            worst = worst.max(best.sqrt() * grid.h);
        }
        worst
    }
}

/// Regular lattice of spacing `d` over the grid, including both walls on
/// every axis. Requires `0 < d < r/2` and `d` a multiple of `h`.
pub fn build_lattice<T: Real>(grid: &GridSpec<T>, d: T, r: T) -> Result<Lattice<T>> {
    let used = match grid.geometry {
        Geometry::Line1D => 1,
        Geometry::Box3D => 3,
        Geometry::Radial3D => {
            return Err(Error::Domain("patching needs a Line1D or Box3D grid".into()));
        }
    };
    if !(d > T::zero()) || !(d < r * T::lit(0.5)) {
        return Err(Error::Precondition(format!("lattice spacing d = {d} must satisfy 0 < d < r/2 = {}", r * T::lit(0.5))));
    }
    let cells = (d / grid.h).round();
    if (cells * grid.h - d).abs() > grid.h * T::lit(1e-9) || cells < T::one() {
        return Err(Error::Grid(format!("lattice spacing {d} is not a multiple of h = {}", grid.h)));
    }
    let step = cells.to_usize().unwrap();
    let mut axes: Vec<Vec<usize>> = vec![vec![0]; 3];
    let mut max_gap = 0usize;
    for (a, axis) in axes.iter_mut().enumerate().take(used) {
        let last = grid.dims[a] - 1;
        let mut pos: Vec<usize> = (0..=last).step_by(step).collect();
        if *pos.last().unwrap() != last {
            pos.push(last);
        }
        for w in pos.windows(2) {
            max_gap = max_gap.max(w[1] - w[0]);
        }
        *axis = pos;
    }
    let mut nodes = Vec::new();
    for &i in &axes[0] {
        for &j in &axes[1] {
            for &k in &axes[2] {
                nodes.push([i, j, k]);
            }
        }
    }
    let centers = nodes.iter().map(|&[i, j, k]| grid.coord(grid.index(i, j, k))).collect();
    let half_gap = T::from_usize(max_gap).unwrap() * grid.h * T::lit(0.5);
    let covering_radius = half_gap * T::from_usize(used).unwrap().sqrt();
    Ok(Lattice { centers, nodes, d, covering_radius })
}

/// Backward cone `|y - x_j| ≤ r/2 - c s`, `0 ≤ s ≤ r/(2c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeRegion<T> {
    pub vertex_center: [T; 3],
    pub base_radius: T,
    pub speed: T,
}

impl<T: Real> ConeRegion<T> {
    pub fn new(center: [T; 3], r: T, speed: T) -> Self {
        ConeRegion { vertex_center: center, base_radius: r * T::lit(0.5), speed }
    }

    pub fn height(&self) -> T {
        self.base_radius / self.speed
    }

    pub fn contains_distance(&self, dist: T, s: T) -> bool {
        s >= T::zero() && s <= self.height() && dist <= self.base_radius - self.speed * s
    }
}

/// Intersection of the cones of patches `j` and `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapRegion<T> {
    pub j: usize,
    pub l: usize,
    pub distance: T,
    /// Top of the intersection, `(r - |x_j - x_l|) / (2c)`.
    pub max_time: T,
}

impl<T: Real> OverlapRegion<T> {
    pub fn new(j: usize, l: usize, distance: T, r: T, speed: T) -> Option<Self> {
        if distance < r {
            Some(OverlapRegion { j, l, distance, max_time: (r - distance) / (speed + speed) })
        } else {
            None
        }
    }
}

/// One ball solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchRun<T> {
    pub index: usize,
    pub cut: CutData<T>,
    pub trajectory: Trajectory<T>,
}

impl<T: Real> PatchRun<T> {
    pub fn center(&self) -> [T; 3] {
        self.cut.theta.center
    }

    pub fn report(&self) -> &CutReport<T> {
        &self.cut.report
    }
}

/// Piecewise solution built from all patch trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSolution<T> {
    pub grid: GridSpec<T>,
    pub lattice: Lattice<T>,
    pub plan: CutPlan<T>,
    /// Numerical cone speed.
    pub speed: T,
    /// Start time of every patch run.
    pub t0: T,
    /// Assembly is defined for `t0 ≤ t < valid_until`.
    pub valid_until: T,
    pub patches: Vec<PatchRun<T>>,
}

/// `t0 + (r - 2ρ) / (2c)` with `ρ` the covering radius; `(r - d)/2` in 1D at unit speed.
pub fn validity_horizon<T: Real>(t0: T, r: T, lattice: &Lattice<T>, speed: T) -> T {
    t0 + (r - lattice.covering_radius - lattice.covering_radius) / (speed + speed)
}

/// Cuts the data for every centre and solves all patches concurrently up to the validity horizon.
pub fn solve_all_patches<T: Real>(
    u0: &Field<T>,
    u1: &Field<T>,
    t0: T,
    lattice: &Lattice<T>,
    plan: &CutPlan<T>,
    src: &SourceSpec<T>,
    dmp: &DampingSpec<T>,
    observers: &Observers,
) -> Result<GlobalSolution<T>> {
    if !(lattice.d < plan.r * T::lit(0.5)) {
        return Err(Error::Precondition(format!("lattice spacing {} is not below r/2 = {}", lattice.d, plan.r * T::lit(0.5))));
    }
    let cuts = lattice
        .centers
        .par_iter()
        .map(|&c| cut_data(u0, u1, c, plan))
        .collect::<Result<Vec<_>>>()?;
    solve_patches(&u0.grid, cuts, t0, lattice, plan, src, dmp, observers)
}

/// Solves prepared patch data; `cuts[j]` belongs to `lattice.centers[j]`.
pub fn solve_patches<T: Real>(
    grid: &GridSpec<T>,
    cuts: Vec<CutData<T>>,
    t0: T,
    lattice: &Lattice<T>,
    plan: &CutPlan<T>,
    src: &SourceSpec<T>,
    dmp: &DampingSpec<T>,
    observers: &Observers,
) -> Result<GlobalSolution<T>> {
    if cuts.len() != lattice.len() {
        return Err(Error::Precondition("one cut per lattice centre is required".into()));
    }
    let speed = grid.cone_speed();
    let valid_until = validity_horizon(t0, plan.r, lattice, speed);
    if !(valid_until > t0) {
        return Err(Error::Precondition(format!(
            "cones of radius {} do not cover the lattice (covering radius {})",
            plan.r / T::lit(2.0),
            lattice.covering_radius
        )));
    }
    let horizon = valid_until - t0;
    let runs = cuts
        .into_par_iter()
        .enumerate()
        .map(|(index, cut)| {
            let init = State::new(cut.u0.clone(), cut.u1.clone(), t0)?;
            let trajectory = solve_on_patch(&init, &cut.patch.grid, src, dmp, horizon, observers)?;
            Ok(PatchRun { index, cut, trajectory })
        })
        .collect::<Result<Vec<_>>>()?;
    for run in &runs {
        match run.trajectory.outcome {
            Outcome::Completed(_) => {}
            Outcome::BlewUp(t) => return Err(Error::PatchBlowUp { index: run.index, time: t.as_f64() }),
            Outcome::NumericalFailure(t) => return Err(Error::PatchFailure { index: run.index, time: t.as_f64() }),
        }
    }
    Ok(GlobalSolution {
        grid: *grid,
        lattice: lattice.clone(),
        plan: plan.clone(),
        speed,
        t0,
        valid_until,
        patches: runs,
    })
}

impl<T: Real> GlobalSolution<T> {
    pub fn cone(&self, j: usize) -> ConeRegion<T> {
        ConeRegion::new(self.patches[j].center(), self.plan.r, self.speed)
    }

    /// Step index of `t`, if `t` is on the time grid.
    fn step_of(&self, t: T) -> Result<usize> {
        let dt = self.grid.dt;
        let k = ((t - self.t0) / dt).round();
        if (self.t0 + k * dt - t).abs() > dt * T::lit(1e-6) || k < T::zero() {
            return Err(Error::Precondition(format!("time {t} is not a multiple of dt after t0")));
        }
        Ok(k.to_usize().unwrap())
    }

    fn patch_state(&self, j: usize, k: usize) -> Result<&State<T>> {
        self.patches[j]
            .trajectory
            .state_at_step(k)
            .ok_or_else(|| Error::Precondition(format!("patch {j} did not record step {k}; use snapshot stride 1")))
    }

    /// Distance, in physical units, from global node `ijk` to centre `j`.
    fn node_distance(&self, ijk: [usize; 3], j: usize) -> T {
        let c = self.patches[j].cut.patch.center_node;
        let mut d2: i64 = 0;
        for a in 0..3 {
            let x = ijk[a] as i64 - c[a] as i64;
            d2 += x * x;
        }
        T::from_i64(d2).unwrap().sqrt() * self.grid.h
    }

    /// Global state at `t`, each node read from its nearest covering patch
    /// (ties go to the lowest index).
    pub fn assemble(&self, t: T) -> Result<State<T>> {
        if t < self.t0 || t >= self.valid_until {
            return Err(Error::OutOfValidity { t: t.as_f64(), horizon: self.valid_until.as_f64() });
        }
        let k = self.step_of(t)?;
        let s = T::from_usize(k).unwrap() * self.grid.dt;
        let len = self.grid.len();
        let mut best: Vec<Option<(T, usize, usize)>> = vec![None; len];
        for (j, run) in self.patches.iter().enumerate() {
            let cone = self.cone(j);
            let pg = &run.cut.patch;
            for n in 0..pg.grid.len() {
                let gi = pg.global_index(&self.grid, n);
                let dist = self.node_distance(self.grid.unravel(gi), j);
                if cone.contains_distance(dist, s) && best[gi].is_none_or(|(bd, _, _)| dist < bd) {
                    best[gi] = Some((dist, j, n));
                }
            }
        }
        let mut u = Field::zeros(self.grid);
        let mut v = Field::zeros(self.grid);
        for (gi, b) in best.iter().enumerate() {
            let (_, j, n) = b.ok_or_else(|| Error::Numerical(format!("node {gi} lies in no cone at t = {t}")))?;
            let st = self.patch_state(j, k)?;
            u.values[gi] = st.u.values[n];
            v.values[gi] = st.v.values[n];
        }
        Ok(State { u, v, t: self.t0 + s })
    }

    /// Times at which every patch recorded its state, below the horizon.
    pub fn assembly_times(&self) -> Vec<T> {
        let first = &self.patches[0].trajectory;
        first
            .states
            .iter()
            .map(|s| s.t)
            .filter(|&t| t < self.valid_until && self.patches.iter().all(|p| p.trajectory.states.iter().any(|q| q.t == t)))
            .collect()
    }

    pub fn overlap(&self, j: usize, l: usize) -> Option<OverlapRegion<T>> {
        let a = self.patches[j].cut.patch.center_node;
        let dist = self.node_distance(a, l);
        OverlapRegion::new(j, l, dist, self.plan.r, self.speed)
    }

    /// All pairs `j < l` whose cones intersect.
    pub fn overlaps(&self) -> Vec<OverlapRegion<T>> {
        let mut out = Vec::new();
        for j in 0..self.patches.len() {
            for l in j + 1..self.patches.len() {
                if let Some(o) = self.overlap(j, l) {
                    out.push(o);
                }
            }
        }
        out
    }
}

pub fn assemble_global<T: Real>(sol: &GlobalSolution<T>, t: T) -> Result<State<T>> {
    sol.assemble(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapReport<T> {
    pub j: usize,
    pub l: usize,
    pub max_u: T,
    pub max_v: T,
    /// Number of (node, time) samples compared.
    pub samples: usize,
    pub max_time: T,
}

impl<T: Real> OverlapReport<T> {
    pub fn discrepancy(&self) -> T {
        self.max_u.max(self.max_v)
    }
}

/// Largest disagreement between patches `j` and `l` on their cone
/// intersection at every recorded time below the validity horizon.
pub fn overlap_consistency<T: Real>(sol: &GlobalSolution<T>, j: usize, l: usize) -> Result<OverlapReport<T>> {
    let region = sol
        .overlap(j, l)
        .ok_or_else(|| Error::Precondition(format!("cones of patches {j} and {l} do not intersect")))?;
    let (cj, cl) = (sol.cone(j), sol.cone(l));
    let (pj, pl) = (&sol.patches[j], &sol.patches[l]);
    let mut rep = OverlapReport { j, l, max_u: T::zero(), max_v: T::zero(), samples: 0, max_time: region.max_time };
    for sj in &pj.trajectory.states {
        if sj.t >= sol.valid_until {
            continue;
        }
        let Some(sl) = pl.trajectory.states.iter().find(|s| s.t == sj.t) else { continue };
        let s = sj.t - sol.t0;
        for n in 0..pj.cut.patch.grid.len() {
            let ijk = sol.grid.unravel(pj.cut.patch.global_index(&sol.grid, n));
            if !cj.contains_distance(sol.node_distance(ijk, j), s) || !cl.contains_distance(sol.node_distance(ijk, l), s) {
                continue;
            }
            let Some(m) = pl.cut.patch.local_index(ijk) else { continue };
            rep.max_u = rep.max_u.max((sj.u.values[n] - sl.u.values[m]).abs());
            rep.max_v = rep.max_v.max((sj.v.values[n] - sl.v.values[m]).abs());
            rep.samples += 1;
        }
    }
    Ok(rep)
}

/// [`overlap_consistency`] over every intersecting pair.
pub fn all_overlaps<T: Real>(sol: &GlobalSolution<T>) -> Vec<OverlapReport<T>> {
    sol.overlaps()
        .par_iter()
        .map(|o| overlap_consistency(sol, o.j, o.l).expect("pair comes from the overlap list"))
        .collect()
}

/// Checks that every sampled point of `I_{j,l}` lies in the cone with vertex
/// at the midpoint of the centres and height `(r - |x_j - x_l|)/(2c)`.
/// Exact in 1D; in 3D the lens `B_j ∩ B_l` is wider than that cone.
pub fn enclosing_cone_contains<T: Real>(sol: &GlobalSolution<T>, j: usize, l: usize) -> Result<bool> {
    let region = sol
        .overlap(j, l)
        .ok_or_else(|| Error::Precondition(format!("cones of patches {j} and {l} do not intersect")))?;
    let (cj, cl) = (sol.cone(j), sol.cone(l));
    let (a, b) = (sol.patches[j].cut.patch.center_node, sol.patches[l].cut.patch.center_node);
    let steps = (region.max_time / sol.grid.dt).floor().to_usize().unwrap_or(0);
    let pj = &sol.patches[j].cut.patch;
    for k in 0..=steps {
        let s = T::from_usize(k).unwrap() * sol.grid.dt;
        let top = region.max_time * sol.speed - sol.speed * s;
        for n in 0..pj.grid.len() {
            let ijk = sol.grid.unravel(pj.global_index(&sol.grid, n));
            if !cj.contains_distance(sol.node_distance(ijk, j), s) || !cl.contains_distance(sol.node_distance(ijk, l), s) {
                continue;
            }
            // distance to the midpoint in half-cell units, kept integral
            let mut d2: i64 = 0;
            for ax in 0..3 {
                let x = 2 * ijk[ax] as i64 - a[ax] as i64 - b[ax] as i64;
                d2 += x * x;
            }
            let dist = T::from_i64(d2).unwrap().sqrt() * sol.grid.h * T::lit(0.5);
            if dist > top + sol.grid.h * T::lit(1e-9) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Re-cuts the assembled state at `t_restart` with radius `r_new` and solves a
/// fresh set of patches from there, extending validity to
/// `t_restart + (r_new - 2ρ)/(2c)`.
pub fn restart<T: Real>(
    sol: &GlobalSolution<T>,
    t_restart: T,
    r_new: T,
    src: &SourceSpec<T>,
    dmp: &DampingSpec<T>,
    observers: &Observers,
) -> Result<GlobalSolution<T>> {
    let st = sol.assemble(t_restart)?;
    let plan = CutPlan::with_radius(&sol.grid, sol.plan.k, r_new)?;
    solve_all_patches(&st.u, &st.v, st.t, &sol.lattice, &plan, src, dmp, observers)
}

/// Largest `L∞` difference in `u` and `u_t` between the assembled solution and
/// a single solve on the whole grid, over the monolithic run's recorded times
/// inside the validity window.
pub fn compare_monolithic<T: Real>(sol: &GlobalSolution<T>, mono: &Trajectory<T>) -> Result<T> {
    if mono.initial().u.grid != sol.grid {
        return Err(Error::Precondition("monolithic run lives on a different grid".into()));
    }
    let mut worst = T::zero();
    let mut compared = 0;
    for st in &mono.states {
        if st.t < sol.t0 || st.t >= sol.valid_until {
            continue;
        }
        let g = sol.assemble(st.t)?;
        for n in 0..g.u.values.len() {
            worst = worst.max((g.u.values[n] - st.u.values[n]).abs()).max((g.v.values[n] - st.v.values[n]).abs());
        }
        compared += 1;
    }
    if compared == 0 {
        return Err(Error::Precondition("no monolithic state falls inside the validity window".into()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutting::{cut_with_theta, snap_to_node, ThetaCutoff};
    use crate::data::Profile;
    use crate::nonlinearity::Sign;

    fn line(h: f64) -> GridSpec<f64> {
        GridSpec::line(0.0, 1.0, h, h).unwrap()
    }

    #[test]
    fn five_centres_on_unit_interval() {
        let g = line(1.0 / 32.0);
        let lat = build_lattice(&g, 0.5, 1.2).unwrap();
        let xs: Vec<f64> = lat.centers.iter().map(|c| c[0]).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(lat.covering_radius, 0.25);
        assert!(lat.sampled_covering_radius(&g) <= lat.d);
    }

    #[test]
    fn lattice_preconditions() {
        let g = line(1.0 / 32.0);
        assert!(matches!(build_lattice(&g, 0.5, 1.0), Err(Error::Precondition(_))));
        assert!(matches!(build_lattice(&g, 0.3, 1.0), Err(Error::Grid(_))));
        let r = GridSpec::radial(1.0, 1.0 / 32.0, 1.0 / 64.0).unwrap();
        assert!(matches!(build_lattice(&r, 0.25, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn box_lattice_covers() {
        let g = GridSpec::cube([0.0; 3], 1.0, 1.0 / 8.0, 1.0 / 16.0).unwrap();
        let lat = build_lattice(&g, 0.5, 1.5).unwrap();
        assert_eq!(lat.len(), 125);
        let sampled = lat.sampled_covering_radius(&g);
        assert!(sampled <= lat.covering_radius + 1e-12 && sampled <= lat.d);
    }

    #[test]
    fn horizon_tends_to_half_radius() {
        let g = line(1.0 / 256.0);
        let r = 0.5;
        let mut prev = 0.0;
        for d in [0.125, 0.0625, 0.03125, 0.015625] {
            let lat = build_lattice(&g, d, r).unwrap();
            let v = validity_horizon(0.0, r, &lat, 1.0);
            assert_eq!(v, (r - d) / 2.0);
            assert!(v > prev);
            prev = v;
        }
        assert!((r / 2.0 - prev) < 0.01);
    }

    fn run(u0: &Field<f64>, u1: &Field<f64>, d: f64, r: f64, src: SourceSpec<f64>, dmp: DampingSpec<f64>) -> GlobalSolution<f64> {
        let lat = build_lattice(&u0.grid, d, r).unwrap();
        let plan = CutPlan::with_radius(&u0.grid, 100.0, r).unwrap();
        solve_all_patches(u0, u1, 0.0, &lat, &plan, &src, &dmp, &Observers::default()).unwrap()
    }

    fn model() -> (SourceSpec<f64>, DampingSpec<f64>) {
        (SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap(), DampingSpec::power(3.0, 1.0).unwrap())
    }

    #[test]
    fn zero_data_zero_everywhere() {
        let g = line(1.0 / 64.0);
        let z = Field::zeros(g);
        let (src, dmp) = model();
        let sol = run(&z, &z, 0.5, 1.25, src, dmp);
        for p in &sol.patches {
            assert!(p.trajectory.states.iter().all(|s| s.u.max_abs() == 0.0 && s.v.max_abs() == 0.0));
        }
        for o in all_overlaps(&sol) {
            assert_eq!(o.discrepancy(), 0.0);
        }
        let st = sol.assemble(0.25).unwrap();
        assert_eq!(st.u.max_abs(), 0.0);
    }

    #[test]
    fn assembly_at_zero_reproduces_data_and_horizon_is_sharp() {
        let g = line(1.0 / 64.0);
        let u0 = Profile::bump(1.0, 0.6, [0.1, 0.0, 0.0]).sample(&g).unwrap();
        let u1 = Profile::gaussian(0.3, 0.2, [-0.2, 0.0, 0.0]).sample(&g).unwrap().with_dirichlet();
        let (src, dmp) = model();
        let sol = run(&u0, &u1, 0.25, 1.0, src, dmp);
        assert_eq!(sol.valid_until, 0.375);
        let st = sol.assemble(0.0).unwrap();
        assert_eq!(st.u, u0);
        let last_ok = 0.375 - g.dt;
        assert!(sol.assemble(last_ok).is_ok());
        assert!(matches!(sol.assemble(0.375), Err(Error::OutOfValidity { .. })));
        assert!(matches!(sol.assemble(0.5), Err(Error::OutOfValidity { .. })));
    }

    #[test]
    fn overlaps_agree_bitwise_and_match_monolithic() {
        let g = line(1.0 / 128.0);
        let u0 = Profile::bump(1.5, 0.5, [0.05, 0.0, 0.0]).sample(&g).unwrap();
        let u1 = Field::zeros(g);
        let (src, dmp) = model();
        let sol = run(&u0, &u1, 0.25, 1.0, src, dmp);
        let reps = all_overlaps(&sol);
        assert!(!reps.is_empty());
        for o in &reps {
            assert!(o.samples > 0);
            assert!(o.discrepancy() <= 1e-12, "{o:?}");
        }
        let mono = solve_on_patch(&State::new(u0.clone(), u1, 0.0).unwrap(), &g, &src, &dmp, sol.valid_until, &Observers::default())
            .unwrap();
        assert!(compare_monolithic(&sol, &mono).unwrap() <= 1e-12);
    }

    #[test]
    fn enclosing_cone_holds_in_one_dimension() {
        let g = line(1.0 / 64.0);
        let u0 = Profile::bump(1.0, 0.5, [0.0; 3]).sample(&g).unwrap();
        let (src, dmp) = model();
        let sol = run(&u0, &Field::zeros(g), 0.25, 1.0, src, dmp);
        for o in sol.overlaps() {
            assert!(enclosing_cone_contains(&sol, o.j, o.l).unwrap());
        }
    }

    #[test]
    fn distant_patches_stay_at_rest() {
        let g = GridSpec::line(0.0, 2.0, 1.0 / 64.0, 1.0 / 64.0).unwrap();
        let u0 = Profile::bump(1.0, 0.2, [-1.5, 0.0, 0.0]).sample(&g).unwrap();
        let (src, dmp) = model();
        let sol = run(&u0, &Field::zeros(g), 0.5, 1.25, src, dmp);
        for p in &sol.patches {
            let c = p.center()[0];
            let gap = (c - (-1.5)).abs() - 0.2 - 1.25;
            for st in &p.trajectory.states {
                if st.t < gap {
                    assert_eq!(st.u.max_abs(), 0.0, "patch at {c} moved at t = {}", st.t);
                }
            }
        }
    }

    #[test]
    fn mismatched_cutoffs_are_detected() {
        let g = line(1.0 / 128.0);
        let u0 = Profile::bump(1.0, 0.8, [0.0; 3]).sample(&g).unwrap();
        let u1 = Field::zeros(g);
        let r = 1.0;
        let lat = build_lattice(&g, 0.25, r).unwrap();
        let plan = CutPlan::with_radius(&g, 100.0, r).unwrap();
        let cuts = lat
            .nodes
            .iter()
            .enumerate()
            .map(|(j, &node)| {
                let c = g.coord(g.index(node[0], 0, 0));
                // odd patches ramp down from r/4, well inside the cones
                let th = if j % 2 == 1 {
                    ThetaCutoff::with_ramp(c, r, 0.25, 0.9, 0.01)
                } else {
                    ThetaCutoff::new(c, r, g.h).unwrap()
                };
                cut_with_theta(&u0, &u1, node, th, plan.k).unwrap()
            })
            .collect();
        let (src, dmp) = model();
        let sol = solve_patches(&g, cuts, 0.0, &lat, &plan, &src, &dmp, &Observers::default()).unwrap();
        assert!(all_overlaps(&sol).iter().any(|o| o.discrepancy() > 1e-6));
    }

    #[test]
    fn restart_extends_validity() {
        let g = line(1.0 / 64.0);
        let u0 = Profile::bump(0.5, 0.4, [0.0; 3]).sample(&g).unwrap();
        let (src, dmp) = (SourceSpec::new(3.0, 1.0, Sign::Plus).unwrap(), DampingSpec::power(1.0, 1.0).unwrap());
        let sol = run(&u0, &Field::zeros(g), 0.25, 1.0, src, dmp);
        let t_r = 0.25;
        let next = restart(&sol, t_r, 1.0, &src, &dmp, &Observers::default()).unwrap();
        assert_eq!(next.t0, t_r);
        assert_eq!(next.valid_until, t_r + 0.375);
        assert!(next.valid_until > sol.valid_until);
        for o in all_overlaps(&next) {
            assert!(o.discrepancy() <= 1e-12);
        }
        let mono = solve_on_patch(&State::new(u0, Field::zeros(g), 0.0).unwrap(), &g, &src, &dmp, 0.6, &Observers::default())
            .unwrap();
        assert!(compare_monolithic(&next, &mono).unwrap() <= 1e-12);
    }

    #[test]
    fn patch_blow_up_aborts_assembly() {
        let g = line(1.0 / 32.0);
        let u0 = Profile::bump(200.0, 0.5, [0.0; 3]).sample(&g).unwrap();
        let lat = build_lattice(&g, 0.25, 1.0).unwrap();
        let plan = CutPlan::with_radius(&g, 1e6, 1.0).unwrap();
        let (src, dmp) = (SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap(), DampingSpec::power(1.0, 0.1).unwrap());
        let err = solve_all_patches(&u0, &Field::zeros(g), 0.0, &lat, &plan, &src, &dmp, &Observers::default()).unwrap_err();
        assert!(matches!(err, Error::PatchBlowUp { .. }), "{err:?}");
    }

    #[test]
    fn box_patches_agree() {
        let g = GridSpec::cube([0.0; 3], 0.75, 1.0 / 16.0, 1.0 / 32.0).unwrap();
        let u0 = Profile::bump(1.0, 0.4, [0.0; 3]).sample(&g).unwrap();
        let (src, dmp) = model();
        let lat = build_lattice(&g, 0.75, 2.0).unwrap();
        assert_eq!(lat.len(), 27);
        let plan = CutPlan::with_radius(&g, 100.0, 2.0).unwrap();
        let sol = solve_all_patches(&u0, &Field::zeros(g), 0.0, &lat, &plan, &src, &dmp, &Observers::default()).unwrap();
        let reps = all_overlaps(&sol);
        assert!(reps.iter().all(|o| o.discrepancy() <= 1e-12));
        let t = sol.assembly_times();
        assert!(!t.is_empty());
        let node = snap_to_node(&g, [0.0; 3]);
        assert_eq!(node, [12, 12, 12]);
    }
}
