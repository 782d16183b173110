//! Uniform grids, nodal fields and their discrete norms.
//!
//! Every node owns the dual cell `[x - h/2, x + h/2]` (per axis) clipped to the
//! domain, and integrals are midpoint sums over those cells. In `Radial3D` the
//! cells are spherical shells, so the `4πρ²` weight is exact per shell.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    /// Interval with Dirichlet ends.
    Line1D,
    /// Ball in R³ for radially symmetric fields; node 0 is the centre.
    Radial3D,
    /// Axis-aligned cube in R³ with Dirichlet faces.
    Box3D,
}

impl Geometry {
    /// Largest admissible `dt / h`.
    pub fn cfl_max(self) -> f64 {
        match self {
            Geometry::Line1D => 1.0,
            Geometry::Radial3D => 0.9,
            Geometry::Box3D => 0.5,
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            Geometry::Line1D => 1,
            Geometry::Radial3D | Geometry::Box3D => 3,
        }
    }

    /// Volume of the unit ball in this geometry's dimension.
    pub fn unit_ball_volume(self) -> f64 {
        match self.dimension() {
            1 => 2.0,
            _ => 4.0 * std::f64::consts::PI / 3.0,
        }
    }

    pub fn parse(s: &str) -> Option<Geometry> {
        match s.to_ascii_lowercase().as_str() {
            "line1d" | "line" => Some(Geometry::Line1D),
            "radial3d" | "radial" => Some(Geometry::Radial3D),
            "box3d" | "box" => Some(Geometry::Box3D),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Line1D => "line1d",
            Geometry::Radial3D => "radial3d",
            Geometry::Box3D => "box3d",
        }
    }
}

/// Ball of free nodes inside a grid; nodes at distance `>= radius` from the
/// centre node are held at zero. Distances are computed from integer offsets
/// so every patch that shares `h` and `radius` classifies nodes identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeBall<T> {
    pub center: [usize; 3],
    pub radius: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub geometry: Geometry,
    /// Coordinates of node (0, 0, 0).
    pub origin: [T; 3],
    /// Node counts per axis; unused axes hold 1.
    pub dims: [usize; 3],
    pub h: T,
    pub dt: T,
    pub ball: Option<NodeBall<T>>,
}

pub const MIN_NODES_PER_AXIS: usize = 8;

impl<T: Real> GridSpec<T> {
    pub fn new(geometry: Geometry, origin: [T; 3], dims: [usize; 3], h: T, dt: T) -> Result<Self> {
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::Grid(format!("spacing h must be positive, got {h}")));
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::Grid(format!("time step dt must be positive, got {dt}")));
        }
        let courant = (dt / h).as_f64();
        if courant > geometry.cfl_max() * (1.0 + 1e-12) {
            return Err(Error::Grid(format!(
                "dt/h = {courant} exceeds the {} limit {}",
                geometry.name(),
                geometry.cfl_max()
            )));
        }
        let used = match geometry {
            Geometry::Line1D | Geometry::Radial3D => 1,
            Geometry::Box3D => 3,
        };
        for (axis, &n) in dims.iter().enumerate() {
            if axis < used && n < MIN_NODES_PER_AXIS {
                return Err(Error::Grid(format!(
                    "axis {axis} has {n} nodes, need at least {MIN_NODES_PER_AXIS}"
                )));
            }
            if axis >= used && n != 1 {
                return Err(Error::Grid(format!("axis {axis} unused by {} but has {n} nodes", geometry.name())));
            }
        }
        Ok(GridSpec { geometry, origin, dims, h, dt, ball: None })
    }

    /// Interval `[center - half_width, center + half_width]`.
    pub fn line(center: T, half_width: T, h: T, dt: T) -> Result<Self> {
        let cells = cells_for(half_width + half_width, h)?;
        Self::new(
            Geometry::Line1D,
            [center - half_width, T::zero(), T::zero()],
            [cells + 1, 1, 1],
            h,
            dt,
        )
    }

    /// Radial grid on `[0, radius]`.
    pub fn radial(radius: T, h: T, dt: T) -> Result<Self> {
        let cells = cells_for(radius, h)?;
        Self::new(Geometry::Radial3D, [T::zero(); 3], [cells + 1, 1, 1], h, dt)
    }

    /// Cube of half-width `half_width` about `center`.
    pub fn cube(center: [T; 3], half_width: T, h: T, dt: T) -> Result<Self> {
        let n = cells_for(half_width + half_width, h)? + 1;
        Self::new(
            Geometry::Box3D,
            [center[0] - half_width, center[1] - half_width, center[2] - half_width],
            [n, n, n],
            h,
            dt,
        )
    }

    pub fn with_ball(mut self, ball: NodeBall<T>) -> Self {
        self.ball = Some(ball);
        self
    }

    pub fn with_dt(mut self, dt: T) -> Result<Self> {
        let g = GridSpec::new(self.geometry, self.origin, self.dims, self.h, dt)?;
        self.dt = g.dt;
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.geometry.dimension()
    }

    /// Flat index of node `(i, j, k)`; the first axis varies slowest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn unravel(&self, n: usize) -> [usize; 3] {
        let k = n % self.dims[2];
        let rest = n / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], k]
    }

    pub fn coord(&self, n: usize) -> [T; 3] {
        let ijk = self.unravel(n);
        let mut x = self.origin;
        for a in 0..3 {
            x[a] = self.origin[a] + T::from_usize(ijk[a]).unwrap() * self.h;
        }
        x
    }

    /// Half-width (Line1D, Box3D first axis) or radius (Radial3D).
    pub fn extent(&self) -> T {
        let cells = T::from_usize(self.dims[0] - 1).unwrap() * self.h;
        match self.geometry {
            Geometry::Radial3D => cells,
            _ => cells * T::lit(0.5),
        }
    }

    /// Centre of the computational domain.
    pub fn center(&self) -> [T; 3] {
        match self.geometry {
            Geometry::Radial3D => [T::zero(); 3],
            _ => {
                let mut c = self.origin;
                for (a, ca) in c.iter_mut().enumerate() {
                    *ca = self.origin[a] + T::from_usize(self.dims[a] - 1).unwrap() * self.h * T::lit(0.5);
                }
                c
            }
        }
    }

    pub fn courant(&self) -> T {
        self.dt / self.h
    }

    /// Speed at which the explicit stencil spreads information: one cell per step.
    pub fn cone_speed(&self) -> T {
        (self.h / self.dt).max(T::one())
    }

    /// Node lies on the Dirichlet boundary (box faces, outer shell, or outside the ball).
    pub fn is_pinned(&self, n: usize) -> bool {
        let ijk = self.unravel(n);
        let edge = match self.geometry {
            Geometry::Line1D => ijk[0] == 0 || ijk[0] + 1 == self.dims[0],
            Geometry::Radial3D => ijk[0] + 1 == self.dims[0],
            Geometry::Box3D => (0..3).any(|a| ijk[a] == 0 || ijk[a] + 1 == self.dims[a]),
        };
        if edge {
            return true;
        }
        match &self.ball {
            Some(b) => self.node_distance_sq(n, b.center) * self.h * self.h >= b.radius * b.radius,
            None => false,
        }
    }

    /// Squared distance, in cell units, between node `n` and node `c`.
    pub fn node_distance_sq(&self, n: usize, c: [usize; 3]) -> T {
        let ijk = self.unravel(n);
        let mut d2: i64 = 0;
        for a in 0..3 {
            let d = ijk[a] as i64 - c[a] as i64;
            d2 += d * d;
        }
        T::from_i64(d2).unwrap()
    }

    /// Euclidean distance from node `n` to a point (for Radial3D, the radius).
    pub fn distance_to(&self, n: usize, p: [T; 3]) -> T {
        let x = self.coord(n);
        match self.geometry {
            Geometry::Line1D => (x[0] - p[0]).abs(),
            Geometry::Radial3D => x[0],
            Geometry::Box3D => {
                let d: T = (0..3).map(|a| (x[a] - p[a]) * (x[a] - p[a])).sum();
                d.sqrt()
            }
        }
    }

    /// Quadrature weight (dual-cell measure) of every node.
    pub fn weights(&self) -> Vec<T> {
        let h = self.h;
        let half = h * T::lit(0.5);
        match self.geometry {
            Geometry::Line1D => {
                let n = self.dims[0];
                (0..n).map(|i| if i == 0 || i + 1 == n { half } else { h }).collect()
            }
            Geometry::Radial3D => {
                let n = self.dims[0];
                let big_r = T::from_usize(n - 1).unwrap() * h;
                let c = T::lit(4.0) * T::PI() / T::lit(3.0);
                (0..n)
                    .map(|i| {
                        let rho = T::from_usize(i).unwrap() * h;
                        let lo = (rho - half).max(T::zero());
                        let hi = (rho + half).min(big_r);
                        c * (hi * hi * hi - lo * lo * lo)
                    })
                    .collect()
            }
            Geometry::Box3D => {
                let axis = |a: usize| -> Vec<T> {
                    let n = self.dims[a];
                    (0..n).map(|i| if i == 0 || i + 1 == n { half } else { h }).collect()
                };
                let (wx, wy, wz) = (axis(0), axis(1), axis(2));
                let mut w = Vec::with_capacity(self.len());
                for &a in &wx {
                    for &b in &wy {
                        for &c in &wz {
                            w.push(a * b * c);
                        }
                    }
                }
                w
            }
        }
    }

    /// Measure of the whole domain.
    pub fn volume(&self) -> T {
        self.weights().into_iter().sum()
    }
}

fn cells_for<T: Real>(length: T, h: T) -> Result<usize> {
    if !(h > T::zero()) || !(length > T::zero()) {
        return Err(Error::Grid(format!("need positive length and spacing, got {length} and {h}")));
    }
    let c = (length / h).as_f64();
    let r = c.round();
    if (c - r).abs() > 1e-6 * c.max(1.0) {
        return Err(Error::Grid(format!("length {length} is not a multiple of h = {h}")));
    }
    Ok(r as usize)
}

/// Nodal values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub grid: GridSpec<T>,
    pub values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: GridSpec<T>) -> Self {
        Field { values: vec![T::zero(); grid.len()], grid }
    }

    pub fn from_values(grid: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        Ok(Field { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: GridSpec<T>, f: impl Fn([T; 3]) -> T) -> Self {
        let values = (0..grid.len()).map(|n| f(grid.coord(n))).collect();
        Field { grid, values }
    }

    /// Zeroes every pinned node.
    pub fn enforce_dirichlet(&mut self) {
        for n in 0..self.values.len() {
            if self.grid.is_pinned(n) {
                self.values[n] = T::zero();
            }
        }
    }

    pub fn with_dirichlet(mut self) -> Self {
        self.enforce_dirichlet();
        self
    }

    pub fn satisfies_dirichlet(&self) -> bool {
        (0..self.values.len()).all(|n| !self.grid.is_pinned(n) || self.values[n] == T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Field<T> {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Field<T>, f: impl Fn(T, T) -> T) -> Field<T> {
        debug_assert_eq!(self.values.len(), other.values.len());
        Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Discrete `L^q` norm; `q = ∞` gives the max norm.
    pub fn norm_lq(&self, q: T) -> Result<T> {
        norm_lq_weighted(&self.values, &self.grid.weights(), q)
    }

    pub fn norm_l2(&self) -> T {
        let w = self.grid.weights();
        sum_sq(&self.values, &w).sqrt()
    }

    /// Gradient vector at every node: centred differences, one-sided at edges.
    pub fn gradient(&self) -> Vec<[T; 3]> {
        let g = &self.grid;
        let h = g.h;
        let two_h = h + h;
        let u = &self.values;
        let axes = match g.geometry {
            Geometry::Box3D => 3,
            _ => 1,
        };
        let strides = [g.dims[1] * g.dims[2], g.dims[2], 1];
        let mut out = vec![[T::zero(); 3]; g.len()];
        for (n, o) in out.iter_mut().enumerate() {
            let ijk = g.unravel(n);
            for a in 0..axes {
                let i = ijk[a];
                let len = g.dims[a];
                let s = strides[a];
                o[a] = if i == 0 {
                    if g.geometry == Geometry::Radial3D {
                        T::zero()
                    } else {
                        (u[n + s] - u[n]) / h
                    }
                } else if i + 1 == len {
                    (u[n] - u[n - s]) / h
                } else {
                    (u[n + s] - u[n - s]) / two_h
                };
            }
        }
        out
    }

    /// `|∇u|²` at every node.
    pub fn gradient_sq(&self) -> Vec<T> {
        self.gradient()
            .into_iter()
            .map(|g| g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
            .collect()
    }

    /// Discrete `|∇u|_2`.
    pub fn seminorm_grad(&self) -> T {
        let w = self.grid.weights();
        self.gradient_sq()
            .iter()
            .zip(&w)
            .fold(T::zero(), |acc, (&g, &w)| acc + w * g)
            .sqrt()
    }

    pub fn norm_h1(&self) -> T {
        let l2 = self.norm_l2();
        let gr = self.seminorm_grad();
        (l2 * l2 + gr * gr).sqrt()
    }

    /// Interpolation surrogate `|u|_2^ε ‖u‖_{H¹}^{1-ε}` for the `H^{1-ε}` norm.
    pub fn norm_h1me(&self, eps: T) -> Result<T> {
        if !(eps > T::zero() && eps < T::one()) {
            return Err(Error::Domain(format!("fractional exponent must lie in (0, 1), got {eps}")));
        }
        Ok(interpolation_norm(self.norm_l2(), self.norm_h1(), eps))
    }
}

/// `|u|_2^ε ‖u‖_{H¹}^{1-ε}`, with the zero field mapped to 0.
pub fn interpolation_norm<T: Real>(l2: T, h1: T, eps: T) -> T {
    if l2 == T::zero() || h1 == T::zero() {
        return T::zero();
    }
    l2.powf(eps) * h1.powf(T::one() - eps)
}

pub(crate) fn sum_sq<T: Real>(values: &[T], weights: &[T]) -> T {
    values
        .iter()
        .zip(weights)
        .fold(T::zero(), |acc, (&v, &w)| acc + w * v * v)
}

/// Weighted `L^q` norm over explicit weights.
pub fn norm_lq_weighted<T: Real>(values: &[T], weights: &[T], q: T) -> Result<T> {
    if q.is_nan() || q < T::one() {
        return Err(Error::Domain(format!("L^q norm needs q >= 1, got {q}")));
    }
    if q.is_infinite() {
        return Ok(values.iter().fold(T::zero(), |m, v| m.max(v.abs())));
    }
    if q == T::lit(2.0) {
        return Ok(sum_sq(values, weights).sqrt());
    }
    // scale by the max to keep |u|^q in range
    let scale = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return Ok(T::zero());
    }
    let s = values
        .iter()
        .zip(weights)
        .fold(T::zero(), |acc, (&v, &w)| acc + w * (v.abs() / scale).powf(q));
    Ok(scale * s.powf(T::one() / q))
}

fn fmt_num<T: Real>(v: T) -> String {
    format!("{}", v.as_f64())
}

/// Writes the `x[,y[,z]],u,ut` snapshot CSV, one node per line in index order.
pub fn write_snapshot<T: Real, W: Write>(mut w: W, u: &Field<T>, ut: &Field<T>) -> Result<()> {
    let g = &u.grid;
    if ut.values.len() != u.values.len() {
        return Err(Error::Grid("u and ut live on different grids".into()));
    }
    match g.geometry {
        Geometry::Box3D => writeln!(w, "x,y,z,u,ut")?,
        _ => writeln!(w, "x,u,ut")?,
    }
    for n in 0..g.len() {
        let x = g.coord(n);
        match g.geometry {
            Geometry::Box3D => writeln!(
                w,
                "{},{},{},{},{}",
                fmt_num(x[0]),
                fmt_num(x[1]),
                fmt_num(x[2]),
                fmt_num(u.values[n]),
                fmt_num(ut.values[n])
            )?,
            _ => writeln!(w, "{},{},{}", fmt_num(x[0]), fmt_num(u.values[n]), fmt_num(ut.values[n]))?,
        }
    }
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`] onto `grid`.
pub fn read_snapshot<T: Real, R: BufRead>(r: R, grid: &GridSpec<T>) -> Result<(Field<T>, Field<T>)> {
    let coords = match grid.geometry {
        Geometry::Box3D => 3,
        _ => 1,
    };
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty snapshot".into()))??;
    let expected = if coords == 3 { "x,y,z,u,ut" } else { "x,u,ut" };
    if header.trim() != expected {
        return Err(Error::Format(format!("snapshot header {header:?}, expected {expected:?}")));
    }
    let mut u = Vec::with_capacity(grid.len());
    let mut ut = Vec::with_capacity(grid.len());
    let tol = grid.h.as_f64() * 1e-6;
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if n >= grid.len() {
            return Err(Error::Format("snapshot has more rows than grid nodes".into()));
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("row {}: {e}", n + 2)))?;
        if cols.len() != coords + 2 {
            return Err(Error::Format(format!("row {} has {} columns", n + 2, cols.len())));
        }
        let x = grid.coord(n);
        for a in 0..coords {
            if (cols[a] - x[a].as_f64()).abs() > tol {
                return Err(Error::Format(format!("row {} coordinate mismatch", n + 2)));
            }
        }
        u.push(T::lit(cols[coords]));
        ut.push(T::lit(cols[coords + 1]));
    }
    if u.len() != grid.len() {
        return Err(Error::Format(format!("snapshot has {} rows, grid has {} nodes", u.len(), grid.len())));
    }
    Ok((Field::from_values(*grid, u)?, Field::from_values(*grid, ut)?))
}
