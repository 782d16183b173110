use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::nonlinearity::{DampingSpec, SourceSpec};
use crate::scalar::Real;
use crate::solver::{Observers, Solver, State, Trajectory};

/// Absolute threshold standing in for "zero" on fields of unit amplitude.
pub const MACHINE_TOLERANCE: f64 = 1e-12;

pub const SPEED_CSV_HEADER: &str = "t,leakage,dod_discrepancy";

/// Time series for the two finite-speed properties. A series that a check
/// does not produce is left empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedReport<T> {
    /// Support radius of the initial data.
    pub r: T,
    pub times: Vec<T>,
    /// Largest `|u|` or `|u_t|` outside `B(x0, R + ct + h)`.
    pub leakage: Vec<T>,
    /// Largest `|u - v|` or `|u_t - v_t|` inside `B(x0, R - ct - h)`.
    pub dod_discrepancy: Vec<T>,
}

impl<T: Real> SpeedReport<T> {
    pub fn max_leakage(&self) -> T {
        self.leakage.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    pub fn max_dod_discrepancy(&self) -> T {
        self.dod_discrepancy.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

pub fn write_speed_csv<T: Real, W: Write>(mut w: W, rep: &SpeedReport<T>) -> Result<()> {
    writeln!(w, "{SPEED_CSV_HEADER}")?;
    for (i, t) in rep.times.iter().enumerate() {
        let l = rep.leakage.get(i).map(|x| x.as_f64().to_string()).unwrap_or_default();
        let d = rep.dod_discrepancy.get(i).map(|x| x.as_f64().to_string()).unwrap_or_default();
        writeln!(w, "{},{l},{d}", t.as_f64())?;
    }
    Ok(())
}

fn supported_in<T: Real>(f: &Field<T>, x0: [T; 3], r: T) -> bool {
    (0..f.grid.len()).all(|n| f.values[n] == T::zero() || f.grid.distance_to(n, x0) <= r)
}

/// Leakage of the trajectory outside the numerical cone `B(x0, R + ct + h)`,
/// with `c` the grid's cone speed.
pub fn finite_speed_check<T: Real>(traj: &Trajectory<T>, x0: [T; 3], r: T) -> Result<SpeedReport<T>> {
    let init = traj.initial();
    if !supported_in(&init.u, x0, r) || !supported_in(&init.v, x0, r) {
        return Err(Error::Precondition(format!("initial data are not supported in the ball of radius {r}")));
    }
    let g = &init.u.grid;
    let c = g.cone_speed();
    let dist: Vec<T> = (0..g.len()).map(|n| g.distance_to(n, x0)).collect();
    let mut rep = SpeedReport { r, times: Vec::new(), leakage: Vec::new(), dod_discrepancy: Vec::new() };
    for st in &traj.states {
        let s = st.t - init.t;
        let reach = r + c * s + g.h;
        let mut worst = T::zero();
        for n in 0..g.len() {
            if dist[n] > reach {
                worst = worst.max(st.u.values[n].abs()).max(st.v.values[n].abs());
            }
        }
        rep.times.push(st.t);
        rep.leakage.push(worst);
    }
    Ok(rep)
}

/// Runs two data pairs that agree on `B(x0, R)` and reports their largest
/// difference inside `B(x0, R - ct - h)` at every recorded time below `R/c`.
pub fn domain_of_dependence_check<T: Real>(
    a: &State<T>,
    b: &State<T>,
    x0: [T; 3],
    r: T,
    grid: &GridSpec<T>,
    src: &SourceSpec<T>,
    dmp: &DampingSpec<T>,
    observers: &Observers,
) -> Result<SpeedReport<T>> {
    if a.u.grid != *grid || b.u.grid != *grid {
        return Err(Error::Precondition("both data pairs must live on the given grid".into()));
    }
    let dist: Vec<T> = (0..grid.len()).map(|n| grid.distance_to(n, x0)).collect();
    for n in 0..grid.len() {
        if dist[n] <= r && (a.u.values[n] != b.u.values[n] || a.v.values[n] != b.v.values[n]) {
            return Err(Error::Precondition(format!("data pairs differ inside the ball of radius {r}")));
        }
    }
    let c = grid.cone_speed();
    let horizon = r / c;
    let solver = Solver::new(*grid, *src, *dmp)?;
    let ta = solver.solve(a, horizon, observers)?;
    let tb = solver.solve(b, horizon, observers)?;
    let mut rep = SpeedReport { r, times: Vec::new(), leakage: Vec::new(), dod_discrepancy: Vec::new() };
    for sa in &ta.states {
        let s = sa.t - a.t;
        if s >= horizon {
            continue;
        }
        let Some(sb) = tb.states.iter().find(|x| x.t == sa.t) else { continue };
        let reach = r - c * s - grid.h;
        let mut worst = T::zero();
        for n in 0..grid.len() {
            if dist[n] <= reach {
                worst = worst.max((sa.u.values[n] - sb.u.values[n]).abs()).max((sa.v.values[n] - sb.v.values[n]).abs());
            }
        }
        rep.times.push(sa.t);
        rep.dod_discrepancy.push(worst);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Profile;
    use crate::nonlinearity::Sign;
    use crate::solver::solve_on_patch;

    fn bump_run(m: f64, ratio: f64) -> (Trajectory<f64>, f64) {
        let g = GridSpec::line(0.0, 1.0, 1.0 / 128.0, ratio / 128.0).unwrap();
        let r = 0.25;
        let u0 = Profile::bump(1.0, r, [0.0; 3]).sample(&g).unwrap();
        let u1 = Profile::bump(-0.5, r, [0.0; 3]).sample(&g).unwrap();
        let src = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap();
        let traj =
            solve_on_patch(&State::new(u0, u1, 0.0).unwrap(), &g, &src, &DampingSpec::power(m, 1.0).unwrap(), 0.6, &Observers::default())
                .unwrap();
        (traj, r)
    }

    #[test]
    fn zero_data_has_no_leakage() {
        let g = GridSpec::line(0.0, 1.0, 1.0 / 32.0, 1.0 / 32.0).unwrap();
        let traj = solve_on_patch(&State::rest(g), &g, &SourceSpec::zero(), &DampingSpec::power(1.0, 1.0).unwrap(), 0.5, &Observers::default())
            .unwrap();
        assert_eq!(finite_speed_check(&traj, [0.0; 3], 0.1).unwrap().max_leakage(), 0.0);
    }

    #[test]
    fn leakage_is_zero_for_linear_and_cubic_damping() {
        for m in [1.0, 3.0] {
            for ratio in [1.0, 0.5] {
                let (traj, r) = bump_run(m, ratio);
                let rep = finite_speed_check(&traj, [0.0; 3], r).unwrap();
                assert_eq!(rep.max_leakage(), 0.0, "m = {m}, ratio = {ratio}");
                assert_eq!(rep.times.len(), traj.states.len());
            }
        }
    }

    #[test]
    fn unsupported_data_rejected() {
        let (traj, _) = bump_run(1.0, 1.0);
        assert!(finite_speed_check(&traj, [0.0; 3], 0.1).is_err());
    }

    #[test]
    fn numerical_cone_is_sharp() {
        // after k steps the displacement reaches exactly k cells past the support
        let (traj, r) = bump_run(1.0, 1.0);
        let g = traj.initial().u.grid;
        let k = 20;
        let st = &traj.states[k];
        let reach = r + k as f64 * g.h;
        let far = (0..g.len()).filter(|&n| g.distance_to(n, [0.0; 3]) > reach - 1.5 * g.h).any(|n| st.u.values[n] != 0.0);
        assert!(far);
    }

    fn paired(differ: bool) -> SpeedReport<f64> {
        let g = GridSpec::line(0.0, 1.0, 1.0 / 128.0, 1.0 / 128.0).unwrap();
        let r = 0.4;
        let base = Profile::bump(1.0, 0.3, [0.0; 3]).sample(&g).unwrap();
        let extra = Profile::bump(0.7, 0.2, [0.7, 0.0, 0.0]).sample(&g).unwrap();
        let other = if differ { base.zip_map(&extra, |a, b| a + b) } else { base.clone() };
        let a = State::new(base, Field::zeros(g), 0.0).unwrap();
        let b = State::new(other, Field::zeros(g), 0.0).unwrap();
        let src = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap();
        domain_of_dependence_check(&a, &b, [0.0; 3], r, &g, &src, &DampingSpec::power(3.0, 1.0).unwrap(), &Observers::default()).unwrap()
    }

    #[test]
    fn identical_pairs_agree() {
        assert_eq!(paired(false).max_dod_discrepancy(), 0.0);
    }

    #[test]
    fn pairs_differing_outside_agree_inside_the_shrinking_ball() {
        let rep = paired(true);
        assert_eq!(rep.max_dod_discrepancy(), 0.0);
        assert!(rep.times.iter().all(|&t| t < 0.4));
    }

    #[test]
    fn pairs_differing_outside_do_differ_outside() {
        let g = GridSpec::<f64>::line(0.0, 1.0, 1.0 / 128.0, 1.0 / 128.0).unwrap();
        let base = Profile::bump(1.0, 0.3, [0.0; 3]).sample(&g).unwrap();
        let extra = Profile::bump(0.7, 0.2, [0.7, 0.0, 0.0]).sample(&g).unwrap();
        let other = base.zip_map(&extra, |a, b| a + b);
        let src = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap();
        let dmp = DampingSpec::power(3.0, 1.0).unwrap();
        let ta = solve_on_patch(&State::new(base, Field::zeros(g), 0.0).unwrap(), &g, &src, &dmp, 0.3, &Observers::default()).unwrap();
        let tb = solve_on_patch(&State::new(other, Field::zeros(g), 0.0).unwrap(), &g, &src, &dmp, 0.3, &Observers::default()).unwrap();
        let (a, b) = (ta.last(), tb.last());
        // the extra pulse reaches x = 0.3 by t = 0.3
        let n = (0..g.len()).find(|&n| (g.coord(n)[0] - 0.375f64).abs() < 1e-9).unwrap();
        assert!((a.u.values[n] - b.u.values[n]).abs() > 1e-6f64);
    }

    #[test]
    fn data_differing_inside_rejected() {
        let g = GridSpec::line(0.0, 1.0, 1.0 / 32.0, 1.0 / 32.0).unwrap();
        let a = State::new(Profile::bump(1.0, 0.3, [0.0; 3]).sample(&g).unwrap(), Field::zeros(g), 0.0).unwrap();
        let b = State::rest(g);
        let r = domain_of_dependence_check(&a, &b, [0.0; 3], 0.2, &g, &SourceSpec::zero(), &DampingSpec::power(1.0, 1.0).unwrap(), &Observers::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn box_finite_speed() {
        let g = GridSpec::cube([0.0; 3], 0.75, 1.0 / 16.0, 1.0 / 32.0).unwrap();
        let r = 0.25;
        let u0 = Profile::bump(1.0, r, [0.0; 3]).sample(&g).unwrap();
        let src = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap();
        let traj = solve_on_patch(&State::new(u0, Field::zeros(g), 0.0).unwrap(), &g, &src, &DampingSpec::power(3.0, 1.0).unwrap(), 0.2, &Observers::default())
            .unwrap();
        assert_eq!(finite_speed_check(&traj, [0.0; 3], r).unwrap().max_leakage(), 0.0);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rep = paired(false);
        let mut buf = Vec::new();
        write_speed_csv(&mut buf, &rep).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(SPEED_CSV_HEADER));
        assert_eq!(text.lines().count(), rep.times.len() + 1);
    }
}
