use std::path::Path;

use anyhow::{bail, Result};
use semiwave::solver::{check_apriori, write_ledger, AprioriEnvelope};
use semiwave::verification::{finite_speed_check, weak_residual, write_speed_csv, CheckResult, TestBasis};
use semiwave::{Field, Geometry, Observers, Solver, State, Trajectory};
use serde_json::json;

use super::{config_echo, model_json, write_states, Report};
use crate::config::RunConfig;
use crate::output::{finite, RunDir, Timings, Verification};

/// d'Alembert's solution needs a linear 1D problem started from rest.
fn check_oracle_preconditions(cfg: &RunConfig) -> Result<()> {
    if cfg.grid.geometry != Geometry::Line1D {
        bail!("verify.oracle needs grid.geometry = line1d");
    }
    if !cfg.source.is_zero() || !cfg.damping.is_zero() {
        bail!("verify.oracle needs source.coeff = 0 and damping.a = 0");
    }
    if cfg.data.u1.support_radius() != Some(0.0) {
        bail!("verify.oracle needs data.u1.shape = zero");
    }
    Ok(())
}

fn oracle_error(cfg: &RunConfig, traj: &Trajectory<f64>) -> f64 {
    let last = traj.last();
    let t = last.t - traj.initial().t;
    let p = cfg.data.u0;
    let c = p.center()[0];
    let exact = Field::from_fn(cfg.grid, |x| 0.5 * (p.eval_at_distance((x[0] - t - c).abs()) + p.eval_at_distance((x[0] + t - c).abs())));
    exact.zip_map(&last.u, |a, b| a - b).norm_l2()
}

pub fn verify_trajectory(cfg: &RunConfig, traj: &Trajectory<f64>, ver: &mut Verification) {
    // relative to the initial energy
    let e0 = traj.ledger.first().map_or(0.0, |r| (r.kinetic + r.gradient + r.source_potential).abs());
    let rel = if e0 > 0.0 { traj.max_identity_residual() / e0 } else { traj.max_identity_residual() };
    ver.push(CheckResult::at_most("energy_identity", rel, cfg.verify.energy_tol));
    if cfg.verify.finite_speed {
        match cfg.data_support() {
            Some((c, r)) => match finite_speed_check(traj, c, r) {
                Ok(rep) => ver.push(CheckResult::at_most("finite_speed", rep.max_leakage(), 1e-12)),
                Err(e) => ver.skip("finite_speed", e.to_string()),
            },
            None => ver.skip("finite_speed", "data are not compactly supported"),
        }
    }
    if cfg.verify.weak {
        let span = traj.last().t - traj.initial().t;
        let basis = TestBasis::standard(&cfg.grid, span, cfg.verify.weak_seed);
        match weak_residual(traj, &cfg.source, &cfg.damping, &basis) {
            Ok(r) => ver.push(CheckResult::at_most("weak_residual", r.max(), cfg.verify.weak_tol)),
            Err(e) => ver.skip("weak_residual", e.to_string()),
        }
    }
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Report> {
    if cfg.verify.oracle {
        check_oracle_preconditions(cfg)?;
    }
    let mut timings = Timings::start();
    let (u0, u1) = cfg.initial_fields()?;
    let init = State::new(u0, u1, 0.0)?;
    let solver = Solver::new(cfg.grid, cfg.source, cfg.damping)?;
    let traj = solver.solve(&init, cfg.horizon, &Observers::every(cfg.snapshot_stride))?;
    timings.lap("solve");

    let mut ver = Verification::default();
    ver.push(CheckResult {
        name: "completed".into(),
        value: if traj.outcome.is_completed() { 0.0 } else { 1.0 },
        tolerance: 0.0,
        passed: traj.outcome.is_completed(),
    });
    let mut diagnostics = json!({});
    if traj.outcome.is_completed() {
        verify_trajectory(cfg, &traj, &mut ver);
        if cfg.verify.oracle {
            ver.push(CheckResult::at_most("dalembert_oracle", oracle_error(cfg, &traj), cfg.verify.oracle_tol));
        }
        if !cfg.damping.is_zero() {
            if let Ok(rep) = AprioriEnvelope::fit(&traj, &solver).and_then(|env| check_apriori(&traj, &env)) {
                diagnostics["apriori_envelope"] = json!({
                    "passed": rep.passed(),
                    "min_margin": finite(rep.min_margin),
                    "violations": rep.violations.len(),
                });
            }
        }
    }
    timings.lap("verify");

    let dir = RunDir::create(out)?;
    let mut w = dir.file("ledger.csv")?;
    write_ledger(&mut w, &traj.ledger)?;
    drop(w);
    let snapshots = write_states(&dir, "snapshots", &traj.states, cfg.grid.dt)?;
    if ver.checks.iter().any(|c| c.name == "finite_speed") {
        if let Some((c, r)) = cfg.data_support() {
            let rep = finite_speed_check(&traj, c, r)?;
            write_speed_csv(dir.file("speed.csv")?, &rep)?;
        }
    }
    timings.lap("write");

    let manifest = json!({
        "command": "run",
        "config": config_echo(cfg),
        "model": model_json(cfg),
        "outcome": {"label": traj.outcome.label(), "time": traj.outcome.time()},
        "steps": traj.ledger.len().saturating_sub(1),
        "snapshots": snapshots,
        "max_identity_residual": finite(traj.max_identity_residual()),
        "seeds": {"weak_basis": cfg.verify.weak_seed},
        "verification": ver.to_value(),
        "diagnostics": diagnostics,
        "timings": timings.into_value(),
    });
    let path = dir.commit(&manifest)?;
    Ok(Report {
        passed: ver.passed(),
        summary: format!(
            "run {} at t = {} -> {}\n{}",
            traj.outcome.label(),
            traj.outcome.time(),
            path.display(),
            ver.summary()
        ),
    })
}
