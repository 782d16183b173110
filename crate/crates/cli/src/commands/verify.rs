use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use semiwave::solver::{energy, read_ledger, LedgerRow};
use semiwave::verification::CheckResult;
use semiwave::{Outcome, State, Trajectory};
use serde_json::json;

use super::run::verify_trajectory;
use super::{config_echo, read_states, Report};
use crate::config::RunConfig;
use crate::output::{RunDir, Timings, Verification};

/// Largest relative gap between the stored ledger energy and the energy
/// recomputed from the stored snapshot at the same time.
fn ledger_consistency(cfg: &RunConfig, states: &[State<f64>], ledger: &[LedgerRow<f64>]) -> Option<f64> {
    let tol = cfg.grid.dt * 1e-6;
    let mut worst: Option<f64> = None;
    for st in states {
        let Some(row) = ledger.iter().find(|r| (r.t - st.t).abs() <= tol) else {
            continue;
        };
        let e = energy(st, &cfg.source);
        let stored = row.kinetic + row.gradient + row.source_potential;
        let gap = (e.total() - stored).abs() / (1.0 + stored.abs());
        worst = Some(worst.map_or(gap, |w| w.max(gap)));
    }
    worst
}

pub fn verify(cfg: &RunConfig, run_dir: &Path, out: Option<&Path>) -> Result<Report> {
    if !run_dir.is_dir() {
        bail!("{} is not a directory", run_dir.display());
    }
    let sub = ["snapshots", "global"].into_iter().map(|s| run_dir.join(s)).find(|p| p.join("index.csv").is_file());
    let Some(sub) = sub else {
        bail!("{} holds no stored trajectory (expected snapshots/index.csv or global/index.csv)", run_dir.display());
    };
    let mut timings = Timings::start();
    let states = read_states(&sub, &cfg.grid)?;
    if states.is_empty() {
        bail!("{} lists no snapshots", sub.display());
    }
    let ledger_path = run_dir.join("ledger.csv");
    let ledger = if ledger_path.is_file() {
        let f = File::open(&ledger_path).with_context(|| format!("opening {}", ledger_path.display()))?;
        Some(read_ledger::<f64, _>(BufReader::new(f))?)
    } else {
        None
    };
    timings.lap("read");

    let stride = match states.as_slice() {
        [a, b, ..] => ((b.t - a.t) / cfg.grid.dt).round().max(1.0) as usize,
        _ => 1,
    };
    let traj = Trajectory {
        outcome: Outcome::Completed(states.last().map(|s| s.t).unwrap_or(0.0)),
        ledger: ledger.clone().unwrap_or_default(),
        dt: cfg.grid.dt,
        stride,
        states,
    };
    let mut ver = Verification::default();
    match &ledger {
        Some(rows) => {
            if let Some(gap) = ledger_consistency(cfg, &traj.states, rows) {
                ver.push(CheckResult::at_most("ledger_consistency", gap, 1e-9));
            }
        }
        None => ver.skip("energy_identity", "no ledger.csv in the run directory"),
    }
    let mut scoped = cfg.clone();
    if ledger.is_none() {
        scoped.verify.energy_tol = f64::INFINITY;
    }
    verify_trajectory(&scoped, &traj, &mut ver);
    if ledger.is_none() {
        ver.checks.retain(|c| c.name != "energy_identity");
    }
    timings.lap("verify");

    let summary = format!("verify {} ({} snapshots)\n{}", run_dir.display(), traj.states.len(), ver.summary());
    if let Some(out) = out {
        let manifest = json!({
            "command": "verify",
            "config": config_echo(cfg),
            "run_dir": run_dir.display().to_string(),
            "snapshots": traj.states.len(),
            "seeds": {"weak_basis": cfg.verify.weak_seed},
            "verification": ver.to_value(),
            "timings": timings.into_value(),
        });
        RunDir::create(out)?.commit(&manifest)?;
    }
    Ok(Report { passed: ver.passed(), summary })
}
