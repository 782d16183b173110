use std::path::Path;

use anyhow::Result;
use semiwave::patching::{all_overlaps, compare_monolithic, solve_all_patches, OverlapReport};
use semiwave::solver::solve_on_patch;
use semiwave::verification::CheckResult;
use semiwave::{Error, Observers, State};
use serde_json::{json, Value};

use super::{config_echo, lattice_for, model_json, plan_for, plan_json, write_states, Report};
use crate::config::RunConfig;
use crate::output::{finite, RunDir, Timings, Verification};

const OVERLAP_HEADER: &str = "j,l,max_u,max_v,samples,max_time";

fn overlaps_csv(reps: &[OverlapReport<f64>]) -> String {
    let mut s = format!("{OVERLAP_HEADER}\n");
    for o in reps {
        s.push_str(&format!("{},{},{},{},{},{}\n", o.j, o.l, o.max_u, o.max_v, o.samples, o.max_time));
    }
    s
}

pub fn patch_run(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mut timings = Timings::start();
    let (u0, u1) = cfg.initial_fields()?;
    let plan = plan_for(cfg, &u0, &u1)?;
    let lattice = lattice_for(cfg, plan.r)?;
    timings.lap("cut");
    let observers = Observers::every(cfg.snapshot_stride);
    let solved = solve_all_patches(&u0, &u1, 0.0, &lattice, &plan, &cfg.source, &cfg.damping, &observers);
    timings.lap("solve");

    let mut ver = Verification::default();
    let mut manifest = json!({
        "command": "patch-run",
        "config": config_echo(cfg),
        "model": model_json(cfg),
        "cut_plan": plan_json(&plan),
        "lattice": {"d": lattice.d, "centers": lattice.len(), "covering_radius": lattice.covering_radius},
    });

    let sol = match solved {
        Ok(sol) => sol,
        Err(e @ (Error::PatchBlowUp { .. } | Error::PatchFailure { .. })) => {
            // assembly is aborted; the report still goes out
            ver.push(CheckResult { name: "patches_completed".into(), value: 1.0, tolerance: 0.0, passed: false });
            manifest["error"] = json!(e.to_string());
            manifest["verification"] = ver.to_value();
            manifest["timings"] = timings.into_value();
            let dir = RunDir::create(out)?;
            let path = dir.commit(&manifest)?;
            return Ok(Report { passed: false, summary: format!("patch-run aborted: {e} -> {}\n", path.display()) });
        }
        Err(e) => return Err(e.into()),
    };
    ver.push(CheckResult { name: "patches_completed".into(), value: 0.0, tolerance: 0.0, passed: true });

    let overlaps = all_overlaps(&sol);
    let worst = overlaps.iter().fold(0.0f64, |a, o| a.max(o.discrepancy()));
    ver.push(CheckResult::at_most("overlap_consistency", worst, cfg.verify.overlap_tol));
    if cfg.verify.monolithic {
        let mono = solve_on_patch(&State::new(u0.clone(), u1.clone(), 0.0)?, &cfg.grid, &cfg.source, &cfg.damping, sol.valid_until, &observers)?;
        if mono.outcome.is_completed() {
            ver.push(CheckResult::at_most("monolithic_agreement", compare_monolithic(&sol, &mono)?, cfg.verify.monolithic_tol));
        } else {
            ver.skip("monolithic_agreement", format!("monolithic run {}", mono.outcome.label()));
        }
    }
    timings.lap("verify");

    let times = sol.assembly_times();
    let global = times.iter().map(|&t| sol.assemble(t)).collect::<semiwave::Result<Vec<_>>>()?;
    let patches: Vec<Value> = sol
        .patches
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let neighbours: Vec<Value> = overlaps
                .iter()
                .filter(|o| o.j == j || o.l == j)
                .map(|o| json!({"patch": if o.j == j { o.l } else { o.j }, "max_discrepancy": o.discrepancy()}))
                .collect();
            json!({
                "index": j,
                "center": sol.lattice.centers[j],
                "r": plan.r,
                "d": lattice.d,
                "outcome": p.trajectory.outcome.label(),
                "cut_bounds_passed": p.cut.report.passed(),
                "cut_margin": finite(p.cut.report.margin()),
                "overlaps": neighbours,
            })
        })
        .collect();

    let dir = RunDir::create(out)?;
    dir.write("overlaps.csv", &overlaps_csv(&overlaps))?;
    let snapshots = write_states(&dir, "global", &global, cfg.grid.dt)?;
    timings.lap("write");

    manifest["valid_until"] = json!(sol.valid_until);
    manifest["cone_speed"] = json!(sol.speed);
    manifest["global_snapshots"] = json!(snapshots);
    manifest["patches"] = json!(patches);
    manifest["max_overlap_discrepancy"] = json!(worst);
    manifest["verification"] = ver.to_value();
    manifest["timings"] = timings.into_value();
    let path = dir.commit(&manifest)?;
    Ok(Report {
        passed: ver.passed(),
        summary: format!(
            "patch-run: {} patches, r = {}, d = {}, valid until {} -> {}\n{}",
            sol.patches.len(),
            plan.r,
            lattice.d,
            sol.valid_until,
            path.display(),
            ver.summary()
        ),
    })
}
