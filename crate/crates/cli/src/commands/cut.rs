use std::path::Path;

use anyhow::Result;
use rayon::prelude::*;
use semiwave::cutting::{cut_data, CutReport, ThetaCutoff};
use semiwave::verification::CheckResult;
use serde_json::json;

use super::{budget, config_echo, lattice_for, plan_for, plan_json, Report};
use crate::config::RunConfig;
use crate::output::{RunDir, Timings, Verification};

const REPORT_HEADER: &str = "x,y,z,grad_cut,chain_bound,u1_norm,total,margin,passed";

fn reports_csv(reps: &[CutReport<f64>]) -> String {
    let mut s = format!("{REPORT_HEADER}\n");
    for r in reps {
        let c = r.center;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c[0],
            c[1],
            c[2],
            r.grad_cut,
            r.chain_bound,
            r.u1_norm,
            r.total(),
            r.margin(),
            r.passed()
        ));
    }
    s
}

/// `θ(ρ)` on `[0, r]` at a quarter of the grid spacing.
fn theta_csv(theta: &ThetaCutoff<f64>, h: f64) -> String {
    let mut s = String::from("rho,theta\n");
    let n = (theta.r / (0.25 * h)).ceil() as usize;
    for i in 0..=n {
        let rho = (i as f64 * 0.25 * h).min(theta.r);
        s.push_str(&format!("{rho},{}\n", theta.eval(rho)));
    }
    s
}

pub fn cut_demo(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mut timings = Timings::start();
    let (u0, u1) = cfg.initial_fields()?;
    let k = budget(cfg, &u0, &u1);
    let plan = plan_for(cfg, &u0, &u1)?;
    let lattice = lattice_for(cfg, plan.r)?;
    let cuts = lattice
        .centers
        .par_iter()
        .map(|&c| cut_data(&u0, &u1, c, &plan))
        .collect::<semiwave::Result<Vec<_>>>()?;
    timings.lap("cut");

    let reports: Vec<CutReport<f64>> = cuts.iter().map(|c| c.report.clone()).collect();
    let failing = reports.iter().filter(|r| !(r.chain_holds() && r.total() < k)).count();
    let min_margin = reports.iter().fold(f64::INFINITY, |a, r| a.min(r.margin()));
    let mut ver = Verification::default();
    ver.push(CheckResult::at_most("cut_bounds", failing as f64, 0.0));

    let dir = RunDir::create(out)?;
    dir.write("cut_reports.csv", &reports_csv(&reports))?;
    if let Some(first) = cuts.first() {
        dir.write("theta.csv", &theta_csv(&first.theta, cfg.grid.h))?;
    }
    timings.lap("write");
    let theta = cuts.first().map(|c| json!({"ramp": [c.theta.ramp.0, c.theta.ramp.1], "mu": c.theta.mu, "grad_bound": c.theta.grad_bound()}));
    let manifest = json!({
        "command": "cut-demo",
        "config": config_echo(cfg),
        "cut_plan": plan_json(&plan),
        "theta": theta,
        "lattice": {"d": lattice.d, "centers": lattice.len(), "covering_radius": lattice.covering_radius},
        "all_strict_passed": reports.iter().all(|r| r.passed()),
        "min_margin": min_margin,
        "verification": ver.to_value(),
        "timings": timings.into_value(),
    });
    let path = dir.commit(&manifest)?;
    Ok(Report {
        passed: ver.passed(),
        summary: format!(
            "cut-demo: K = {k}, r = {}, {} centres, min margin {:.1}% -> {}\n{}",
            plan.r,
            reports.len(),
            100.0 * min_margin,
            path.display(),
            ver.summary()
        ),
    })
}
