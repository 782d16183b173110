use std::path::Path;

use anyhow::Result;
use semiwave::phase::{sweep as run_sweep, CellOutcome, PhaseDiagram, PHASE_CSV_HEADER};
use semiwave::verification::CheckResult;
use serde_json::{json, Value};

use super::{config_echo, Report};
use crate::config::RunConfig;
use crate::output::{RunDir, Timings, Verification};

/// Number of `(p, m < p)` cells whose blow-up time grows with the data scale.
fn monotonicity_violations(diagrams: &[PhaseDiagram<f64>]) -> usize {
    let Some(first) = diagrams.first() else {
        return 0;
    };
    let mut bad = 0;
    for ip in 0..first.p_values.len() {
        for im in 0..first.m_values.len() {
            let mut rows: Vec<(f64, f64)> = diagrams
                .iter()
                .filter_map(|d| d.cell(ip, im).outcome.blowup_time().map(|t| (d.lambda, t)))
                .collect();
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            if rows.windows(2).any(|w| w[1].1 > w[0].1) {
                bad += 1;
            }
        }
    }
    bad
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let s = &cfg.sweep;
    let mut timings = Timings::start();
    let diagrams = s
        .lambda
        .iter()
        .map(|&l| run_sweep(&s.p, &s.m, l, &s.protocol))
        .collect::<semiwave::Result<Vec<_>>>()?;
    timings.lap("sweep");

    let mut ver = Verification::default();
    ver.push(CheckResult::at_most("blowup_time_monotone", monotonicity_violations(&diagrams) as f64, 0.0));

    let dir = RunDir::create(out)?;
    let mut csv = format!("{PHASE_CSV_HEADER}\n");
    let mut per_lambda: Vec<Value> = Vec::new();
    let mut lines = String::new();
    for d in &diagrams {
        csv.extend(d.to_csv().lines().skip(1).map(|l| format!("{l}\n")));
        dir.write(&format!("region_lambda_{}.dat", d.lambda), &d.to_gnuplot())?;
        let dich = d.dichotomy();
        let failed = d.cells.iter().filter(|c| c.outcome == CellOutcome::Failed).count();
        per_lambda.push(json!({
            "lambda": d.lambda,
            "strong_damping_survived": [dich.strong_survived, dich.strong_total],
            "weak_damping_blew_up": [dich.weak_blew_up, dich.weak_total],
            "failed_cells": failed,
        }));
        lines.push_str(&format!(
            "  lambda {:<5} m>=p survived {}/{}, m<p blew up {}/{}, failed {failed}\n",
            d.lambda, dich.strong_survived, dich.strong_total, dich.weak_blew_up, dich.weak_total
        ));
    }
    dir.write("phase.csv", &csv)?;
    timings.lap("write");

    let manifest = json!({
        "command": "sweep",
        "config": config_echo(cfg),
        "protocol": s.protocol.descriptor(),
        "p": s.p,
        "m": s.m,
        "lambda": s.lambda,
        "dichotomy": per_lambda,
        "verification": ver.to_value(),
        "timings": timings.into_value(),
    });
    let path = dir.commit(&manifest)?;
    Ok(Report {
        passed: ver.passed(),
        summary: format!("sweep {}x{} over {} scales -> {}\n{lines}{}", s.p.len(), s.m.len(), s.lambda.len(), path.display(), ver.summary()),
    })
}
