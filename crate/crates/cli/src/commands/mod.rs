mod cut;
mod patch;
mod run;
mod sweep;
mod verify;

pub use cut::cut_demo;
pub use patch::patch_run;
pub use run::run;
pub use sweep::sweep;
pub use verify::verify;

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use semiwave::cutting::{choose_radius, data_norm, CutPlan};
use semiwave::grid::{read_snapshot, write_snapshot};
use semiwave::nonlinearity::check_assumptions;
use semiwave::patching::{build_lattice, Lattice};
use semiwave::{Field, GridSpec, State};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::RunDir;

pub const INDEX_HEADER: &str = "step,t,file";

/// What a command reports back to `main`.
pub struct Report {
    pub passed: bool,
    pub summary: String,
}

pub fn config_echo(cfg: &RunConfig) -> Value {
    json!(cfg.raw)
}

pub fn model_json(cfg: &RunConfig) -> Value {
    let a = check_assumptions(&cfg.source, &cfg.damping);
    json!({
        "grid": {
            "geometry": cfg.grid.geometry.name(),
            "dims": cfg.grid.dims,
            "origin": cfg.grid.origin,
            "h": cfg.grid.h,
            "dt": cfg.grid.dt,
        },
        "source": {
            "p": cfg.source.p,
            "coeff": cfg.source.coeff,
            "sign": cfg.source.sign.value::<f64>(),
            "truncation_n": cfg.source.level(),
        },
        "damping": {"m": cfg.damping.m, "a": cfg.damping.coeff()},
        "assumptions": {
            "damping_ok": a.ag_ok,
            "source_branch": format!("{:?}", a.af_branch),
            "epsilon": a.epsilon,
            "details": a.details,
        },
    })
}

/// Snapshots under `prefix/` with an index of step, time and file name.
pub fn write_states(dir: &RunDir, prefix: &str, states: &[State<f64>], dt: f64) -> Result<usize> {
    let Some(first) = states.first() else {
        return Ok(0);
    };
    let mut index = format!("{INDEX_HEADER}\n");
    for (i, st) in states.iter().enumerate() {
        let step = ((st.t - first.t) / dt).round() as usize;
        let name = format!("snap_{i:06}.csv");
        let mut w = dir.file(&format!("{prefix}/{name}"))?;
        write_snapshot(&mut w, &st.u, &st.v)?;
        w.flush()?;
        index.push_str(&format!("{step},{},{name}\n", st.t));
    }
    dir.write(&format!("{prefix}/index.csv"), &index)?;
    Ok(states.len())
}

pub fn read_states(dir: &Path, grid: &GridSpec<f64>) -> Result<Vec<State<f64>>> {
    let index = dir.join("index.csv");
    let f = File::open(&index).with_context(|| format!("opening {}", index.display()))?;
    let mut lines = BufReader::new(f).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == INDEX_HEADER => {}
        _ => bail!("{}: expected header {INDEX_HEADER:?}", index.display()),
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            bail!("{}: malformed row {line:?}", index.display());
        }
        let t: f64 = cols[1].parse().map_err(|_| anyhow!("{}: bad time in {line:?}", index.display()))?;
        let path = dir.join(cols[2]);
        let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let (u, v) = read_snapshot(BufReader::new(f), grid).map_err(|e| anyhow!("{}: {e}", path.display()))?;
        out.push(State::new(u, v, t)?);
    }
    Ok(out)
}

/// Cutting budget: `cut.K`, or twice the data norm (1 for zero data).
pub fn budget(cfg: &RunConfig, u0: &Field<f64>, u1: &Field<f64>) -> f64 {
    cfg.k.unwrap_or_else(|| {
        let n = data_norm(u0, u1);
        if n > 0.0 {
            2.0 * n
        } else {
            1.0
        }
    })
}

pub fn plan_for(cfg: &RunConfig, u0: &Field<f64>, u1: &Field<f64>) -> Result<CutPlan<f64>> {
    let k = budget(cfg, u0, u1);
    match cfg.r_override {
        Some(r) => Ok(CutPlan::with_radius(&cfg.grid, k, r)?),
        None => {
            let centre = cfg.data_support().map(|(c, _)| c).unwrap_or([0.0; 3]);
            Ok(choose_radius(u0, u1, k, &[centre])?)
        }
    }
}

/// `patch.d`, or the largest multiple of `h` not above `r/4`.
pub fn lattice_for(cfg: &RunConfig, r: f64) -> Result<Lattice<f64>> {
    let h = cfg.grid.h;
    let d = cfg.patch_d.unwrap_or_else(|| ((r / 4.0 / h).floor() * h).max(h));
    Ok(build_lattice(&cfg.grid, d, r)?)
}

pub fn plan_json(plan: &CutPlan<f64>) -> Value {
    json!({
        "K": plan.k,
        "r": plan.r,
        "sobolev_c": plan.sobolev_c,
        "poincare_factor": plan.poincare_factor(),
        "overridden": plan.overridden,
        "probes": plan.probes,
    })
}
