use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const LINEAR: &str = "\
grid.geometry = line1d
grid.h = 1/256
source.coeff = 0
damping.a = 0
data.u0.shape = gaussian
data.u0.width = 0.15
run.T = 0.375
verify.oracle = true
";

const BUMP: &str = "\
grid.h = 1/128
source.p = 3
damping.m = 3
data.u0.shape = bump
data.u0.width = 0.2
data.u1.shape = bump
data.u1.amplitude = 0.5
data.u1.width = 0.2
run.T = 0.5
patch.d = 1/4
patch.r_override = 1
verify.monolithic = true
";

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Sandbox { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, args: &[&str], cfg: &Path) -> Output {
        Command::new(env!("CARGO_BIN_EXE_semiwave"))
            .args(args)
            .arg("--config")
            .arg(cfg)
            .arg("--quiet")
            .output()
            .unwrap()
    }

    fn run_out(&self, cmd: &str, cfg: &Path, out: &str) -> Output {
        let out = self.path(out);
        self.run(&[cmd, "--out", out.to_str().unwrap()], cfg)
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn check_value(m: &serde_json::Value, name: &str) -> Option<f64> {
    m["verification"]["checks"]
        .as_array()?
        .iter()
        .find(|c| c["name"] == name)
        .and_then(|c| c["value"].as_f64())
}

/// Every number in the data rows of a csv file.
fn csv_values(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .collect()
}

fn snapshot_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("snap_"))
        .collect();
    v.sort();
    v
}

#[test]
fn zero_data_run_has_zero_ledger() {
    let sb = Sandbox::new();
    let cfg = sb.config("zero.cfg", "grid.h = 1/64\n");
    let o = sb.run_out("run", &cfg, "out");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let vals = csv_values(&sb.path("out/ledger.csv"));
    assert!(!vals.is_empty());
    let text = fs::read_to_string(sb.path("out/ledger.csv")).unwrap();
    for line in text.lines().skip(1) {
        // every column after t is an energy term
        for x in line.split(',').skip(1) {
            assert_eq!(x.parse::<f64>().unwrap(), 0.0, "{line}");
        }
    }
}

#[test]
fn linear_run_matches_dalembert() {
    let sb = Sandbox::new();
    let cfg = sb.config("lin.cfg", LINEAR);
    let o = sb.run_out("run", &cfg, "out");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(&sb.path("out"));
    assert!(check_value(&m, "dalembert_oracle").unwrap() < 1e-3);
    assert_eq!(m["verification"]["passed"], true);
}

#[test]
fn oracle_rejects_nonlinear_problem() {
    let sb = Sandbox::new();
    let cfg = sb.config("bad.cfg", "source.p = 3\nverify.oracle = true\ndata.u0.shape = bump\n");
    let o = sb.run_out("run", &cfg, "out");
    assert_eq!(code(&o), 2);
    assert!(!sb.path("out").exists());
}

#[test]
fn malformed_config_creates_nothing() {
    let sb = Sandbox::new();
    for (i, text) in ["grid.h = 1/64\nbogus.key = 1\n", "grid.h = 1/64\ngrid.h = 1/32\n", "grid.h = zero\n", "grid.h\n"]
        .iter()
        .enumerate()
    {
        let cfg = sb.config(&format!("bad{i}.cfg"), text);
        let o = sb.run_out("run", &cfg, "out");
        assert_eq!(code(&o), 2, "{text}");
        assert!(stderr(&o).contains("error"));
        assert!(!sb.path("out").exists());
    }
    let leftovers: Vec<_> = fs::read_dir(sb.dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with('.'))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn existing_output_dir_is_refused() {
    let sb = Sandbox::new();
    let cfg = sb.config("zero.cfg", "grid.h = 1/32\n");
    fs::create_dir(sb.path("out")).unwrap();
    let o = sb.run_out("run", &cfg, "out");
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("already exists"));
}

#[test]
fn patch_run_bump_is_consistent() {
    let sb = Sandbox::new();
    let cfg = sb.config("bump.cfg", BUMP);
    let o = sb.run_out("patch-run", &cfg, "out");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(&sb.path("out"));
    assert!(m["max_overlap_discrepancy"].as_f64().unwrap() <= 1e-12);
    assert!(check_value(&m, "monolithic_agreement").unwrap() <= 1e-8);
    assert!(m["patches"].as_array().unwrap().len() > 1);
    let overlaps = fs::read_to_string(sb.path("out/overlaps.csv")).unwrap();
    assert!(overlaps.starts_with("j,l,max_u,max_v,samples,max_time"));
    assert!(overlaps.lines().count() > 1);
}

#[test]
fn patch_run_rejects_wide_lattice() {
    let sb = Sandbox::new();
    let cfg = sb.config("d.cfg", "grid.h = 1/128\ndata.u0.shape = bump\npatch.d = 1/2\npatch.r_override = 1\n");
    let o = sb.run_out("patch-run", &cfg, "out");
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("r/2"), "{}", stderr(&o));
    assert!(!sb.path("out").exists());
}

#[test]
fn patch_run_zero_data_is_zero() {
    let sb = Sandbox::new();
    let cfg = sb.config("zero.cfg", "grid.h = 1/64\n");
    let o = sb.run_out("patch-run", &cfg, "out");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let files = snapshot_files(&sb.path("out/global"));
    assert!(!files.is_empty());
    for f in files {
        let text = fs::read_to_string(&f).unwrap();
        for line in text.lines().skip(1) {
            let cols: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(cols[1..], [0.0, 0.0]);
        }
    }
}

#[test]
fn verify_accepts_stored_run_and_flags_corruption() {
    let sb = Sandbox::new();
    let cfg = sb.config("bump.cfg", BUMP);
    assert_eq!(code(&sb.run_out("run", &cfg, "out")), 0);
    let dir = sb.path("out");
    let o = sb.run(&["verify", dir.to_str().unwrap()], &cfg);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let snaps = snapshot_files(&dir.join("snapshots"));
    let target = &snaps[snaps.len() / 2];
    let text = fs::read_to_string(target).unwrap();
    let mut lines = text.lines();
    let mut out = format!("{}\n", lines.next().unwrap());
    for l in lines {
        let c: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        out.push_str(&format!("{},{},{}\n", c[0], c[1] * 1.01, c[2]));
    }
    fs::write(target, out).unwrap();

    let report = sb.path("report");
    let o = sb.run(&["verify", "--out", report.to_str().unwrap(), dir.to_str().unwrap()], &cfg);
    assert_eq!(code(&o), 1);
    let m = manifest(&report);
    let failed: Vec<String> = m["verification"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect();
    assert!(failed.iter().any(|n| n == "ledger_consistency" || n == "weak_residual"), "{failed:?}");
}

#[test]
fn verify_accepts_patch_run_output() {
    let sb = Sandbox::new();
    let cfg = sb.config("bump.cfg", BUMP);
    assert_eq!(code(&sb.run_out("patch-run", &cfg, "out")), 0);
    let o = sb.run(&["verify", sb.path("out").to_str().unwrap()], &cfg);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn verify_empty_dir_is_usage_error() {
    let sb = Sandbox::new();
    let cfg = sb.config("zero.cfg", "grid.h = 1/64\n");
    fs::create_dir(sb.path("empty")).unwrap();
    let o = sb.run(&["verify", sb.path("empty").to_str().unwrap()], &cfg);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no stored trajectory"));
}

#[test]
fn sweep_writes_phase_table() {
    let sb = Sandbox::new();
    let cfg = sb.config("sweep.cfg", "sweep.p = 2, 4\nsweep.m = 1, 5\nsweep.lambda = 0, 1\nsweep.h = 1/16\nsweep.crossings = 2\n");
    let o = sb.run_out("sweep", &cfg, "out");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(sb.path("out/phase.csv")).unwrap();
    // header plus 2 x 2 cells for each of the two scales
    assert_eq!(text.lines().count(), 1 + 8);
    assert!(sb.path("out/manifest.json").exists());
    let zero_rows: Vec<&str> = text.lines().skip(1).filter(|l| l.contains("survived")).collect();
    assert!(zero_rows.len() >= 4);
}

#[test]
fn cut_demo_zero_bump_and_small_budget() {
    let sb = Sandbox::new();
    let zero = sb.config("zero.cfg", "grid.h = 1/64\n");
    let o = sb.run_out("cut-demo", &zero, "zero");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(&sb.path("zero"));
    assert_eq!(m["cut_plan"]["r"].as_f64().unwrap(), 1.0);

    let bump = sb.config("bump.cfg", BUMP);
    let o = sb.run_out("cut-demo", &bump, "bump");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(sb.path("bump/cut_reports.csv").exists() && sb.path("bump/theta.csv").exists());

    let small = sb.config("small.cfg", "grid.h = 1/128\ndata.u0.shape = bump\ncut.K = 0.5\n");
    let o = sb.run_out("cut-demo", &small, "small");
    assert_eq!(code(&o), 2);
    assert!(!sb.path("small").exists());
}
