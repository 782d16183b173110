//! Run directories written under a temporary name and renamed on completion.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use semiwave::verification::CheckResult;
use serde_json::{json, Map, Value};

pub struct RunDir {
    staging: PathBuf,
    target: PathBuf,
    committed: bool,
}

impl RunDir {
    /// Refuses to touch an existing target.
    pub fn create(target: &Path) -> Result<Self> {
        if target.exists() {
            bail!("output directory {} already exists", target.display());
        }
        let name = target
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
        let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging).with_context(|| format!("creating {}", staging.display()))?;
        Ok(RunDir { staging, target: target.to_path_buf(), committed: false })
    }

    pub fn file(&self, rel: &str) -> Result<BufWriter<File>> {
        let path = self.staging.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    pub fn write(&self, rel: &str, text: &str) -> Result<()> {
        let mut w = self.file(rel)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn commit(mut self, manifest: &Value) -> Result<PathBuf> {
        self.write("manifest.json", &serde_json::to_string_pretty(manifest)?)?;
        fs::rename(&self.staging, &self.target)
            .with_context(|| format!("renaming {} to {}", self.staging.display(), self.target.display()))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

/// Wall-clock seconds per named stage.
pub struct Timings {
    stages: Map<String, Value>,
    mark: Instant,
}

impl Timings {
    pub fn start() -> Self {
        Timings { stages: Map::new(), mark: Instant::now() }
    }

    pub fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.stages.insert(stage.into(), json!((now - self.mark).as_secs_f64()));
        self.mark = now;
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.stages)
    }
}

/// Named checks plus skipped ones with a reason.
#[derive(Default)]
pub struct Verification {
    pub checks: Vec<CheckResult>,
    pub skipped: Vec<(String, String)>,
}

impl Verification {
    pub fn push(&mut self, c: CheckResult) {
        self.checks.push(c);
    }

    pub fn skip(&mut self, name: &str, why: impl Into<String>) {
        self.skipped.push((name.into(), why.into()));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_names(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    pub fn to_value(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| json!({"name": c.name, "value": finite(c.value), "tolerance": c.tolerance, "passed": c.passed}))
            .collect();
        let skipped: Vec<Value> = self.skipped.iter().map(|(n, w)| json!({"name": n, "reason": w})).collect();
        json!({"passed": self.passed(), "checks": checks, "skipped": skipped})
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "pass" } else { "FAIL" };
            s.push_str(&format!("  {tag} {:<22} {:.3e} (tol {:.1e})\n", c.name, c.value, c.tolerance));
        }
        for (n, w) in &self.skipped {
            s.push_str(&format!("  skip {n:<22} {w}\n"));
        }
        if !self.passed() {
            s.push_str(&format!("failed checks: {}\n", self.failed_names().join(", ")));
        }
        s
    }
}

/// JSON has no infinities or NaN.
pub fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}
