//! Flat `key = value` run configuration.
//!
//! One dotted key per line, `#` starts a comment. Every key is validated
//! before any computation; unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use semiwave::data::Profile;
use semiwave::phase::{Protocol, DEFAULT_LAMBDAS, DEFAULT_M, DEFAULT_P};
use semiwave::{DampingSpec, Field, Geometry, GridSpec, Sign, SourceSpec};

const KNOWN_KEYS: &[&str] = &[
    "grid.geometry",
    "grid.extent",
    "grid.h",
    "grid.dt",
    "grid.cfl",
    "source.p",
    "source.coeff",
    "source.sign",
    "source.truncation_n",
    "damping.m",
    "damping.a",
    "data.u0.shape",
    "data.u0.amplitude",
    "data.u0.width",
    "data.u0.center",
    "data.u1.shape",
    "data.u1.amplitude",
    "data.u1.width",
    "data.u1.center",
    "cut.K",
    "patch.d",
    "patch.r_override",
    "run.T",
    "run.snapshot_stride",
    "sweep.p",
    "sweep.m",
    "sweep.lambda",
    "sweep.half_width",
    "sweep.h",
    "sweep.cfl",
    "sweep.source_coeff",
    "sweep.damping_a",
    "sweep.bump_radius",
    "sweep.crossings",
    "output.dir",
    "verify.energy_tol",
    "verify.finite_speed",
    "verify.weak",
    "verify.weak_seed",
    "verify.weak_tol",
    "verify.oracle",
    "verify.oracle_tol",
    "verify.overlap_tol",
    "verify.monolithic",
    "verify.monolithic_tol",
];

#[derive(Debug, Clone)]
pub struct DataSpec {
    pub u0: Profile<f64>,
    pub u1: Profile<f64>,
}

#[derive(Debug, Clone)]
pub struct VerifySpec {
    pub energy_tol: f64,
    pub finite_speed: bool,
    pub weak: bool,
    pub weak_seed: u64,
    pub weak_tol: f64,
    pub oracle: bool,
    pub oracle_tol: f64,
    pub overlap_tol: f64,
    pub monolithic: bool,
    pub monolithic_tol: f64,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub p: Vec<f64>,
    pub m: Vec<f64>,
    pub lambda: Vec<f64>,
    pub protocol: Protocol<f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Keys as written, for the manifest echo.
    pub raw: BTreeMap<String, String>,
    pub grid: GridSpec<f64>,
    pub source: SourceSpec<f64>,
    pub damping: DampingSpec<f64>,
    pub data: DataSpec,
    pub k: Option<f64>,
    pub patch_d: Option<f64>,
    pub r_override: Option<f64>,
    pub horizon: f64,
    pub snapshot_stride: usize,
    pub sweep: SweepSpec,
    pub output_dir: Option<PathBuf>,
    pub verify: VerifySpec,
}

/// Number that may be written as a fraction, e.g. `1/64`.
fn parse_number(key: &str, s: &str) -> Result<f64> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| anyhow!("{key}: not a number: {s:?}"))?;
            let b: f64 = b.trim().parse().map_err(|_| anyhow!("{key}: not a number: {s:?}"))?;
            a / b
        }
        None => s.parse().map_err(|_| anyhow!("{key}: not a number: {s:?}"))?,
    };
    if !v.is_finite() {
        bail!("{key}: value must be finite, got {s:?}");
    }
    Ok(v)
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|x| parse_number(key, x.trim()))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        bail!("{key}: empty list");
    }
    Ok(v)
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => bail!("{key}: expected true or false, got {s:?}"),
    }
}

pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if !KNOWN_KEYS.contains(&k) {
            bail!("line {}: unknown key {k:?}", i + 1);
        }
        if v.is_empty() {
            bail!("line {}: empty value for {k}", i + 1);
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            bail!("line {}: key {k} given twice", i + 1);
        }
    }
    Ok(out)
}

struct Lookup<'a>(&'a BTreeMap<String, String>);

impl Lookup<'_> {
    fn str(&self, k: &str) -> Option<&str> {
        self.0.get(k).map(String::as_str)
    }

    fn num(&self, k: &str) -> Result<Option<f64>> {
        self.str(k).map(|s| parse_number(k, s)).transpose()
    }

    fn num_or(&self, k: &str, d: f64) -> Result<f64> {
        Ok(self.num(k)?.unwrap_or(d))
    }

    fn list_or(&self, k: &str, d: &[f64]) -> Result<Vec<f64>> {
        Ok(match self.str(k) {
            Some(s) => parse_list(k, s)?,
            None => d.to_vec(),
        })
    }

    fn bool_or(&self, k: &str, d: bool) -> Result<bool> {
        Ok(match self.str(k) {
            Some(s) => parse_bool(k, s)?,
            None => d,
        })
    }

    fn count_or(&self, k: &str, d: usize) -> Result<usize> {
        match self.str(k) {
            Some(s) => s.parse().map_err(|_| anyhow!("{k}: expected a positive integer, got {s:?}")),
            None => Ok(d),
        }
    }
}

fn profile(l: &Lookup, which: &str, geometry: Geometry) -> Result<Profile<f64>> {
    let key = |s: &str| format!("data.{which}.{s}");
    let shape = l.str(&key("shape")).unwrap_or("zero");
    let amplitude = l.num_or(&key("amplitude"), 1.0)?;
    let width = l.num_or(&key("width"), 0.25)?;
    let mut center = [0.0; 3];
    if let Some(s) = l.str(&key("center")) {
        let v = parse_list(&key("center"), s)?;
        if v.len() > geometry.dimension() {
            bail!("{}: {} coordinates for a {}-dimensional grid", key("center"), v.len(), geometry.dimension());
        }
        center[..v.len()].copy_from_slice(&v);
    }
    if geometry == Geometry::Radial3D && center != [0.0; 3] {
        bail!("{}: radial data must be centred at the origin", key("center"));
    }
    if shape != "zero" && width <= 0.0 {
        bail!("{}: width must be positive", key("width"));
    }
    Ok(match shape {
        "zero" => Profile::Zero,
        "gaussian" => Profile::gaussian(amplitude, width, center),
        "bump" => Profile::bump(amplitude, width, center),
        _ => bail!("{}: expected zero, gaussian or bump, got {shape:?}", key("shape")),
    })
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw = parse_pairs(text)?;
        let l = Lookup(&raw);

        let geometry = match l.str("grid.geometry") {
            Some(s) => Geometry::parse(s).ok_or_else(|| anyhow!("grid.geometry: unknown geometry {s:?}"))?,
            None => Geometry::Line1D,
        };
        let extent = l.num_or("grid.extent", 1.0)?;
        let h = l.num_or("grid.h", 1.0 / 64.0)?;
        let dt = match (l.num("grid.dt")?, l.num("grid.cfl")?) {
            (Some(_), Some(_)) => bail!("grid.dt and grid.cfl are mutually exclusive"),
            (Some(dt), None) => dt,
            (None, c) => c.unwrap_or(0.5) * h,
        };
        let grid = match geometry {
            Geometry::Line1D => GridSpec::line(0.0, extent, h, dt),
            Geometry::Radial3D => GridSpec::radial(extent, h, dt),
            Geometry::Box3D => GridSpec::cube([0.0; 3], extent, h, dt),
        }
        .map_err(|e| anyhow!("grid: {e}"))?;

        let p = l.num_or("source.p", 3.0)?;
        let coeff = l.num_or("source.coeff", 1.0)?;
        let sign_raw = l.num_or("source.sign", -1.0)?;
        let sign = (sign_raw.fract() == 0.0)
            .then(|| Sign::from_int(sign_raw as i64))
            .flatten()
            .ok_or_else(|| anyhow!("source.sign: expected +1 or -1, got {sign_raw}"))?;
        // a zero coefficient switches the term off
        let mut source = if coeff == 0.0 {
            SourceSpec::zero()
        } else {
            SourceSpec::new(p, coeff, sign).map_err(|e| anyhow!("source: {e}"))?
        };
        if let Some(n) = l.num("source.truncation_n")? {
            source = source.truncated(n).map_err(|e| anyhow!("source.truncation_n: {e}"))?;
        }
        let (m, a) = (l.num_or("damping.m", 1.0)?, l.num_or("damping.a", 1.0)?);
        let damping = if a == 0.0 {
            DampingSpec::zero()
        } else {
            DampingSpec::power(m, a).map_err(|e| anyhow!("damping: {e}"))?
        };

        let data = DataSpec { u0: profile(&l, "u0", geometry)?, u1: profile(&l, "u1", geometry)? };

        let k = l.num("cut.K")?;
        if k.is_some_and(|k| k <= 0.0) {
            bail!("cut.K must be positive");
        }
        let patch_d = l.num("patch.d")?;
        let r_override = l.num("patch.r_override")?;
        let horizon = l.num_or("run.T", 1.0)?;
        if horizon < 0.0 {
            bail!("run.T must be nonnegative");
        }
        let snapshot_stride = l.count_or("run.snapshot_stride", 1)?;
        if snapshot_stride == 0 {
            bail!("run.snapshot_stride must be at least 1");
        }

        let defaults = Protocol::<f64>::default();
        let protocol = Protocol {
            half_width: l.num_or("sweep.half_width", defaults.half_width)?,
            h: l.num_or("sweep.h", defaults.h)?,
            courant: l.num_or("sweep.cfl", defaults.courant)?,
            source_coeff: l.num_or("sweep.source_coeff", defaults.source_coeff)?,
            damping_coeff: l.num_or("sweep.damping_a", defaults.damping_coeff)?,
            bump_radius: l.num_or("sweep.bump_radius", defaults.bump_radius)?,
            crossings: l.num_or("sweep.crossings", defaults.crossings)?,
        };
        protocol.grid().map_err(|e| anyhow!("sweep grid: {e}"))?;
        let sweep = SweepSpec {
            p: l.list_or("sweep.p", &DEFAULT_P)?,
            m: l.list_or("sweep.m", &DEFAULT_M)?,
            lambda: l.list_or("sweep.lambda", &DEFAULT_LAMBDAS)?,
            protocol,
        };
        if sweep.lambda.iter().any(|&x| x < 0.0) {
            bail!("sweep.lambda: data scales must be nonnegative");
        }

        let verify = VerifySpec {
            energy_tol: l.num_or("verify.energy_tol", 1e-2)?,
            finite_speed: l.bool_or("verify.finite_speed", true)?,
            weak: l.bool_or("verify.weak", true)?,
            weak_seed: l.count_or("verify.weak_seed", 1)? as u64,
            weak_tol: l.num_or("verify.weak_tol", 1e-3)?,
            oracle: l.bool_or("verify.oracle", false)?,
            oracle_tol: l.num_or("verify.oracle_tol", 1e-3)?,
            overlap_tol: l.num_or("verify.overlap_tol", 1e-12)?,
            monolithic: l.bool_or("verify.monolithic", false)?,
            monolithic_tol: l.num_or("verify.monolithic_tol", 1e-8)?,
        };
        let output_dir = l.str("output.dir").map(PathBuf::from);

        Ok(RunConfig {
            raw,
            grid,
            source,
            damping,
            data,
            k,
            patch_d,
            r_override,
            horizon,
            snapshot_stride,
            sweep,
            output_dir,
            verify,
        })
    }

    pub fn initial_fields(&self) -> Result<(Field<f64>, Field<f64>)> {
        let u0 = self.data.u0.sample(&self.grid).map_err(|e| anyhow!("data.u0: {e}"))?;
        let u1 = self.data.u1.sample(&self.grid).map_err(|e| anyhow!("data.u1: {e}"))?;
        Ok((u0, u1))
    }

    /// Centre and radius of a ball holding the support of both data, if compact.
    pub fn data_support(&self) -> Option<([f64; 3], f64)> {
        let (a, b) = (&self.data.u0, &self.data.u1);
        match (a.support_radius()?, b.support_radius()?) {
            (0.0, 0.0) => Some(([0.0; 3], 0.0)),
            (ra, 0.0) => Some((a.center(), ra)),
            (0.0, rb) => Some((b.center(), rb)),
            (ra, rb) => {
                let c = a.center();
                let d = (0..3).map(|i| (b.center()[i] - c[i]).powi(2)).sum::<f64>().sqrt();
                Some((c, ra.max(d + rb)))
            }
        }
    }
}
