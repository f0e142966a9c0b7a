//! Line-oriented `key = value` configuration with `[section]` headers.
//!
//! ```text
//! experiment = evolve
//! seed = 7
//! out = runs/evolve
//!
//! [grid]
//! dim = 2
//! points = 32
//! period = 2pi
//!
//! [time]
//! t0 = 0
//! dt = 0.01
//! samples = 51
//!
//! [params]
//! data = equator
//! ```
//!
//! `#` and `;` start comments. Numbers may carry a `pi` suffix (`2pi`, `0.5pi`, `pi`).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use wavelab_core::{Grid, TimeGrid};

use crate::error::{CliError, Result};

pub const EXPERIMENTS: [&str; 14] = [
    "evolve",
    "picard",
    "scattering",
    "norms",
    "check-resonance",
    "check-bilinear-free",
    "check-bilinear-atomic",
    "check-besov",
    "check-highlow",
    "check-orthogonality",
    "check-duality",
    "check-division",
    "check-key-increment",
    "all-checks",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    pub dim: usize,
    pub points: usize,
    pub period: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeConfig {
    pub t0: f64,
    pub dt: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: String,
    pub seed: u64,
    pub out: PathBuf,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub params: BTreeMap<String, String>,
}

/// Raw sections as parsed, before validation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        sections.insert(current.clone(), BTreeMap::new());
        for (i, raw) in text.lines().enumerate() {
            let err = |msg: String| CliError::Parse {
                path: origin.to_string(),
                line: i + 1,
                msg,
            };
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("unterminated section header `{line}`")))?
                    .trim();
                if name.is_empty() {
                    return Err(err("empty section name".into()));
                }
                current = name.to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(err("empty key".into()));
            }
            let sec = sections.get_mut(&current).expect("section exists");
            if sec.insert(k.to_string(), v.to_string()).is_some() {
                return Err(err(format!("duplicate key `{k}`")));
            }
        }
        Ok(RawConfig { sections })
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(String::as_str)
    }
}

pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some(head) = s.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let k = if head.is_empty() { 1.0 } else { head.parse::<f64>().ok()? };
        return Some(k * PI);
    }
    s.parse().ok()
}

fn number(raw: &RawConfig, section: &str, key: &str, default: f64) -> Result<f64> {
    match raw.get(section, key) {
        None => Ok(default),
        Some(v) => parse_number(v).ok_or_else(|| CliError::Config(format!("[{section}] {key} = `{v}` is not a number"))),
    }
}

fn count(raw: &RawConfig, section: &str, key: &str, default: usize) -> Result<usize> {
    match raw.get(section, key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| CliError::Config(format!("[{section}] {key} = `{v}` is not a non-negative integer"))),
    }
}

impl RunConfig {
    /// Validated configuration. `experiment` and `seed`, when given, take
    /// precedence over the file; a conflicting `experiment` line is an error.
    pub fn from_raw(raw: &RawConfig, experiment: Option<&str>, seed: Option<u64>, out: Option<&Path>) -> Result<Self> {
        let known_sections = ["", "grid", "time", "params"];
        if let Some(s) = raw.sections.keys().find(|s| !known_sections.contains(&s.as_str())) {
            return Err(CliError::Config(format!("unknown section [{s}]")));
        }
        if let Some(k) = raw.sections[""].keys().find(|k| !["experiment", "seed", "out"].contains(&k.as_str())) {
            return Err(CliError::Config(format!("unknown top-level key `{k}`")));
        }
        let experiment = match (experiment, raw.get("", "experiment")) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Config(format!("command line asks for `{a}` but the config names `{b}`")))
            }
            (Some(a), _) | (None, Some(a)) => a.to_string(),
            (None, None) => return Err(CliError::Config("no experiment given".into())),
        };
        if !EXPERIMENTS.contains(&experiment.as_str()) {
            return Err(CliError::Config(format!("unknown experiment `{experiment}`")));
        }
        let seed = match seed {
            Some(s) => s,
            None => {
                let v = raw
                    .get("", "seed")
                    .ok_or_else(|| CliError::Config("a seed is required (config `seed` or --seed)".into()))?;
                v.parse().map_err(|_| CliError::Config(format!("seed `{v}` is not an unsigned integer")))?
            }
        };
        let out = match out {
            Some(p) => p.to_path_buf(),
            None => PathBuf::from(raw.get("", "out").unwrap_or("wmlab-out")),
        };
        for (sec, keys) in [("grid", &["dim", "points", "period"][..]), ("time", &["t0", "dt", "samples"][..])] {
            if let Some(k) = raw.sections.get(sec).and_then(|s| s.keys().find(|k| !keys.contains(&k.as_str()))) {
                return Err(CliError::Config(format!("unknown key `{k}` in [{sec}]")));
            }
        }
        let grid = GridConfig {
            dim: count(raw, "grid", "dim", 2)?,
            points: count(raw, "grid", "points", 32)?,
            period: number(raw, "grid", "period", 2.0 * PI)?,
        };
        Grid::new(grid.dim, grid.points, grid.period).map_err(|e| CliError::Config(e.to_string()))?;
        let time = TimeConfig {
            t0: number(raw, "time", "t0", 0.0)?,
            dt: number(raw, "time", "dt", 0.01)?,
            samples: count(raw, "time", "samples", 51)?,
        };
        TimeGrid::new(time.t0, time.dt, time.samples).map_err(|e| CliError::Config(e.to_string()))?;
        let params = raw.sections.get("params").cloned().unwrap_or_default();
        Ok(RunConfig {
            experiment,
            seed,
            out,
            grid,
            time,
            params,
        })
    }

    pub fn load(path: &Path, experiment: Option<&str>, seed: Option<u64>, out: Option<&Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let raw = RawConfig::parse(&text, &path.display().to_string())?;
        RunConfig::from_raw(&raw, experiment, seed, out)
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.dim, self.grid.points, self.grid.period).expect("validated")
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid::new(self.time.t0, self.time.dt, self.time.samples).expect("validated")
    }

    /// Canonical text of everything that affects results (not the output directory).
    pub fn canonical(&self) -> String {
        let mut s = format!(
            "experiment={}\nseed={}\n[grid]\ndim={}\npoints={}\nperiod={:.16e}\n[time]\nt0={:.16e}\ndt={:.16e}\nsamples={}\n[params]\n",
            self.experiment,
            self.seed,
            self.grid.dim,
            self.grid.points,
            self.grid.period,
            self.time.t0,
            self.time.dt,
            self.time.samples
        );
        for (k, v) in &self.params {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }

    /// SHA-256 of [`RunConfig::canonical`], lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn param_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => parse_number(v).ok_or_else(|| CliError::Config(format!("[params] {key} = `{v}` is not a number"))),
        }
    }

    pub fn param_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Config(format!("[params] {key} = `{v}` is not a non-negative integer"))),
        }
    }

    /// Comma-separated list of numbers.
    pub fn param_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.params.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|x| parse_number(x).ok_or_else(|| CliError::Config(format!("[params] {key}: `{x}` is not a number"))))
                .collect(),
        }
    }
}
