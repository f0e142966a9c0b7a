//! Sampled checks of the quantitative inequalities: resonance geometry,
//! bilinear `L^2` bounds, Besov equivalence, high-low products, almost
//! orthogonality, duality, the key increment inequality and the division bounds.
//!
//! Every check is deterministic given its [`SamplingSpec`]: trial `k` draws from
//! [`trial_rng`](crate::rng::trial_rng)`(seed, k)`.

mod bilinear;
mod division;
mod resonance;
mod spaces;

pub use bilinear::{
    bilinear_norm, check_bilinear_atomic, check_bilinear_free, lattice_ball, AtomicWave, LatticeWave,
};
pub use division::{check_division, product_band};
pub use resonance::{
    check_resonance, check_resonance_lower, resonance_angles, resonance_modulations, FrequencyPair,
};
pub use spaces::{
    check_besov, check_duality, check_highlow, check_key_increment, check_orthogonality, frame_constants,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed choice of the arbitrary loss exponent in the epsilon-lossy bounds.
pub const EPSILON_LOSS: f64 = 0.1;

/// Two-sided acceptance interval for a normalized ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub const DEFAULT: Bracket = Bracket { lo: 0.05, hi: 20.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return Err(Error::Config(format!("invalid bracket [{lo}, {hi}]")));
        }
        Ok(Bracket { lo, hi })
    }

    pub fn upper(hi: f64) -> Self {
        Bracket { lo: 0.0, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

impl Default for Bracket {
    fn default() -> Self {
        Bracket::DEFAULT
    }
}

/// Scales and sampling knobs shared by the checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub dim: usize,
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub d: f64,
    pub alpha: f64,
    /// Samples per sweep cell.
    pub samples: usize,
    pub seed: u64,
    /// Time window length where a check needs one.
    pub window: f64,
    /// Dyadic octaves swept per index.
    pub octaves: u32,
    pub bracket: Bracket,
    /// Attempt budget of rejection samplers, per cell.
    pub budget: usize,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            dim: 2,
            lambda0: 1.0,
            lambda1: 1.0,
            lambda2: 1.0,
            d: 1.0,
            alpha: 2.0 * std::f64::consts::PI / 64.0,
            samples: 50,
            seed: 0,
            window: 100.0,
            octaves: 4,
            bracket: Bracket::DEFAULT,
            budget: 1_000_000,
        }
    }
}

fn is_dyadic(x: f64) -> bool {
    x > 0.0 && x.is_finite() && x.log2().fract() == 0.0
}

impl SamplingSpec {
    pub fn mu(&self) -> f64 {
        self.lambda0.min(self.lambda1).min(self.lambda2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::Config(format!("dimension {} not in 1..=3", self.dim)));
        }
        for (name, v) in [
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("d", self.d),
        ] {
            if !is_dyadic(v) {
                return Err(Error::Config(format!("{name} = {v} is not a power of two")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha = {} not in (0, 1]", self.alpha)));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(Error::Config(format!("window = {}", self.window)));
        }
        Ok(())
    }
}

/// Order statistics of the finite sampled ratios.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Stats {
    /// Ignores non-finite entries (0/0 cases).
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Stats::default();
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Stats {
            count: n,
            min: v[0],
            median,
            max: v[n - 1],
        }
    }
}

/// Least-squares line through `(log2 x, log2 y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `log2` units.
    pub residual: f64,
}

pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Arity(format!("slope fit needs >= 2 paired points, got {} and {}", xs.len(), ys.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Degenerate("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.log2()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.log2()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("log-log fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual: (rss / n).sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

/// One line of a sweep table, e.g. the statistics of one scale cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub values: Vec<NamedValue>,
}

impl TableRow {
    pub fn new(label: impl Into<String>, values: &[(&str, f64)]) -> Self {
        TableRow {
            label: label.into(),
            values: values
                .iter()
                .map(|(n, v)| NamedValue {
                    name: (*n).to_string(),
                    value: *v,
                })
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|v| v.name == name).map(|v| v.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub id: String,
    pub spec: SamplingSpec,
    pub stats: Stats,
    pub slope: Option<SlopeFit>,
    pub bracket: Bracket,
    /// Ratios outside the bracket.
    pub violations: usize,
    /// Failed structural conditions besides the bracket.
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub table: Vec<TableRow>,
    pub verdict: Verdict,
}

impl EstimateReport {
    /// Report over `ratios`; non-finite ratios are skipped.
    pub fn new(id: &str, spec: &SamplingSpec, bracket: Bracket, ratios: &[f64]) -> Self {
        let violations = ratios.iter().filter(|r| r.is_finite() && !bracket.contains(**r)).count();
        let mut r = EstimateReport {
            id: id.to_string(),
            spec: spec.clone(),
            stats: Stats::of(ratios),
            slope: None,
            bracket,
            violations,
            failures: Vec::new(),
            notes: Vec::new(),
            table: Vec::new(),
            verdict: Verdict::Pass,
        };
        r.refresh();
        r
    }

    fn refresh(&mut self) {
        self.verdict = if self.violations == 0 && self.failures.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        self.failures.push(msg.into());
        self.refresh();
    }

    /// Records `msg` as a failure unless `ok`.
    pub fn require(&mut self, ok: bool, msg: impl Into<String>) {
        if !ok {
            self.fail(msg);
        }
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    pub fn row(&mut self, row: TableRow) {
        self.table.push(row);
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Dyadic values `base * 2^k`, `k = 0..=octaves`.
pub fn dyadic_sweep(base: f64, octaves: u32) -> Vec<f64> {
    (0..=octaves).map(|k| base * 2f64.powi(k as i32)).collect()
}
