//! Experiment dispatch, report files and the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavelab_core::estimates::{
    check_besov, check_bilinear_atomic, check_bilinear_free, check_division, check_duality, check_highlow,
    check_key_increment, check_orthogonality, check_resonance, check_resonance_lower, Bracket, EstimateReport,
    SamplingSpec, Verdict,
};
use wavelab_core::fourier::SpatialField;
use wavelab_core::rng::trial_rng;
use wavelab_core::variation::random::{atom, band_limited, step};
use wavelab_core::variation::{p_variation, s_norm_proxy, up_lower_bound, up_upper_bound, NormReport};
use wavelab_core::wavemaps::{
    evolve, picard_iterate, scattering_extract, truncated_free_wave, CauchyData, Diagnostic, Scheme, Trajectory,
};
use wavelab_core::{SpaceTimeField, TimeGrid};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::report::{emit_report, to_json_line, Format};

pub const MANIFEST_SCHEMA: &str = "wmlab.manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
    pub started: String,
    pub finished: String,
    /// Files written by the run, relative to the output directory, manifest excluded.
    pub files: Vec<String>,
    pub verdict: Verdict,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum DataKind {
    Constant([f64; 3]),
    Equator { k: f64, omega: f64 },
    Random { amplitude: f64, cutoff: f64 },
}

#[derive(Clone, Debug, PartialEq)]
struct Solver {
    data: DataKind,
    step: f64,
    record_every: usize,
    scheme: Scheme,
    tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Check {
    Resonance,
    BilinearFree,
    BilinearAtomic { a: f64, b: f64 },
    Besov(Vec<f64>),
    HighLow(Vec<f64>),
    Orthogonality(Vec<f64>),
    Duality(Vec<f64>),
    KeyIncrement(Vec<f64>),
    Division,
}

#[derive(Clone, Debug, PartialEq)]
enum Plan {
    Evolve(Solver),
    Picard { solver: Solver, iterations: usize, chi_scale: f64 },
    Scattering { solver: Solver, probes: Vec<f64> },
    Norms { kind: String, count: usize, p: f64, budget: usize },
    Checks { spec: SamplingSpec, checks: Vec<Check> },
}

const SOLVER_KEYS: [&str; 11] =
    ["data", "point", "k", "omega", "amplitude", "cutoff", "step", "scheme", "tolerance", "chi_scale", "iterations"];
const SPEC_KEYS: [&str; 15] = [
    "dim", "lambda0", "lambda1", "lambda2", "d", "alpha", "samples", "window", "octaves", "bracket_lo", "bracket_hi",
    "budget", "p", "a", "b",
];

fn reject_unknown(cfg: &RunConfig, allowed: &[&str]) -> Result<()> {
    match cfg.params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(CliError::Config(format!("parameter `{k}` is not used by `{}`", cfg.experiment))),
        None => Ok(()),
    }
}

fn solver(cfg: &RunConfig) -> Result<Solver> {
    let grid = cfg.grid();
    let time = cfg.time_grid();
    let data = match cfg.param_str("data").unwrap_or("equator") {
        "constant" => {
            let p = cfg.param_list("point", &[0.0, 0.0, 1.0])?;
            if p.len() != 3 {
                return Err(CliError::Config("`point` needs three components".into()));
            }
            DataKind::Constant([p[0], p[1], p[2]])
        }
        "equator" => {
            let k = cfg.param_f64("k", 1.0)?;
            let q = k / grid.dual_spacing();
            if (q - q.round()).abs() > 1e-9 || k.abs() > grid.nyquist() {
                return Err(CliError::Config(format!("k = {k} is not a lattice frequency of the grid")));
            }
            DataKind::Equator {
                k,
                omega: cfg.param_f64("omega", 2.0)?,
            }
        }
        "random" => {
            let cutoff = cfg.param_f64("cutoff", 4.0)?;
            if !(cutoff > 0.0 && cutoff <= grid.max_xi_norm()) {
                return Err(CliError::Config(format!("cutoff {cutoff} outside the grid's frequencies")));
            }
            DataKind::Random {
                amplitude: cfg.param_f64("amplitude", 1e-2)?,
                cutoff,
            }
        }
        other => return Err(CliError::Config(format!("unknown data `{other}` (constant | equator | random)"))),
    };
    let scheme = match cfg.param_str("scheme").unwrap_or("rk4") {
        "rk4" => Scheme::Rk4,
        "rk2" => Scheme::Rk2,
        other => return Err(CliError::Config(format!("unknown scheme `{other}` (rk4 | rk2)"))),
    };
    let step = cfg.param_f64("step", time.dt() / 10.0)?;
    let ratio = time.dt() / step;
    if !(step > 0.0 && ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-9) {
        return Err(CliError::Config(format!(
            "solver step {step} must divide the recording interval {}",
            time.dt()
        )));
    }
    Ok(Solver {
        data,
        step,
        record_every: ratio.round() as usize,
        scheme,
        tolerance: cfg.param_f64("tolerance", 1e-6)?,
    })
}

fn exponents(cfg: &RunConfig, default: &[f64], min: f64, strict: bool) -> Result<Vec<f64>> {
    let ps = cfg.param_list("p", default)?;
    for &p in &ps {
        let ok = p.is_finite() && if strict { p > min } else { p >= min };
        if !ok {
            return Err(CliError::Config(format!("exponent p = {p} out of range")));
        }
    }
    Ok(ps)
}

fn sampling_spec(cfg: &RunConfig) -> Result<SamplingSpec> {
    let d = SamplingSpec::default();
    let bracket = Bracket::new(
        cfg.param_f64("bracket_lo", d.bracket.lo)?,
        cfg.param_f64("bracket_hi", d.bracket.hi)?,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let spec = SamplingSpec {
        dim: cfg.param_usize("dim", d.dim)?,
        lambda0: cfg.param_f64("lambda0", d.lambda0)?,
        lambda1: cfg.param_f64("lambda1", d.lambda1)?,
        lambda2: cfg.param_f64("lambda2", d.lambda2)?,
        d: cfg.param_f64("d", d.d)?,
        alpha: cfg.param_f64("alpha", d.alpha)?,
        samples: cfg.param_usize("samples", d.samples)?,
        seed: cfg.seed,
        window: cfg.param_f64("window", d.window)?,
        octaves: cfg.param_usize("octaves", d.octaves as usize)? as u32,
        bracket,
        budget: cfg.param_usize("budget", d.budget)?,
    };
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

fn atomic_exponents(cfg: &RunConfig, dim: usize) -> Result<(f64, f64)> {
    let a = cfg.param_f64("a", 2.0)?;
    let b = cfg.param_f64("b", 2.0)?;
    let n = dim as f64;
    if !(1.0 / (n + 1.0) < 1.0 / b && 1.0 / b <= 1.0 / a && 1.0 / a <= 0.5) {
        return Err(CliError::Config(format!(
            "exponents a = {a}, b = {b} need 1/(n+1) < 1/b <= 1/a <= 1/2 with n = {dim}"
        )));
    }
    Ok((a, b))
}

fn plan(cfg: &RunConfig) -> Result<Plan> {
    let check = |c: &str| -> Result<Check> {
        Ok(match c {
            "check-resonance" => Check::Resonance,
            "check-bilinear-free" => Check::BilinearFree,
            "check-bilinear-atomic" => {
                let (a, b) = atomic_exponents(cfg, cfg.param_usize("dim", 2)?)?;
                Check::BilinearAtomic { a, b }
            }
            "check-besov" => Check::Besov(exponents(cfg, &[2.0, 3.0], 1.0, true)?),
            "check-highlow" => Check::HighLow(exponents(cfg, &[2.0], 1.0, false)?),
            "check-orthogonality" => Check::Orthogonality(exponents(cfg, &[1.5, 2.0, 3.0], 1.0, false)?),
            "check-duality" => Check::Duality(exponents(cfg, &[4.0 / 3.0, 2.0, 4.0], 1.0, true)?),
            "check-key-increment" => Check::KeyIncrement(exponents(cfg, &[1.0, 2.0, 3.0], 1.0, false)?),
            "check-division" => Check::Division,
            other => unreachable!("{other} is not a check"),
        })
    };
    match cfg.experiment.as_str() {
        "evolve" => {
            reject_unknown(cfg, &SOLVER_KEYS[..9])?;
            zero_start(cfg)?;
            Ok(Plan::Evolve(solver(cfg)?))
        }
        "picard" => {
            reject_unknown(cfg, &SOLVER_KEYS)?;
            zero_start(cfg)?;
            Ok(Plan::Picard {
                solver: solver(cfg)?,
                iterations: cfg.param_usize("iterations", 5)?,
                chi_scale: cfg.param_f64("chi_scale", 1.0)?,
            })
        }
        "scattering" => {
            let mut keys = SOLVER_KEYS[..9].to_vec();
            keys.push("probes");
            reject_unknown(cfg, &keys)?;
            zero_start(cfg)?;
            let time = cfg.time_grid();
            let end = time.time(time.samples() - 1);
            let probes = cfg.param_list("probes", &[0.5 * end, 0.75 * end, end])?;
            if probes.len() < 3 || probes.iter().any(|&t| !(0.0..=end + 1e-12).contains(&t)) {
                return Err(CliError::Config(format!("need >= 3 probe times inside [0, {end}]")));
            }
            Ok(Plan::Scattering {
                solver: solver(cfg)?,
                probes,
            })
        }
        "norms" => {
            reject_unknown(cfg, &["kind", "count", "p", "budget"])?;
            let kind = cfg.param_str("kind").unwrap_or("atom").to_string();
            if !["atom", "step", "band", "free-wave"].contains(&kind.as_str()) {
                return Err(CliError::Config(format!("unknown kind `{kind}` (atom | step | band | free-wave)")));
            }
            let p = cfg.param_f64("p", 2.0)?;
            if !(p > 1.0 && p.is_finite()) {
                return Err(CliError::Config(format!("p = {p} must lie in (1, inf)")));
            }
            if kind == "free-wave" && cfg.time_grid().t0() > 0.0 {
                return Err(CliError::Config("free-wave norms need a window containing t = 0".into()));
            }
            Ok(Plan::Norms {
                kind,
                count: cfg.param_usize("count", 4)?,
                p,
                budget: cfg.param_usize("budget", 32)?,
            })
        }
        "all-checks" => {
            reject_unknown(cfg, &SPEC_KEYS)?;
            let spec = sampling_spec(cfg)?;
            let names = [
                "check-resonance",
                "check-bilinear-free",
                "check-bilinear-atomic",
                "check-besov",
                "check-highlow",
                "check-orthogonality",
                "check-duality",
                "check-key-increment",
                "check-division",
            ];
            // one `p` list cannot suit every check, so each uses its own defaults
            if cfg.params.contains_key("p") {
                return Err(CliError::Config("`p` is per check; run the checks one by one to set it".into()));
            }
            let checks = names.iter().map(|n| check(n)).collect::<Result<_>>()?;
            Ok(Plan::Checks { spec, checks })
        }
        other => {
            reject_unknown(cfg, &SPEC_KEYS)?;
            let spec = sampling_spec(cfg)?;
            Ok(Plan::Checks {
                spec,
                checks: vec![check(other)?],
            })
        }
    }
}

fn zero_start(cfg: &RunConfig) -> Result<()> {
    if cfg.time.t0 != 0.0 {
        return Err(CliError::Config(format!("`{}` records from t = 0; set [time] t0 = 0", cfg.experiment)));
    }
    Ok(())
}

fn initial_data(cfg: &RunConfig, s: &Solver) -> Result<CauchyData> {
    let grid = cfg.grid();
    Ok(match s.data {
        DataKind::Constant(p) => CauchyData::constant(grid, p)?,
        DataKind::Equator { k, omega } => CauchyData::equator(grid, k, omega),
        DataKind::Random { amplitude, cutoff } => {
            CauchyData::small_random(grid, amplitude, cutoff, &mut trial_rng(cfg.seed, 0))?
        }
    })
}

fn run_solver(cfg: &RunConfig, s: &Solver, data: &CauchyData) -> Result<Trajectory> {
    let time = cfg.time_grid();
    let t_end = time.time(time.samples() - 1);
    Ok(evolve(data, t_end, s.step, s.scheme, s.record_every)?)
}

/// Collects output files in write order.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    fn records<T: Serialize>(&mut self, name: &str, records: &[T], format: Format) -> Result<()> {
        let p = self.path(name);
        emit_report(records, format, &p)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, body).map_err(|e| CliError::io(&p, e))
    }
}

#[derive(Serialize)]
struct EvolveSummary<'a> {
    experiment: &'a str,
    data: String,
    scheme: Scheme,
    step: f64,
    t_end: f64,
    energy_drift: f64,
    constraint_sup: f64,
    /// L^2 distance to the closed-form traveling map at the final time.
    oracle_error: Option<f64>,
    tolerance: f64,
    last: Diagnostic,
    verdict: Verdict,
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn describe(d: &DataKind) -> String {
    match d {
        DataKind::Constant(p) => format!("constant({},{},{})", p[0], p[1], p[2]),
        DataKind::Equator { k, omega } => format!("equator(k={k},omega={omega})"),
        DataKind::Random { amplitude, cutoff } => format!("random(amplitude={amplitude},cutoff={cutoff})"),
    }
}

fn exec_evolve(cfg: &RunConfig, s: &Solver, out: &mut Outputs) -> Result<Verdict> {
    let data = initial_data(cfg, s)?;
    let tr = run_solver(cfg, s, &data)?;
    let t_end = tr.time().time(tr.time().samples() - 1);
    let oracle_error = match s.data {
        DataKind::Equator { k, omega } => {
            let exact = SpatialField::from_real(*data.grid(), 3, |c, x| match c {
                0 => (k * x[0] - omega * t_end).cos(),
                1 => (k * x[0] - omega * t_end).sin(),
                _ => 0.0,
            });
            Some((tr.phi.snapshots().last().expect("recorded") - &exact).norm())
        }
        DataKind::Constant(_) => Some((tr.phi.snapshots().last().expect("recorded") - &data.f).norm()),
        DataKind::Random { .. } => None,
    };
    let (drift, constraint) = (tr.energy_drift(), tr.constraint_sup());
    let ok = drift < s.tolerance && constraint < s.tolerance && oracle_error.is_none_or(|e| e < s.tolerance);
    out.text("trajectory.csv", &tr.diagnostics_csv())?;
    let summary = EvolveSummary {
        experiment: "evolve",
        data: describe(&s.data),
        scheme: s.scheme,
        step: s.step,
        t_end,
        energy_drift: drift,
        constraint_sup: constraint,
        oracle_error,
        tolerance: s.tolerance,
        last: *tr.diagnostics.last().expect("recorded"),
        verdict: verdict(ok),
    };
    out.records("evolve.json", &[summary], Format::Json)?;
    Ok(verdict(ok))
}

#[derive(Serialize)]
struct PicardSummary {
    experiment: &'static str,
    data: String,
    iterations: usize,
    chi_scale: f64,
    differences: Vec<f64>,
    contraction_factor: f64,
    /// `sup_t ||phi_picard(t) - phi_evolve(t)||_{L^2}` over the window.
    evolve_difference: f64,
    tolerance: f64,
    verdict: Verdict,
}

fn exec_picard(cfg: &RunConfig, s: &Solver, iterations: usize, chi_scale: f64, out: &mut Outputs) -> Result<Verdict> {
    let data = initial_data(cfg, s)?;
    let run = picard_iterate(&data, cfg.time_grid(), iterations, chi_scale)?;
    let tr = run_solver(cfg, s, &data)?;
    let diff = run.iterate.phi.sub(&tr.phi)?.sup_norm();
    let q = run.contraction_factor();
    let ok = q < 1.0 && diff < s.tolerance;
    let summary = PicardSummary {
        experiment: "picard",
        data: describe(&s.data),
        iterations,
        chi_scale,
        differences: run.differences.clone(),
        contraction_factor: q,
        evolve_difference: diff,
        tolerance: s.tolerance,
        verdict: verdict(ok),
    };
    out.records("picard.json", &[summary], Format::Json)?;
    Ok(verdict(ok))
}

#[derive(Serialize)]
struct ScatteringSummary {
    experiment: &'static str,
    data: String,
    probe_times: Vec<f64>,
    cauchy_profile: Vec<f64>,
    f_plus_norm: f64,
    f_minus_norm: f64,
    f_inf_norm: f64,
    g_inf_norm: f64,
    verdict: Verdict,
}

fn exec_scattering(cfg: &RunConfig, s: &Solver, probes: &[f64], out: &mut Outputs) -> Result<Verdict> {
    let data = initial_data(cfg, s)?;
    let tr = run_solver(cfg, s, &data)?;
    let sc = scattering_extract(&tr, probes)?;
    let ok = sc.cauchy_profile.iter().all(|x| x.is_finite());
    let summary = ScatteringSummary {
        experiment: "scattering",
        data: describe(&s.data),
        probe_times: sc.probe_times.clone(),
        cauchy_profile: sc.cauchy_profile.clone(),
        f_plus_norm: sc.f_plus.norm(),
        f_minus_norm: sc.f_minus.norm(),
        f_inf_norm: sc.f_inf.norm(),
        g_inf_norm: sc.g_inf.norm(),
        verdict: verdict(ok),
    };
    out.text("trajectory.csv", &tr.diagnostics_csv())?;
    out.records("scattering.json", &[summary], Format::Json)?;
    Ok(verdict(ok))
}

fn exec_norms(cfg: &RunConfig, kind: &str, count: usize, p: f64, budget: usize, out: &mut Outputs) -> Result<Verdict> {
    let grid = cfg.grid();
    let time: TimeGrid = cfg.time_grid();
    let mut records: Vec<NormReport> = Vec::new();
    for k in 0..count {
        let mut rng = trial_rng(cfg.seed, k as u64);
        let label = format!("{kind}#{k}");
        if kind == "free-wave" {
            let f = band_limited(grid, 1, grid.nyquist() / 2.0, &mut rng);
            let g = band_limited(grid, 1, grid.nyquist() / 2.0, &mut rng);
            let (u, ut) = truncated_free_wave(&f, &g, time, 1.0)?;
            let proxy = s_norm_proxy(&u, &ut, budget, k as u64)?;
            for mut r in [proxy.s, proxy.plus, proxy.minus, proxy.s_w] {
                r.name = format!("{label}:{}", r.name);
                records.push(r);
            }
            continue;
        }
        let u: SpaceTimeField = match kind {
            "atom" => atom(grid, time, 1 + k % 6, p, &mut rng).sample(),
            "step" => step(grid, time, 1 + k % 6, grid.nyquist(), &mut rng).sample(),
            _ => {
                let snaps = (0..time.samples()).map(|_| band_limited(grid, 1, grid.nyquist(), &mut rng)).collect();
                SpaceTimeField::new(time, snaps)?
            }
        };
        let lower = up_lower_bound(&u, p, budget, k as u64)?;
        let (sum, c) = up_upper_bound(&u, p)?;
        let upper = (c * sum).max(lower);
        records.push(
            NormReport::new(&format!("{label}:U^p"), lower, upper, &["duality", "besov-sum"])
                .with_param("p", p)
                .with_param("besov_sum", sum)
                .with_param("c_besov", c),
        );
        let v = p_variation(&u, p)?;
        records.push(NormReport::new(&format!("{label}:V^p"), v, v, &["exact DP"]).with_param("p", p));
    }
    if records.is_empty() {
        return Err(CliError::Config("count = 0 produces no norms".into()));
    }
    out.records("norms.jsonl", &records, Format::Json)?;
    out.records("norms.csv", &records, Format::Csv)?;
    Ok(verdict(records.iter().all(|r| r.lower <= r.upper)))
}

#[derive(Serialize)]
struct IndexRow<'a> {
    id: &'a str,
    verdict: Verdict,
    count: usize,
    min: f64,
    median: f64,
    max: f64,
    violations: usize,
    failures: usize,
    file: String,
}

fn run_check(spec: &SamplingSpec, check: &Check) -> Result<Vec<EstimateReport>> {
    let per_p = |f: &dyn Fn(&SamplingSpec, f64) -> wavelab_core::Result<EstimateReport>, ps: &[f64]| {
        ps.iter().map(|&p| f(spec, p)).collect::<wavelab_core::Result<Vec<_>>>()
    };
    Ok(match check {
        Check::Resonance => vec![check_resonance(spec)?, check_resonance_lower(spec)?],
        Check::BilinearFree => vec![check_bilinear_free(spec)?],
        Check::BilinearAtomic { a, b } => vec![check_bilinear_atomic(spec, *a, *b)?],
        Check::Besov(ps) => per_p(&check_besov, ps)?,
        Check::HighLow(ps) => per_p(&check_highlow, ps)?,
        Check::Orthogonality(ps) => per_p(&check_orthogonality, ps)?,
        Check::Duality(ps) => per_p(&check_duality, ps)?,
        Check::KeyIncrement(ps) => per_p(&check_key_increment, ps)?,
        Check::Division => vec![check_division(spec)?],
    })
}

fn exec_checks(spec: &SamplingSpec, checks: &[Check], out: &mut Outputs) -> Result<Verdict> {
    let mut index = Vec::new();
    let mut reports = Vec::new();
    for c in checks {
        reports.extend(run_check(spec, c)?);
    }
    for r in &reports {
        let name = format!("{}.json", r.id);
        out.records(&name, std::slice::from_ref(r), Format::Json)?;
        index.push(IndexRow {
            id: &r.id,
            verdict: r.verdict,
            count: r.stats.count,
            min: r.stats.min,
            median: r.stats.median,
            max: r.stats.max,
            violations: r.violations,
            failures: r.failures.len(),
            file: name,
        });
    }
    out.records("index.csv", &index, Format::Csv)?;
    Ok(verdict(reports.iter().all(EstimateReport::passed)))
}

/// Validates, creates the output directory, runs the experiment and writes the
/// manifest last. Nothing is written if validation fails.
pub fn run(cfg: &RunConfig) -> Result<RunManifest> {
    let plan = plan(cfg)?;
    let manifest_path = cfg.out.join(MANIFEST_FILE);
    if manifest_path.exists() {
        return Err(CliError::Config(format!(
            "{} already holds a finished run",
            cfg.out.display()
        )));
    }
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let started = chrono::Utc::now().to_rfc3339();
    let mut out = Outputs {
        dir: cfg.out.clone(),
        files: Vec::new(),
    };
    let verdict = match &plan {
        Plan::Evolve(s) => exec_evolve(cfg, s, &mut out)?,
        Plan::Picard {
            solver,
            iterations,
            chi_scale,
        } => exec_picard(cfg, solver, *iterations, *chi_scale, &mut out)?,
        Plan::Scattering { solver, probes } => exec_scattering(cfg, solver, probes, &mut out)?,
        Plan::Norms { kind, count, p, budget } => exec_norms(cfg, kind, *count, *p, *budget, &mut out)?,
        Plan::Checks { spec, checks } => exec_checks(spec, checks, &mut out)?,
    };
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: cfg.experiment.clone(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        files: out.files.clone(),
        verdict,
    };
    write_manifest(&manifest, &manifest_path)?;
    Ok(manifest)
}

fn write_manifest(m: &RunManifest, path: &Path) -> Result<()> {
    let v = serde_json::to_value(m).map_err(|e| CliError::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, to_json_line(&v) + "\n").map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}
