//! Angle geometry of nearly resonant frequency triples on the cone.
//!
//! Quantifiers: `x ~ l` means `l/2 <= x < 2l`, `x << d` means `x < d/8`,
//! `x ~ d` for a modulation means `d/2 <= x <= 2d`, and `d >> mu` means `d >= 16 mu`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{Bracket, EstimateReport, SamplingSpec, TableRow};
use crate::error::{Error, Result};
use crate::rng::trial_rng;

/// Two space-time frequencies `(tau, xi)`, `(tau', eta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyPair {
    pub xi: [f64; 3],
    pub eta: [f64; 3],
    pub tau: f64,
    pub tau2: f64,
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn add(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scaled(s: f64, v: &[f64; 3]) -> [f64; 3] {
    [s * v[0], s * v[1], s * v[2]]
}

fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Angle in `[0, pi]`; NaN if either vector vanishes.
fn angle(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return f64::NAN;
    }
    let c = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (na * nb);
    c.clamp(-1.0, 1.0).acos()
}

impl FrequencyPair {
    pub fn sum(&self) -> [f64; 3] {
        add(&self.xi, &self.eta)
    }

    /// `(|xi|, |eta|, |xi + eta|)`.
    pub fn magnitudes(&self) -> (f64, f64, f64) {
        (norm(&self.xi), norm(&self.eta), norm(&self.sum()))
    }
}

/// `(||tau| - |xi||, ||tau'| - |eta||, ||tau + tau'| - |xi + eta||)`.
pub fn resonance_modulations(p: &FrequencyPair) -> [f64; 3] {
    let (a, b, c) = p.magnitudes();
    [
        (p.tau.abs() - a).abs(),
        (p.tau2.abs() - b).abs(),
        ((p.tau + p.tau2).abs() - c).abs(),
    ]
}

/// Signed angles `[<(s xi, s' eta), <(s'' (xi+eta), s xi), <(s'' (xi+eta), s' eta)]`
/// with `s = sgn tau`, `s' = sgn tau'`, `s'' = sgn(tau + tau')`.
pub fn resonance_angles(p: &FrequencyPair) -> [f64; 3] {
    let a = scaled(sgn(p.tau), &p.xi);
    let b = scaled(sgn(p.tau2), &p.eta);
    let c = scaled(sgn(p.tau + p.tau2), &p.sum());
    [angle(&a, &b), angle(&c, &a), angle(&c, &b)]
}

/// Angle ratios against the predicted scales, with actual magnitudes and the
/// actual output modulation `m`:
/// `<_0 / (m |xi+eta| / (|xi||eta|))^{1/2}`, `<_1 / (m |eta| / (|xi+eta||xi|))^{1/2}`,
/// `<_2 / (m |xi| / (|xi+eta||eta|))^{1/2}`.
pub fn upper_ratios(p: &FrequencyPair) -> [f64; 3] {
    let (a, b, c) = p.magnitudes();
    let m = resonance_modulations(p)[2];
    let ang = resonance_angles(p);
    [
        ang[0] / (m * c / (a * b)).sqrt(),
        ang[1] / (m * b / (c * a)).sqrt(),
        ang[2] / (m * a / (c * b)).sqrt(),
    ]
}

/// Angle sum over `(max modulation / min magnitude)^{1/2}`.
pub fn lower_ratio(p: &FrequencyPair) -> f64 {
    let (a, b, c) = p.magnitudes();
    let d = resonance_modulations(p).iter().cloned().fold(0.0, f64::max);
    let sum: f64 = resonance_angles(p).iter().sum();
    if sum == 0.0 {
        return 0.0;
    }
    sum / (d / a.min(b).min(c)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Regime {
    /// Inputs `<< d`, output `~ d`.
    Full,
    /// All three modulations `<= d`.
    Lower,
}

fn in_class(x: f64, l: f64) -> bool {
    x >= l / 2.0 && x < 2.0 * l
}

fn orthonormal_pair(dim: usize, rng: &mut impl Rng) -> ([f64; 3], [f64; 3]) {
    if dim == 2 {
        let psi = rng.random_range(0.0..2.0 * std::f64::consts::PI);
        let (s, c) = psi.sin_cos();
        return ([c, s, 0.0], [-s, c, 0.0]);
    }
    let mut g = || -> [f64; 3] {
        [StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng)]
    };
    let e1 = {
        let v = g();
        scaled(1.0 / norm(&v), &v)
    };
    let v = g();
    let dot = v[0] * e1[0] + v[1] * e1[1] + v[2] * e1[2];
    let w = add(&v, &scaled(-dot, &e1));
    (e1, scaled(1.0 / norm(&w), &w))
}

/// Proposal aimed at a target output modulation, followed by an exact
/// acceptance test of every constraint.
fn propose(
    rng: &mut impl Rng,
    dim: usize,
    l: [f64; 3],
    d: f64,
    regime: Regime,
) -> Option<FrequencyPair> {
    let a = l[1] * 2f64.powf(rng.random_range(-1.0..1.0));
    let b = l[2] * 2f64.powf(rng.random_range(-1.0..1.0));
    let s1 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let s2 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let (spread, target) = match regime {
        Regime::Full => (d / 8.0, d * 2f64.powf(rng.random_range(-1.0..1.0))),
        Regime::Lower => (d, rng.random_range(0.0..d)),
    };
    let cos_phi = if s1 == s2 {
        ((a + b - target).powi(2) - a * a - b * b) / (2.0 * a * b)
    } else {
        (a * a + b * b - ((a - b).abs() + target).powi(2)) / (2.0 * a * b)
    };
    if !(-1.0..=1.0).contains(&cos_phi) {
        return None;
    }
    let sin_phi = (1.0 - cos_phi * cos_phi).sqrt();
    let (e1, e2) = orthonormal_pair(dim, rng);
    let big_a = scaled(a, &e1);
    let big_b = add(&scaled(b * cos_phi, &e1), &scaled(b * sin_phi, &e2));
    let d1 = rng.random_range(-spread..spread);
    let d2 = rng.random_range(-spread..spread);
    if a + d1 <= 0.0 || b + d2 <= 0.0 {
        return None;
    }
    let p = FrequencyPair {
        xi: scaled(s1, &big_a),
        eta: scaled(s2, &big_b),
        tau: s1 * (a + d1),
        tau2: s2 * (b + d2),
    };
    let (na, nb, nc) = p.magnitudes();
    if !(in_class(na, l[1]) && in_class(nb, l[2]) && in_class(nc, l[0])) {
        return None;
    }
    let m = resonance_modulations(&p);
    let ok = match regime {
        Regime::Full => m[0] < d / 8.0 && m[1] < d / 8.0 && m[2] >= d / 2.0 && m[2] <= 2.0 * d,
        Regime::Lower => m.iter().all(|v| *v <= d),
    };
    ok.then_some(p)
}

struct Cell {
    l: [f64; 3],
    d: f64,
}

fn cells(spec: &SamplingSpec) -> Vec<Cell> {
    let oct = spec.octaves as i32;
    let axis = |base: f64| (0..=oct).map(move |k| base * 2f64.powi(k)).collect::<Vec<_>>();
    let (a0, a1, a2) = (axis(spec.lambda0), axis(spec.lambda1), axis(spec.lambda2));
    let lo = spec.mu().log2() as i32 - 2;
    let hi = spec.lambda0.max(spec.lambda1).max(spec.lambda2).log2() as i32 + oct + 1;
    let mut out = Vec::new();
    for &l0 in &a0 {
        for &l1 in &a1 {
            for &l2 in &a2 {
                for j in lo..=hi {
                    out.push(Cell {
                        l: [l0, l1, l2],
                        d: 2f64.powi(j),
                    });
                }
            }
        }
    }
    out
}

fn sample_cell(spec: &SamplingSpec, cell: &Cell, index: usize, regime: Regime) -> (Vec<FrequencyPair>, usize) {
    let mut rng = trial_rng(spec.seed, index as u64);
    let mut found = Vec::with_capacity(spec.samples);
    let mut attempts = 0;
    while found.len() < spec.samples && attempts < spec.budget {
        attempts += 1;
        if let Some(p) = propose(&mut rng, spec.dim, cell.l, cell.d, regime) {
            found.push(p);
        }
    }
    (found, attempts)
}

fn require_plane(spec: &SamplingSpec) -> Result<()> {
    spec.validate()?;
    if spec.dim < 2 {
        return Err(Error::Config("resonance geometry needs dimension 2 or 3".into()));
    }
    Ok(())
}

struct CellOutcome {
    label: String,
    samples: usize,
    attempts: usize,
    /// main angle ratios, low branch only
    ratios: Vec<f64>,
    secondary_max: f64,
    branch: f64,
    high_branch_bad: usize,
    opposite_bad: usize,
}

/// Full-cone resonance bound: for inputs within `d/8` of the cone and output
/// modulation `~ d`, `<(sgn tau xi, sgn tau' eta) ~ (d l0 / (l1 l2))^{1/2}` when
/// `d <= mu`; for `d >> mu` only equal signs, `<(xi, eta) ~ 1`, `d ~ l_max`
/// and `l0 << l1 ~ l2` occur.
pub fn check_resonance(spec: &SamplingSpec) -> Result<EstimateReport> {
    require_plane(spec)?;
    let br = spec.bracket;
    let cells = cells(spec);
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .enumerate()
        .map(|(i, cell)| {
            let (found, attempts) = sample_cell(spec, cell, i, Regime::Full);
            let [l0, l1, l2] = cell.l;
            let mu = l0.min(l1).min(l2);
            let lmax = l0.max(l1).max(l2);
            let branch = if cell.d <= mu {
                0.0
            } else if cell.d >= 16.0 * mu {
                2.0
            } else {
                1.0
            };
            let mut ratios = Vec::new();
            let mut secondary_max: f64 = 0.0;
            let mut high_bad = 0;
            let mut opp_bad = 0;
            for p in &found {
                let r = upper_ratios(p);
                if branch == 0.0 {
                    ratios.push(r[0]);
                    secondary_max = secondary_max.max(r[1]).max(r[2]);
                }
                if branch == 2.0 {
                    let same = sgn(p.tau) == sgn(p.tau2);
                    let ang = angle(&p.xi, &p.eta);
                    let ok = same
                        && br.contains(ang)
                        && br.contains(cell.d / lmax)
                        && l0 < l1.min(l2)
                        && (0.25..=4.0).contains(&(l1 / l2));
                    if !ok {
                        high_bad += 1;
                    }
                }
                if sgn(p.tau) != sgn(p.tau2) {
                    // the output modulation is then at most |xi + eta|
                    let (_, _, c) = p.magnitudes();
                    if resonance_modulations(p)[2] > c * (1.0 + 1e-12) {
                        opp_bad += 1;
                    }
                }
            }
            CellOutcome {
                label: format!("l0={l0},l1={l1},l2={l2},d={}", cell.d),
                samples: found.len(),
                attempts,
                ratios,
                secondary_max,
                branch,
                high_branch_bad: high_bad,
                opposite_bad: opp_bad,
            }
        })
        .collect();

    let all: Vec<f64> = outcomes.iter().flat_map(|o| o.ratios.iter().copied()).collect();
    let mut report = EstimateReport::new("resonance", spec, br, &all);
    let mut infeasible = 0;
    let mut short = 0;
    let (mut sec, mut high_bad, mut opp_bad, mut high_n) = (0.0f64, 0, 0, 0);
    for o in &outcomes {
        let st = super::Stats::of(&o.ratios);
        if o.samples == 0 {
            infeasible += 1;
        } else if o.samples < spec.samples {
            short += 1;
        }
        if o.branch == 2.0 {
            high_n += o.samples;
        }
        sec = sec.max(o.secondary_max);
        high_bad += o.high_branch_bad;
        opp_bad += o.opposite_bad;
        report.row(TableRow::new(
            o.label.clone(),
            &[
                ("samples", o.samples as f64),
                ("attempts", o.attempts as f64),
                ("branch", o.branch),
                ("ratio_min", st.min),
                ("ratio_median", st.median),
                ("ratio_max", st.max),
                ("secondary_max", o.secondary_max),
            ],
        ));
    }
    report.note(format!(
        "{} cells, {infeasible} infeasible within budget (excluded regimes), {short} below the sample target",
        outcomes.len()
    ));
    report.note(format!("d >> mu branch: {high_n} samples, {high_bad} violating same-sign/angle~1/d~max/l0<<l1~l2"));
    report.note(format!("largest secondary angle ratio in the d <= mu branch: {sec:.6e}"));
    report.require(sec <= br.hi, format!("secondary angle ratio {sec:e} above {}", br.hi));
    report.require(high_bad == 0, format!("{high_bad} samples contradict the d >> mu branch"));
    report.require(opp_bad == 0, format!("{opp_bad} opposite-sign samples with output modulation above |xi+eta|"));
    Ok(report)
}

/// Lower bound: with all modulations `<= d`, the three signed angles sum to
/// at most a multiple of `(d / mu)^{1/2}`; ratios use the actual maximal
/// modulation and the smallest actual magnitude.
pub fn check_resonance_lower(spec: &SamplingSpec) -> Result<EstimateReport> {
    require_plane(spec)?;
    let cells = cells(spec);
    let per: Vec<(String, usize, Vec<f64>)> = cells
        .par_iter()
        .enumerate()
        .map(|(i, cell)| {
            let (found, _) = sample_cell(spec, cell, i, Regime::Lower);
            let r: Vec<f64> = found.iter().map(lower_ratio).collect();
            let [l0, l1, l2] = cell.l;
            (format!("l0={l0},l1={l1},l2={l2},d={}", cell.d), found.len(), r)
        })
        .collect();
    let all: Vec<f64> = per.iter().flat_map(|(_, _, r)| r.iter().copied()).collect();
    let mut report = EstimateReport::new("resonance-lower", spec, Bracket::upper(spec.bracket.hi), &all);
    for (label, n, r) in &per {
        let st = super::Stats::of(r);
        report.row(TableRow::new(
            label.clone(),
            &[("samples", *n as f64), ("ratio_median", st.median), ("ratio_max", st.max)],
        ));
    }
    Ok(report)
}
