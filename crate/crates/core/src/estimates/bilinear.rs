//! Bilinear `L^2_{t,x}` bounds for transverse free waves and step-function
//! (atomic) waves, evaluated exactly on a sparse frequency lattice.
//!
//! A lattice wave on the torus of period `L` is
//! `u(t,x) = L^{-n/2} sum_k a_k e^{i xi_k . x} e^{-i t w_k}` with `w_k = s |xi_k|`,
//! so `||u(t)||_{L^2} = |a|_{l^2}`. Products are grouped by output mode and the
//! time integrals of the resulting exponential sums are taken in closed form.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{dyadic_sweep, fit_loglog, Bracket, EstimateReport, SamplingSpec, Stats, TableRow};
use crate::error::{Error, Result};
use crate::multipliers::Sign;
use crate::rng::trial_rng;

/// Torus period used by the bilinear checks: dual spacing `1/200`.
pub const LATTICE_PERIOD: f64 = 2.0 * PI * 200.0;

/// Sparse free wave `e^{-+ i t |nabla|} f`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeWave {
    pub period: f64,
    pub dim: usize,
    pub sign: Sign,
    pub modes: Vec<([i64; 3], Complex64)>,
}

impl LatticeWave {
    pub fn norm(&self) -> f64 {
        self.modes.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn xi(&self, k: &[i64; 3]) -> [f64; 3] {
        let s = 2.0 * PI / self.period;
        [k[0] as f64 * s, k[1] as f64 * s, k[2] as f64 * s]
    }

    /// Temporal frequency `w` of mode `k` in `e^{-i t w}`.
    fn omega(&self, k: &[i64; 3]) -> f64 {
        let x = self.xi(k);
        self.sign.value() * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// Random complex Gaussian coefficients on `modes`.
    pub fn random(period: f64, dim: usize, sign: Sign, modes: &[[i64; 3]], rng: &mut impl Rng) -> Self {
        let modes = modes
            .iter()
            .map(|k| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                (*k, Complex64::new(re, im))
            })
            .collect();
        LatticeWave {
            period,
            dim,
            sign,
            modes,
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for (_, a) in &mut self.modes {
            *a *= s;
        }
        self
    }
}

/// Lattice points `k` with `|2 pi k / L - center| < radius`.
pub fn lattice_ball(dim: usize, period: f64, center: [f64; 3], radius: f64) -> Vec<[i64; 3]> {
    let s = 2.0 * PI / period;
    let mut out = Vec::new();
    let range = |a: usize| -> (i64, i64) {
        if a >= dim {
            return (0, 0);
        }
        (
            ((center[a] - radius) / s).floor() as i64,
            ((center[a] + radius) / s).ceil() as i64,
        )
    };
    let (r0, r1, r2) = (range(0), range(1), range(2));
    for i in r0.0..=r0.1 {
        for j in r1.0..=r1.1 {
            for l in r2.0..=r2.1 {
                let x = [i as f64 * s - center[0], j as f64 * s - center[1], l as f64 * s - center[2]];
                if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() < radius {
                    out.push([i, j, l]);
                }
            }
        }
    }
    out
}

/// `int_s^e e^{-i w t} dt`.
fn phase_integral(w: f64, s: f64, e: f64) -> Complex64 {
    let h = e - s;
    if (w * h).abs() < 1e-9 {
        return Complex64::new(h, 0.0);
    }
    let a = Complex64::from_polar(1.0, -w * e);
    let b = Complex64::from_polar(1.0, -w * s);
    (a - b) / Complex64::new(0.0, -w)
}

/// `||u v||^2_{L^2([s,e] x T^n)}` for two lattice waves.
fn product_norm_sqr(u: &LatticeWave, v: &LatticeWave, s: f64, e: f64) -> f64 {
    let mut groups: BTreeMap<[i64; 3], Vec<(Complex64, f64)>> = BTreeMap::new();
    for (k, a) in &u.modes {
        let wu = u.omega(k);
        for (k2, b) in &v.modes {
            let key = [k[0] + k2[0], k[1] + k2[1], k[2] + k2[2]];
            groups.entry(key).or_default().push((a * b, wu + v.omega(k2)));
        }
    }
    let mut total = 0.0;
    for terms in groups.values() {
        for (i, (cp, np)) in terms.iter().enumerate() {
            total += cp.norm_sqr() * (e - s);
            for (cq, nq) in &terms[i + 1..] {
                total += 2.0 * (cp * cq.conj() * phase_integral(np - nq, s, e)).re;
            }
        }
    }
    total.max(0.0) / u.period.powi(u.dim as i32)
}

/// Step function in time whose pieces are lattice free waves, zero before the
/// first start; the last piece runs to the end of the window.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicWave {
    pub pieces: Vec<(f64, LatticeWave)>,
}

impl AtomicWave {
    pub fn free(w: LatticeWave, start: f64) -> Self {
        AtomicWave { pieces: vec![(start, w)] }
    }

    /// `(sum_m ||f_m||^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.pieces.iter().map(|(_, w)| w.norm().powf(p)).sum::<f64>().powf(1.0 / p)
    }

    fn piece_at(&self, t: f64) -> Option<&LatticeWave> {
        self.pieces.iter().rev().find(|(s, _)| *s <= t).map(|(_, w)| w)
    }
}

/// `||u v||_{L^2([t0, t1] x T^n)}` for step-function waves.
pub fn bilinear_norm(u: &AtomicWave, v: &AtomicWave, window: (f64, f64)) -> Result<f64> {
    let (t0, t1) = window;
    if !(t1 > t0) {
        return Err(Error::Range(format!("empty window [{t0}, {t1}]")));
    }
    let mut cuts: Vec<f64> = vec![t0, t1];
    cuts.extend(u.pieces.iter().chain(&v.pieces).map(|(s, _)| *s).filter(|s| *s > t0 && *s < t1));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if let (Some(a), Some(b)) = (u.piece_at(mid), v.piece_at(mid)) {
            if a.period != b.period || a.dim != b.dim {
                return Err(Error::Shape("lattice waves on different tori".into()));
            }
            total += product_norm_sqr(a, b, w[0], w[1]);
        }
    }
    Ok(total.sqrt())
}

/// Supports `|xi - e_1| < 1/100` and `|xi -+ lambda e_2| < lambda/100`.
fn supports(dim: usize, lambda: f64, sign: Sign) -> Result<(Vec<[i64; 3]>, Vec<[i64; 3]>)> {
    if dim < 2 {
        return Err(Error::Config("transverse supports need dimension >= 2".into()));
    }
    let l1 = lattice_ball(dim, LATTICE_PERIOD, [1.0, 0.0, 0.0], 0.01);
    let l2 = lattice_ball(dim, LATTICE_PERIOD, [0.0, sign.value() * lambda, 0.0], lambda / 100.0);
    if l2.len() > 200_000 {
        return Err(Error::Range(format!("lambda = {lambda} needs {} lattice modes", l2.len())));
    }
    Ok((l1, l2))
}

fn sign_label(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "same",
        Sign::Minus => "opposite",
    }
}

/// `||e^{-it|nabla|} f e^{-+it|nabla|} g||_{L^2} / (||f|| ||g||)` over the window
/// `[0, spec.window]` for `lambda = 1, 2, ..., 2^octaves`; the statement is uniform
/// boundedness, checked as `max/min < 8` across the sweep for each sign.
pub fn check_bilinear_free(spec: &SamplingSpec) -> Result<EstimateReport> {
    spec.validate()?;
    let lambdas = dyadic_sweep(1.0, spec.octaves);
    let mut all = Vec::new();
    let mut rows = Vec::new();
    let mut spreads = Vec::new();
    for (si, sign) in [Sign::Plus, Sign::Minus].into_iter().enumerate() {
        let mut ratios_sign = Vec::new();
        for (li, &lambda) in lambdas.iter().enumerate() {
            let (s1, s2) = supports(spec.dim, lambda, sign)?;
            let ratios: Vec<f64> = (0..spec.samples)
                .into_par_iter()
                .map(|k| {
                    let trial = ((si * lambdas.len() + li) * spec.samples + k) as u64;
                    let mut rng = trial_rng(spec.seed, trial);
                    let f = LatticeWave::random(LATTICE_PERIOD, spec.dim, Sign::Plus, &s1, &mut rng);
                    let g = LatticeWave::random(LATTICE_PERIOD, spec.dim, sign, &s2, &mut rng);
                    let den = f.norm() * g.norm();
                    let num = bilinear_norm(&AtomicWave::free(f, 0.0), &AtomicWave::free(g, 0.0), (0.0, spec.window))
                        .expect("same torus");
                    num / den
                })
                .collect();
            let st = Stats::of(&ratios);
            rows.push(TableRow::new(
                format!("{},lambda={lambda}", sign_label(sign)),
                &[("min", st.min), ("median", st.median), ("max", st.max), ("modes", s2.len() as f64)],
            ));
            ratios_sign.extend(ratios);
        }
        let st = Stats::of(&ratios_sign);
        spreads.push((sign, st.max / st.min));
        all.extend(ratios_sign);
    }
    let mut report = EstimateReport::new("bilinear-free", spec, Bracket::upper(spec.bracket.hi), &all);
    report.table = rows;
    for (sign, spread) in spreads {
        report.row(TableRow::new(format!("{},spread", sign_label(sign)), &[("max_over_min", spread)]));
        report.require(spread < 8.0, format!("{} sign: max/min ratio {spread:.4} >= 8", sign_label(sign)));
    }
    report.note(format!("torus period {LATTICE_PERIOD}, window [0, {}]", spec.window));
    Ok(report)
}

/// Random step-function wave with `1..=4` pieces starting at 0, normalized to
/// `(sum ||f_m||^p)^{1/p} = 1`.
fn random_atom(modes: &[[i64; 3]], dim: usize, sign: Sign, window: f64, p: f64, rng: &mut impl Rng) -> AtomicWave {
    let pieces = rng.random_range(1..=4usize);
    let mut starts: Vec<f64> = (1..pieces).map(|_| rng.random_range(0.0..window)).collect();
    starts.push(0.0);
    starts.sort_by(f64::total_cmp);
    let waves: Vec<LatticeWave> = starts
        .iter()
        .map(|_| LatticeWave::random(LATTICE_PERIOD, dim, sign, modes, rng))
        .collect();
    let total = waves.iter().map(|w| w.norm().powf(p)).sum::<f64>().powf(1.0 / p);
    AtomicWave {
        pieces: starts.into_iter().zip(waves.into_iter().map(|w| w.scaled(1.0 / total))).collect(),
    }
}

/// `||u v||_{L^2} / (lambda^{(n+1)(1/2 - 1/a)} ||u||_{l^a L^2} ||v||_{l^b L^2})` for
/// step-function waves with pieces supported in the transverse sets; the
/// unnormalized ratio's log-log slope in `lambda` is fitted and must not exceed
/// the exponent by more than 0.3.
pub fn check_bilinear_atomic(spec: &SamplingSpec, a: f64, b: f64) -> Result<EstimateReport> {
    spec.validate()?;
    let n = spec.dim as f64;
    if !(1.0 / (n + 1.0) < 1.0 / b && 1.0 / b <= 1.0 / a && 1.0 / a <= 0.5) {
        return Err(Error::Config(format!(
            "exponents a = {a}, b = {b} need 1/(n+1) < 1/b <= 1/a <= 1/2 with n = {}",
            spec.dim
        )));
    }
    let exponent = (n + 1.0) * (0.5 - 1.0 / a);
    let lambdas = dyadic_sweep(1.0, spec.octaves);
    let mut normalized = Vec::new();
    let mut medians = Vec::new();
    let mut rows = Vec::new();
    for (li, &lambda) in lambdas.iter().enumerate() {
        let (s1, s2) = supports(spec.dim, lambda, Sign::Plus)?;
        let ratios: Vec<f64> = (0..spec.samples)
            .into_par_iter()
            .map(|k| {
                let mut rng = trial_rng(spec.seed, (li * spec.samples + k) as u64);
                let u = random_atom(&s1, spec.dim, Sign::Plus, spec.window, a, &mut rng);
                let v = random_atom(&s2, spec.dim, Sign::Plus, spec.window, b, &mut rng);
                bilinear_norm(&u, &v, (0.0, spec.window)).expect("same torus") / (u.lp_norm(a) * v.lp_norm(b))
            })
            .collect();
        let st = Stats::of(&ratios);
        let scale = lambda.powf(exponent);
        rows.push(TableRow::new(
            format!("lambda={lambda}"),
            &[("min", st.min), ("median", st.median), ("max", st.max), ("normalized_max", st.max / scale)],
        ));
        medians.push(st.median);
        normalized.extend(ratios.iter().map(|r| r / scale));
    }
    let fit = fit_loglog(&lambdas, &medians)?;
    let mut report = EstimateReport::new("bilinear-atomic", spec, Bracket::upper(spec.bracket.hi), &normalized);
    report.table = rows;
    report.slope = Some(fit);
    report.row(TableRow::new(
        "fit",
        &[("a", a), ("b", b), ("exponent", exponent), ("slope", fit.slope), ("residual", fit.residual)],
    ));
    report.require(
        fit.slope <= exponent + 0.3,
        format!("fitted slope {:.4} exceeds exponent {exponent} + 0.3", fit.slope),
    );
    Ok(report)
}
