//! Product and `box^{-1}`-product bounds for Littlewood-Paley pieces of
//! truncated free waves, measured with the `S`-norm proxy.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{Bracket, EstimateReport, SamplingSpec, Stats, TableRow};
use crate::error::{Error, Result};
use crate::fourier::{gradient_power, Grid, SpaceTimeField, TimeGrid};
use crate::multipliers::{littlewood_paley, littlewood_paley_st};
use crate::rng::trial_rng;
use crate::variation::random::band_limited;
use crate::variation::s_norm_proxy;
use crate::wavemaps::{duhamel, truncated_free_wave};

/// Search budget of the `U^2` lower bounds inside the proxy.
const PROXY_BUDGET: usize = 16;
const SCALES: [f64; 3] = [1.0, 2.0, 4.0];

fn times(a: &SpaceTimeField, b: &SpaceTimeField) -> Result<SpaceTimeField> {
    a.zip_map(b, |x, y| {
        let mut o = x.clone();
        for (p, q) in o.data_mut().iter_mut().zip(y.data()) {
            *p *= q;
        }
        o
    })
}

/// `(P_{lambda0}(u v), P_{lambda0}(u_t v + u v_t))`.
pub fn product_band(
    u: &(SpaceTimeField, SpaceTimeField),
    v: &(SpaceTimeField, SpaceTimeField),
    lambda0: f64,
) -> Result<(SpaceTimeField, SpaceTimeField)> {
    let w = littlewood_paley_st(&times(&u.0, &v.0)?, lambda0)?;
    let wt = littlewood_paley_st(&times(&u.1, &v.0)?.add(&times(&u.0, &v.1)?)?, lambda0)?;
    Ok((w, wt))
}

/// Window of the division check: `t = -2 .. 4.3` at spacing 0.1.
pub fn division_time() -> TimeGrid {
    TimeGrid::new(-2.0, 0.1, 64).expect("valid")
}

fn division_grid() -> Grid {
    Grid::new(2, 16, 2.0 * PI).expect("valid")
}

/// Truncated free wave with data `(P_lambda f, |nabla| P_lambda h)`.
fn band_wave(lambda: f64, time: TimeGrid, rng: &mut impl rand::Rng) -> Result<(SpaceTimeField, SpaceTimeField)> {
    let grid = division_grid();
    let f = littlewood_paley(&band_limited(grid, 1, grid.nyquist(), rng), lambda)?;
    let h = littlewood_paley(&band_limited(grid, 1, grid.nyquist(), rng), lambda)?;
    let g = gradient_power(&h, 1.0);
    let n = (f.norm_sqr() + h.norm_sqr()).sqrt();
    if n == 0.0 {
        return Err(Error::Degenerate("empty frequency band".into()));
    }
    truncated_free_wave(&(&f * (1.0 / n)), &(&g * (1.0 / n)), time, 1.0)
}

/// `rho(t) v` with `rho = cos t` for `t >= 0` (1 before), its time derivative and
/// `box(rho v) = rho'' v + 2 rho' v_t` for a free wave `v`.
fn modulated(v: &(SpaceTimeField, SpaceTimeField)) -> (SpaceTimeField, SpaceTimeField, SpaceTimeField) {
    let rho = |t: f64| if t >= 0.0 { t.cos() } else { 1.0 };
    let drho = |t: f64| if t >= 0.0 { -t.sin() } else { 0.0 };
    let ddrho = |t: f64| if t >= 0.0 { -t.cos() } else { 0.0 };
    let time = *v.0.time();
    let idx = |t: f64| time.nearest(t);
    let val = v.0.map_snapshots(|t, s| s * rho(t));
    let vel = v.0.map_snapshots(|t, s| &(s * drho(t)) + &(v.1.snapshot(idx(t)) * rho(t)));
    let box_ = v.0.map_snapshots(|t, s| &(s * ddrho(t)) + &(v.1.snapshot(idx(t)) * (2.0 * drho(t))));
    (val, vel, box_)
}

/// Upper and lower ends of the `S` proxy.
fn proxy(u: &(SpaceTimeField, SpaceTimeField), seed: u64) -> Result<(f64, f64)> {
    let r = s_norm_proxy(&u.0, &u.1, PROXY_BUDGET, seed)?;
    Ok((r.s.lower, r.s.upper))
}

struct Cell {
    triple: [f64; 3],
    alg: f64,
    nonlin: f64,
}

/// `lambda0^{n/2} ||P_{lambda0}(u v)||_S / ((lambda1 lambda2)^{n/2} ||u||_S ||v||_S)`
/// and the same with `box^{-1} P_{lambda0}(u box v)` on the left, over all triples
/// in `{1, 2, 4}^3`. The left side uses the proxy upper bound, the right side
/// the proxy lower bounds, so the ratios overestimate the true ones.
pub fn check_division(spec: &SamplingSpec) -> Result<EstimateReport> {
    spec.validate()?;
    let time = division_time();
    let n = 2.0;
    let mut triples = Vec::new();
    for &l0 in &SCALES {
        for &l1 in &SCALES {
            for &l2 in &SCALES {
                triples.push([l0, l1, l2]);
            }
        }
    }
    let cells: Vec<Cell> = triples
        .par_iter()
        .enumerate()
        .flat_map_iter(|(ci, &tr)| {
            (0..spec.samples).map(move |k| -> Result<Cell> {
                let trial = (ci * spec.samples + k) as u64;
                let mut rng = trial_rng(spec.seed, trial);
                let u = band_wave(tr[1], time, &mut rng)?;
                let v = band_wave(tr[2], time, &mut rng)?;
                let (_, ul) = proxy(&u, trial)?;
                let (_, vl) = proxy(&v, trial + 1)?;
                let den = (tr[1] * tr[2]).powf(n / 2.0) * ul * vl;
                let w = product_band(&u, &v, tr[0])?;
                let (wu, _) = proxy(&w, trial + 2)?;
                let (vn, vnt, box_v) = modulated(&v);
                let (_, vnl) = proxy(&(vn, vnt), trial + 3)?;
                let force = littlewood_paley_st(&times(&u.0, &box_v)?, tr[0])?;
                let big_w = duhamel(&force)?;
                let (wn, _) = proxy(&big_w, trial + 4)?;
                let den_nl = (tr[1] * tr[2]).powf(n / 2.0) * ul * vnl;
                let scale0 = tr[0].powf(n / 2.0);
                Ok(Cell {
                    triple: tr,
                    alg: scale0 * wu / den,
                    nonlin: scale0 * wn / den_nl,
                })
            })
        })
        .collect::<Result<_>>()?;
    let all: Vec<f64> = cells.iter().flat_map(|c| [c.alg, c.nonlin]).collect();
    let mut report = EstimateReport::new("division", spec, Bracket::upper(spec.bracket.hi), &all);
    for tr in &triples {
        let alg: Vec<f64> = cells.iter().filter(|c| c.triple == *tr).map(|c| c.alg).collect();
        let nl: Vec<f64> = cells.iter().filter(|c| c.triple == *tr).map(|c| c.nonlin).collect();
        let (a, b) = (Stats::of(&alg), Stats::of(&nl));
        report.row(TableRow::new(
            format!("l0={},l1={},l2={}", tr[0], tr[1], tr[2]),
            &[("product_max", a.max), ("product_median", a.median), ("inverse_box_max", b.max), ("inverse_box_median", b.median)],
        ));
    }
    report.note(format!(
        "window t in [{}, {}], dt {}, proxy budget {PROXY_BUDGET}; right sides use proxy lower bounds",
        time.t0(),
        time.time(time.samples() - 1),
        time.dt()
    ));
    Ok(report)
}
