//! Checks on the variation spaces: Besov equivalence, high-low products,
//! almost orthogonality, the duality inequality and the key increment bound.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::{dyadic_sweep, Bracket, EstimateReport, SamplingSpec, Stats, TableRow};
use crate::error::{Error, Result};
use crate::fourier::{Grid, SpaceTimeField, SpatialField, TimeGrid};
use crate::multipliers::{
    cap_cover, conjugate_half_wave, cube_cover, half_wave, temporal_band, time_lattice, BandOptions, Comparator,
    Sign, Taper,
};
use crate::rng::trial_rng;
use crate::variation::random::{atom, band_limited, partition, step};
use crate::variation::{
    dual_pairing, increment_sum, p_variation, p_variation_from_rest, up_lower_bound, variation_from_distances,
    vp_norm, Partition, StepFunction,
};

fn zero_mean(f: SpatialField) -> SpatialField {
    f.apply_real_symbol(|m| if m.norm > 0.0 { 1.0 } else { 0.0 })
}

fn white_series(grid: Grid, time: TimeGrid, cutoff: f64, rng: &mut impl Rng) -> SpaceTimeField {
    let snaps = (0..time.samples()).map(|_| band_limited(grid, 1, cutoff, rng)).collect();
    SpaceTimeField::new(time, snaps).expect("consistent shapes")
}

/// `sum_m F_m e^{i tau_m t}` over lattice frequencies with `keep(|tau_m|)`.
fn trig_series(
    grid: Grid,
    time: TimeGrid,
    cutoff: f64,
    keep: impl Fn(f64) -> bool,
    rng: &mut impl Rng,
) -> SpaceTimeField {
    let taus: Vec<f64> = time_lattice(&time).into_iter().filter(|t| keep(t.abs())).collect();
    let scale = 1.0 / (taus.len().max(1) as f64).sqrt();
    let coeffs: Vec<SpatialField> = taus.iter().map(|_| &band_limited(grid, 1, cutoff, rng) * scale).collect();
    let snaps = time
        .times()
        .map(|t| {
            let mut acc = SpatialField::zeros(grid, 1);
            for (tau, c) in taus.iter().zip(&coeffs) {
                let e = Complex64::from_polar(1.0, tau * t);
                for (a, b) in acc.data_mut().iter_mut().zip(c.data()) {
                    *a += b * e;
                }
            }
            acc
        })
        .collect();
    SpaceTimeField::new(time, snaps).expect("consistent shapes")
}

fn pointwise(a: &SpaceTimeField, b: &SpaceTimeField) -> Result<SpaceTimeField> {
    a.zip_map(b, |x, y| {
        let mut o = x.clone();
        for (p, q) in o.data_mut().iter_mut().zip(y.data()) {
            *p *= q;
        }
        o
    })
}

fn pointwise_sup(u: &SpaceTimeField) -> f64 {
    u.snapshots().iter().map(SpatialField::sup_pointwise).fold(0.0, f64::max)
}

/// Time grid of the Besov check: 512 samples at spacing 0.05.
pub fn besov_time() -> TimeGrid {
    TimeGrid::new(0.0, 0.05, 512).expect("valid")
}

/// `|u|_{V^p} / (d^{1/p} ||u||_{L^p L^2})` for fields with temporal support
/// in `d/2 <= |tau| <= 2d`, over `d = d_spec/2 * 2^k`, `k = 0..=octaves`.
pub fn check_besov(spec: &SamplingSpec, p: f64) -> Result<EstimateReport> {
    spec.validate()?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Config(format!("Besov equivalence needs 1 < p < inf, got {p}")));
    }
    let grid = Grid::new(2, 8, 2.0 * PI)?;
    let time = besov_time();
    let ds = dyadic_sweep(spec.d / 2.0, spec.octaves);
    let opts = BandOptions::new(Comparator::Approx, Taper::Rectangular);
    let mut all = Vec::new();
    let mut rows = Vec::new();
    for (di, &d) in ds.iter().enumerate() {
        let ratios: Vec<f64> = (0..spec.samples)
            .into_par_iter()
            .map(|k| -> Result<f64> {
                let mut rng = trial_rng(spec.seed, (di * spec.samples + k) as u64);
                let u = temporal_band(&white_series(grid, time, 2.0, &mut rng), d, opts)?;
                let den = d.powf(1.0 / p) * u.mixed_norm(p);
                Ok(if den == 0.0 { f64::NAN } else { p_variation(&u, p)? / den })
            })
            .collect::<Result<_>>()?;
        let st = Stats::of(&ratios);
        rows.push(TableRow::new(format!("d={d}"), &[("min", st.min), ("median", st.median), ("max", st.max)]));
        all.extend(ratios);
    }
    let mut report = EstimateReport::new(&format!("besov-p{p}"), spec, spec.bracket, &all);
    report.table = rows;
    report.note(format!("window {} samples at dt {}, rectangular taper", time.samples(), time.dt()));
    Ok(report)
}

/// `||f g||_{V^p} / (||f||_{L^inf} ||g||_{V^p})` with `supp F_t f` in `(-1, 1)` and
/// `supp F_t g` in `4 < |tau| <= 16`; plus the adapted variant where `g` is
/// carried by `e^{-it|nabla|}` and the product is measured in `V^p_+`.
pub fn check_highlow(spec: &SamplingSpec, p: f64) -> Result<EstimateReport> {
    spec.validate()?;
    if p < 1.0 {
        return Err(Error::Config(format!("p = {p} < 1")));
    }
    let grid = Grid::new(2, 16, 2.0 * PI * 4.0)?;
    let time = TimeGrid::new(0.0, 0.05, 256)?;
    let low_cut = 0.25;
    // |Phi_0(xi + eta) - Phi_1(xi) - Phi_2(eta)| with Phi_1 = 0, Phi_0 = Phi_2 = |.|
    let mut phase_sup: f64 = 0.0;
    for a in grid.modes().filter(|m| m.norm <= low_cut) {
        for b in grid.modes() {
            let s = [a.xi[0] + b.xi[0], a.xi[1] + b.xi[1]];
            phase_sup = phase_sup.max(((s[0] * s[0] + s[1] * s[1]).sqrt() - b.norm).abs());
        }
    }
    let out: Vec<(f64, f64)> = (0..spec.samples)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let mut rng = trial_rng(spec.seed, k as u64);
            let f = trig_series(grid, time, low_cut, |t| t < 1.0, &mut rng);
            let g = trig_series(grid, time, grid.nyquist(), |t| t > 4.0 && t <= 16.0, &mut rng);
            let fs = pointwise_sup(&f);
            let vg = vp_norm(&g, p)?;
            let plain = vp_norm(&pointwise(&f, &g)?, p)? / (fs * vg);
            let g_ad = g.map_snapshots(|t, s| half_wave(s, t, Sign::Plus));
            let adapted = vp_norm(&conjugate_half_wave(&pointwise(&f, &g_ad)?, Sign::Plus), p)? / (fs * vg);
            Ok((plain, adapted))
        })
        .collect::<Result<_>>()?;
    let plain: Vec<f64> = out.iter().map(|o| o.0).collect();
    let adapted: Vec<f64> = out.iter().map(|o| o.1).collect();
    let all: Vec<f64> = plain.iter().chain(&adapted).copied().collect();
    let mut report = EstimateReport::new(&format!("highlow-p{p}"), spec, Bracket::upper(spec.bracket.hi), &all);
    for (name, v) in [("plain", &plain), ("adapted", &adapted)] {
        let st = Stats::of(v);
        report.row(TableRow::new(name, &[("min", st.min), ("median", st.median), ("max", st.max)]));
    }
    report.row(TableRow::new("phase", &[("sup_phase_mismatch", phase_sup)]));
    report.note(format!("C_hl declared as the bracket upper end {}; observed max {:.6e}", spec.bracket.hi, report.stats.max));
    report.require(phase_sup <= 1.0, format!("phase mismatch {phase_sup} above 1 on the sampled supports"));
    Ok(report)
}

/// Frame bounds `(M1, M2)`: extremes of `(sum_k m_k(xi)^2)^{1/2}` over the
/// nonzero modes of `grid`.
pub fn frame_constants(grid: &Grid, symbols: impl Fn(&[f64; 3]) -> Vec<f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for m in grid.modes().filter(|m| m.norm > 0.0) {
        let q = symbols(&m.xi).iter().map(|v| v * v).sum::<f64>().sqrt();
        lo = lo.min(q);
        hi = hi.max(q);
    }
    (lo, hi)
}

struct Family {
    name: &'static str,
    /// symbol values per mode, `[mode][k]`
    table: Vec<Vec<f64>>,
    m1: f64,
    m2: f64,
}

fn families(grid: &Grid, alpha: f64) -> Result<Vec<Family>> {
    let caps = cap_cover(grid.dim(), alpha)?;
    let cubes = cube_cover(grid, 4.0)?;
    let dim = grid.dim();
    let cube_sym = |xi: &[f64; 3]| cubes.cubes().iter().map(|q| q.symbol(dim, xi)).collect::<Vec<f64>>();
    let mut out = Vec::new();
    for (name, table) in [
        ("caps", grid.modes().map(|m| caps.symbols(&m.xi)).collect::<Vec<_>>()),
        ("cubes", grid.modes().map(|m| cube_sym(&m.xi)).collect::<Vec<_>>()),
    ] {
        let (m1, m2) = frame_constants(grid, |xi| {
            let k: Vec<i64> = (0..dim).map(|a| (xi[a] / grid.dual_spacing()).round() as i64).collect();
            table[grid.index_of(&k).expect("grid mode")].clone()
        });
        out.push(Family { name, table, m1, m2 });
    }
    Ok(out)
}

/// `||T_k f||` for every `k` via Parseval.
fn family_norms(fam: &Family, f: &SpatialField) -> Vec<f64> {
    let spec = f.forward();
    let k = fam.table[0].len();
    let mut acc = vec![0.0; k];
    for (idx, z) in spec.coeffs().iter().enumerate() {
        let w = z.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for (a, s) in acc.iter_mut().zip(&fam.table[idx]) {
            *a += s * s * w;
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Almost orthogonality for angular caps (`spec.alpha`) and cubes of side 4.
///
/// `p <= 2`: `(sum_k ||T_k u||^2_{U^p})^{1/2} <= M2` for atoms `u`, with the
/// `U^p` norms bounded by the l^p norm of the projected piece values.
/// `p >= 2`: `|v|_{V^p} <= M1^{-1} (sum_k |T_k v|^2_{V^p})^{1/2}` with exact
/// DP variations. Ratios are left over right; zero violations allowed.
pub fn check_orthogonality(spec: &SamplingSpec, p: f64) -> Result<EstimateReport> {
    spec.validate()?;
    if p < 1.0 {
        return Err(Error::Config(format!("p = {p} < 1")));
    }
    let grid = Grid::new(2, 32, 2.0 * PI)?;
    let time = TimeGrid::new(0.0, 1.0, 16)?;
    let fams = families(&grid, spec.alpha)?;
    let mut all = Vec::new();
    let mut rows = Vec::new();
    for (fi, fam) in fams.iter().enumerate() {
        if p <= 2.0 {
            let ratios: Vec<f64> = (0..spec.samples)
                .into_par_iter()
                .map(|k| {
                    let mut rng = trial_rng(spec.seed, (2 * fi * spec.samples + k) as u64);
                    let pieces = rng.random_range(1..=5);
                    let part = partition(&time, pieces, &mut rng);
                    let values: Vec<SpatialField> =
                        (0..part.len()).map(|_| zero_mean(band_limited(grid, 1, 12.0, &mut rng))).collect();
                    let a = crate::variation::make_atom(time, part, values, p).expect("nonzero");
                    let norms: Vec<Vec<f64>> = a.step().values().iter().map(|v| family_norms(fam, v)).collect();
                    let kk = norms[0].len();
                    let lhs = (0..kk)
                        .map(|c| norms.iter().map(|n| n[c].powf(p)).sum::<f64>().powf(2.0 / p))
                        .sum::<f64>()
                        .sqrt();
                    lhs / fam.m2
                })
                .collect();
            let st = Stats::of(&ratios);
            rows.push(TableRow::new(
                format!("{},U^p", fam.name),
                &[("M2", fam.m2), ("max_ratio", st.max), ("median_ratio", st.median)],
            ));
            all.extend(ratios);
        }
        if p >= 2.0 {
            let ratios: Vec<f64> = (0..spec.samples)
                .into_par_iter()
                .map(|k| {
                    let mut rng = trial_rng(spec.seed, ((2 * fi + 1) * spec.samples + k) as u64);
                    let pieces = rng.random_range(1..=6);
                    let w = step(grid, time, pieces, 12.0, &mut rng);
                    let v = w.sample();
                    let m = v.time().samples();
                    let diffs: Vec<Vec<SpatialField>> = (0..m)
                        .map(|i| (0..m).map(|j| zero_mean(v.snapshot(i) - v.snapshot(j))).collect())
                        .collect();
                    let mut total = vec![vec![0.0; m]; m];
                    // left side: |v|_{V^p} of the zero-mean part
                    let kk = fam.table[0].len();
                    let mut per: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; m]; m]; kk];
                    for i in 0..m {
                        for j in 0..i {
                            total[i][j] = diffs[i][j].norm();
                            total[j][i] = total[i][j];
                            for (c, n) in family_norms(fam, &diffs[i][j]).into_iter().enumerate() {
                                per[c][i][j] = n;
                                per[c][j][i] = n;
                            }
                        }
                    }
                    let lhs = variation_from_distances(&total, p);
                    let rhs = per.iter().map(|d| variation_from_distances(d, p).powi(2)).sum::<f64>().sqrt() / fam.m1;
                    if rhs == 0.0 {
                        f64::NAN
                    } else {
                        lhs / rhs
                    }
                })
                .collect();
            let st = Stats::of(&ratios);
            rows.push(TableRow::new(
                format!("{},V^p", fam.name),
                &[("M1", fam.m1), ("max_ratio", st.max), ("median_ratio", st.median)],
            ));
            all.extend(ratios);
        }
    }
    let mut report = EstimateReport::new(&format!("orthogonality-p{p}"), spec, Bracket::upper(1.0 + 1e-10), &all);
    report.table = rows;
    Ok(report)
}

/// Extremizer for an atom: increments `||f_m||^{p-2} f_m` at the atom's jumps,
/// which gives `B = 1`.
pub fn extremal_step(a: &crate::variation::UpAtom) -> Result<StepFunction> {
    let p = a.p();
    let mut acc = SpatialField::zeros(*a.step().values()[0].grid(), a.step().values()[0].comps());
    let mut values = Vec::new();
    for f in a.step().values() {
        let n = f.norm();
        if n > 0.0 {
            acc = &acc + &(f * n.powf(p - 2.0));
        }
        values.push(acc.clone());
    }
    StepFunction::new(
        *a.step().time(),
        Partition::new(a.step().partition().indices().to_vec(), a.step().time())?,
        values,
    )
}

/// `|B(w, u)| <= |w|_{V^q}` for atoms `u` and step functions `w`, and
/// `up_lower_bound(atom) <= 1`.
pub fn check_duality(spec: &SamplingSpec, p: f64) -> Result<EstimateReport> {
    spec.validate()?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Config(format!("duality needs 1 < p < inf, got {p}")));
    }
    let q = p / (p - 1.0);
    let grid = Grid::new(1, 8, 2.0 * PI)?;
    let time = TimeGrid::new(0.0, 1.0, 32)?;
    let out: Vec<(f64, bool, f64)> = (0..spec.samples)
        .into_par_iter()
        .map(|k| -> Result<(f64, bool, f64)> {
            let mut rng = trial_rng(spec.seed, k as u64);
            let a = atom(grid, time, rng.random_range(1..=6), p, &mut rng);
            let w = step(grid, time, rng.random_range(1..=6), grid.nyquist(), &mut rng);
            let u = a.sample();
            let b = dual_pairing(&w, &u)?.norm();
            let v = w.variation(q);
            let violated = b > v + 1e-12 * v.max(1.0);
            let ext = extremal_step(&a)?;
            let gap = 1.0 - dual_pairing(&ext, &u)?.norm() / ext.variation(q);
            Ok((if v > 0.0 { b / v } else { f64::NAN }, violated, gap))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = out.iter().map(|o| o.0).collect();
    let violations = out.iter().filter(|o| o.1).count();
    let gaps: Vec<f64> = out.iter().map(|o| o.2).collect();
    let lower_checks = spec.samples.min(20);
    let mut worst_lower: f64 = 0.0;
    for k in 0..lower_checks {
        let mut rng = trial_rng(spec.seed ^ 0x5eed, k as u64);
        let a = atom(grid, time, rng.random_range(1..=6), p, &mut rng);
        worst_lower = worst_lower.max(up_lower_bound(&a.sample(), p, 6, k as u64)?);
    }
    let mut report = EstimateReport::new(&format!("duality-p{p}"), spec, Bracket::upper(1.0 + 1e-12), &ratios);
    report.violations = violations;
    let gst = Stats::of(&gaps);
    report.row(TableRow::new(
        "extremizer",
        &[("gap_min", gst.min), ("gap_median", gst.median), ("gap_max", gst.max)],
    ));
    report.row(TableRow::new("atom_lower_bound", &[("checked", lower_checks as f64), ("max", worst_lower)]));
    report.require(violations == 0, format!("{violations} pairs with |B(w,u)| > |w|_V^q"));
    report.require(worst_lower <= 1.0 + 1e-10, format!("lower bound {worst_lower} of an atom exceeds 1"));
    Ok(report)
}

/// `sum_j m_j^p ||g(t_j) - g(t_j - s)||^p <= 2 (1 + |s|) |g|^p_{V^p}` over random
/// step and smooth series, shifts and partitions.
pub fn check_key_increment(spec: &SamplingSpec, p: f64) -> Result<EstimateReport> {
    spec.validate()?;
    if p < 1.0 {
        return Err(Error::Config(format!("p = {p} < 1")));
    }
    let grid = Grid::new(1, 8, 2.0 * PI)?;
    let time = TimeGrid::new(0.0, 0.25, 40)?;
    let out: Vec<(f64, bool)> = (0..spec.samples)
        .into_par_iter()
        .map(|k| -> Result<(f64, bool)> {
            let mut rng = trial_rng(spec.seed, k as u64);
            let g = if k % 2 == 0 {
                step(grid, time, rng.random_range(1..=8), grid.nyquist(), &mut rng).sample()
            } else {
                let opts = BandOptions::new(Comparator::AtMost, Taper::Rectangular);
                temporal_band(&white_series(grid, time, grid.nyquist(), &mut rng), 4.0, opts)?
            };
            let s: f64 = rng.random_range(-4.0..4.0);
            let s_eff = (s / time.dt()).round() * time.dt();
            let part = partition(&time, rng.random_range(1..=12), &mut rng);
            let lhs = increment_sum(&g, s, p, &part)?;
            let rhs = 2.0 * (1.0 + s_eff.abs()) * p_variation_from_rest(&g, p)?.powf(p);
            let violated = lhs > rhs * (1.0 + 1e-12) + 1e-300;
            Ok((if rhs > 0.0 { lhs / rhs } else { f64::NAN }, violated))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = out.iter().map(|o| o.0).collect();
    let mut report = EstimateReport::new(&format!("key-increment-p{p}"), spec, Bracket::upper(1.0 + 1e-12), &ratios);
    report.violations = out.iter().filter(|o| o.1).count();
    report.refresh();
    Ok(report)
}
