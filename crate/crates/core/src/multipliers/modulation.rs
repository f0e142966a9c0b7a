//! Temporal-frequency bands and modulation (distance to the cone) projections.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cutoff::{psi, theta};
use crate::error::{Error, Result};
use crate::fourier::{fft_1d, Direction, Mode, SpaceTimeField, SpatialField, SpectralField, TimeGrid};

/// Window applied to the time series before the temporal transform.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Taper {
    Rectangular,
    /// Periodic Hann window `(1 - cos(2 pi j / M)) / 2`.
    #[default]
    Hann,
}

impl Taper {
    pub fn weights(self, samples: usize) -> Vec<f64> {
        match self {
            Taper::Rectangular => vec![1.0; samples],
            Taper::Hann => (0..samples)
                .map(|j| 0.5 * (1.0 - (2.0 * PI * j as f64 / samples as f64).cos()))
                .collect(),
        }
    }
}

/// `Approx`: symbol `psi(r/d)` supported in `[d/2, 2d]`; `AtMost`: `theta(r/d)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[default]
    Approx,
    AtMost,
}

impl Comparator {
    pub fn profile(self, r: f64) -> f64 {
        match self {
            Comparator::Approx => psi(r),
            Comparator::AtMost => theta(r),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandOptions {
    pub comparator: Comparator,
    pub taper: Taper,
}

impl BandOptions {
    pub fn new(comparator: Comparator, taper: Taper) -> Self {
        BandOptions { comparator, taper }
    }
}

/// Which distance to the cone is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modulation {
    /// `|tau + |xi||`
    Plus,
    /// `|tau - |xi||`
    Minus,
    /// `||tau| - |xi||`
    Cone,
}

/// Implementation of a signed modulation projection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    /// Conjugate by the half-wave flow, cut in `tau`, conjugate back (FFT based).
    #[default]
    Conjugation,
    /// Explicit space-time symbol on the shifted temporal lattice (O(M^2) per mode).
    Direct,
}

/// Angular temporal frequencies `tau_m = 2 pi m / (M dt)`, `m` in FFT order.
pub fn time_lattice(time: &TimeGrid) -> Vec<f64> {
    let m = time.samples();
    let base = 2.0 * PI / time.period();
    (0..m)
        .map(|j| {
            let s = if 2 * j < m { j as i64 } else { j as i64 - m as i64 };
            base * s as f64
        })
        .collect()
}

fn check_band(time: &TimeGrid, d: f64) -> Result<()> {
    let spacing = 2.0 * PI / time.period();
    if !(d.is_finite() && d >= spacing) {
        return Err(Error::Resolution(format!(
            "temporal scale {d}: window of length {} has lattice spacing {spacing}",
            time.period()
        )));
    }
    let nyquist = PI / time.dt();
    if d > 2.0 * nyquist {
        return Err(Error::Range(format!(
            "temporal scale {d} above twice the sampling Nyquist {nyquist}"
        )));
    }
    Ok(())
}

/// Symbol of a temporal band evaluated at one `tau`.
pub fn temporal_symbol(tau: f64, d: f64, comparator: Comparator) -> f64 {
    comparator.profile(tau.abs() / d)
}

/// Spatially transformed snapshots, processed mode by mode along the time axis.
///
/// `f(mode, series)` sees the spectral coefficients of one (component, mode)
/// pair at all sample times and rewrites them in place.
pub(crate) fn map_mode_series(
    u: &SpaceTimeField,
    f: impl Fn(&Mode, &mut [Complex64]) + Sync,
) -> SpaceTimeField {
    let grid = *u.grid();
    let comps = u.comps();
    let n = grid.len();
    let samples = u.time().samples();
    let spectra: Vec<SpectralField> = u.snapshots().par_iter().map(SpatialField::forward).collect();
    let mut series: Vec<Vec<Complex64>> = (0..comps * n)
        .map(|i| spectra.iter().map(|s| s.coeffs()[i]).collect())
        .collect();
    series.par_iter_mut().enumerate().for_each(|(i, s)| {
        let m = grid.mode(i % n);
        f(&m, s);
    });
    let snapshots: Vec<SpatialField> = (0..samples)
        .into_par_iter()
        .map(|j| {
            let data = series.iter().map(|s| s[j]).collect();
            SpectralField::new(grid, comps, data)
                .expect("layout preserved")
                .inverse()
        })
        .collect();
    SpaceTimeField::new(*u.time(), snapshots).expect("layout preserved")
}

fn filter_series(series: &mut [Complex64], symbol: &[f64]) {
    let m = series.len();
    fft_1d(series, m, Direction::Forward);
    for (z, s) in series.iter_mut().zip(symbol) {
        *z *= s / m as f64;
    }
    fft_1d(series, m, Direction::Inverse);
}

/// Temporal band `P^(t)_d` (or `P^(t)_{<=d}`) of the tapered field.
///
/// The taper multiplies the input; it is not divided out afterwards.
pub fn temporal_band(u: &SpaceTimeField, d: f64, opts: BandOptions) -> Result<SpaceTimeField> {
    let time = *u.time();
    check_band(&time, d)?;
    let w = opts.taper.weights(time.samples());
    let symbol: Vec<f64> = time_lattice(&time)
        .iter()
        .map(|&tau| temporal_symbol(tau, d, opts.comparator))
        .collect();
    Ok(u.map_time_series(|s| {
        for (z, wj) in s.iter_mut().zip(&w) {
            *z *= wj;
        }
        filter_series(s, &symbol);
    }))
}

/// Split by the sign of the temporal frequency: (`tau < 0`, `tau >= 0`).
///
/// The zero frequency goes to the second piece.
pub fn temporal_sign_split(u: &SpaceTimeField) -> (SpaceTimeField, SpaceTimeField) {
    let lat = time_lattice(u.time());
    let neg: Vec<f64> = lat.iter().map(|&t| if t < 0.0 { 1.0 } else { 0.0 }).collect();
    let pos: Vec<f64> = neg.iter().map(|v| 1.0 - v).collect();
    (
        u.map_time_series(|s| filter_series(s, &neg)),
        u.map_time_series(|s| filter_series(s, &pos)),
    )
}

/// Modulation projection `C_d^+-`, `C_d` or their `<= d` variants.
pub fn modulation_band(
    u: &SpaceTimeField,
    d: f64,
    modulation: Modulation,
    opts: BandOptions,
    route: Route,
) -> Result<SpaceTimeField> {
    let time = *u.time();
    check_band(&time, d)?;
    let samples = time.samples();
    let w = opts.taper.weights(samples);
    let lattice = time_lattice(&time);
    let comparator = opts.comparator;
    let shift = match modulation {
        Modulation::Plus => Some(1.0),
        Modulation::Minus => Some(-1.0),
        Modulation::Cone => None,
    };
    let times: Vec<f64> = time.times().collect();
    let rel: Vec<f64> = times.iter().map(|t| t - time.t0()).collect();

    let out = match (shift, route) {
        (None, _) => map_mode_series(u, |m, s| {
            for (z, wj) in s.iter_mut().zip(&w) {
                *z *= wj;
            }
            let symbol: Vec<f64> = lattice
                .iter()
                .map(|&tau| comparator.profile((tau.abs() - m.norm).abs() / d))
                .collect();
            filter_series(s, &symbol);
        }),
        (Some(sg), Route::Conjugation) => {
            let symbol: Vec<f64> = lattice
                .iter()
                .map(|&tau| comparator.profile(tau.abs() / d))
                .collect();
            map_mode_series(u, |m, s| {
                for ((z, wj), t) in s.iter_mut().zip(&w).zip(&times) {
                    *z *= Complex64::from_polar(*wj, sg * t * m.norm);
                }
                filter_series(s, &symbol);
                for (z, t) in s.iter_mut().zip(&times) {
                    *z *= Complex64::from_polar(1.0, -sg * t * m.norm);
                }
            })
        }
        (Some(sg), Route::Direct) => map_mode_series(u, |m, s| {
            let a: Vec<Complex64> = s.iter().zip(&w).map(|(z, wj)| z * wj).collect();
            let shifted: Vec<f64> = lattice.iter().map(|&tau| tau - sg * m.norm).collect();
            let mut out = vec![Complex64::default(); samples];
            for &sigma in &shifted {
                let weight = comparator.profile((sigma + sg * m.norm).abs() / d);
                if weight == 0.0 {
                    continue;
                }
                let coeff: Complex64 = a
                    .iter()
                    .zip(&rel)
                    .map(|(z, r)| z * Complex64::from_polar(1.0, -sigma * r))
                    .sum();
                let c = coeff * (weight / samples as f64);
                for (o, r) in out.iter_mut().zip(&rel) {
                    *o += c * Complex64::from_polar(1.0, sigma * r);
                }
            }
            s.copy_from_slice(&out);
        }),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::Grid;
    use crate::multipliers::{half_wave, Sign};
    use crate::rng::trial_rng;
    use rand::Rng;

    fn setup() -> (Grid, TimeGrid) {
        (Grid::new(2, 16, 2.0 * PI).unwrap(), TimeGrid::new(0.3, 0.05, 64).unwrap())
    }

    fn random_st(grid: Grid, time: TimeGrid, seed: u64) -> SpaceTimeField {
        let mut rng = trial_rng(seed, 1);
        let mut snaps = Vec::new();
        for _ in 0..time.samples() {
            snaps.push(SpatialField::from_fn(grid, 1, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }));
        }
        SpaceTimeField::new(time, snaps).unwrap()
    }

    #[test]
    fn routes_agree() {
        let (g, t) = setup();
        let u = random_st(g, t, 2);
        for (modulation, d) in [(Modulation::Plus, 4.0), (Modulation::Minus, 8.0), (Modulation::Plus, 16.0)] {
            for taper in [Taper::Hann, Taper::Rectangular] {
                let opts = BandOptions::new(Comparator::Approx, taper);
                let a = modulation_band(&u, d, modulation, opts, Route::Conjugation).unwrap();
                let b = modulation_band(&u, d, modulation, opts, Route::Direct).unwrap();
                let err = a.sub(&b).unwrap().mixed_norm(2.0) / a.mixed_norm(2.0);
                assert!(err < 1e-10, "{modulation:?} {d} {err}");
            }
        }
    }

    #[test]
    fn full_band_is_identity() {
        let (g, t) = setup();
        let u = random_st(g, t, 3);
        let nyq = PI / t.dt();
        let opts = BandOptions::new(Comparator::AtMost, Taper::Rectangular);
        let v = temporal_band(&u, nyq, opts).unwrap();
        assert!(v.sub(&u).unwrap().mixed_norm(2.0) / u.mixed_norm(2.0) < 1e-10);
        let c = modulation_band(&u, nyq, Modulation::Minus, opts, Route::Conjugation).unwrap();
        assert!(c.sub(&u).unwrap().mixed_norm(2.0) / u.mixed_norm(2.0) < 1e-10);
    }

    #[test]
    fn free_wave_has_no_plus_modulation() {
        let (g, t) = setup();
        let f = random_st(g, t, 4).snapshot(0).clone();
        let u = SpaceTimeField::constant(t, &f).map_snapshots(|s, _| half_wave(&f, s, Sign::Plus));
        let spacing = 2.0 * PI / t.period();
        let mut d = 4.0 * spacing;
        while d <= PI / t.dt() {
            let c = modulation_band(&u, d, Modulation::Plus, BandOptions::default(), Route::Conjugation).unwrap();
            assert!(c.mixed_norm(2.0) / u.mixed_norm(2.0) < 0.05, "d={d}");
            d *= 2.0;
        }
    }

    #[test]
    fn single_mode_sits_at_twice_its_frequency() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let t = TimeGrid::new(0.0, 2.0 * PI / 128.0, 512).unwrap();
        let u = SpaceTimeField::from_fn(t, g, 1, |s, _, x| Complex64::from_polar(1.0, 4.0 * s + 4.0 * x[0]));
        let total = u.mixed_norm(2.0);
        let at = |d: f64| {
            modulation_band(&u, d, Modulation::Plus, BandOptions::new(Comparator::Approx, Taper::Rectangular), Route::Direct)
                .unwrap()
                .mixed_norm(2.0)
                / total
        };
        assert!((at(8.0) - 1.0).abs() < 1e-10);
        assert!(at(2.0) < 1e-10);
        assert!(at(32.0) < 1e-10);
    }

    #[test]
    fn resolution_errors() {
        let (g, t) = setup();
        let u = SpaceTimeField::zeros(t, g, 1);
        assert!(matches!(temporal_band(&u, 0.1, BandOptions::default()), Err(Error::Resolution(_))));
        assert!(matches!(temporal_band(&u, 1e4, BandOptions::default()), Err(Error::Range(_))));
    }

    #[test]
    fn sign_split_reassembles() {
        let (g, t) = setup();
        let u = random_st(g, t, 8);
        let (a, b) = temporal_sign_split(&u);
        assert!(a.add(&b).unwrap().sub(&u).unwrap().sup_norm() < 1e-12);
    }
}
