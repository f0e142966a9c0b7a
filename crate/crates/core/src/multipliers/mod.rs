//! Fourier projections and linear wave propagators.

pub mod cutoff;
mod geometry;
mod modulation;

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{Grid, Mode, SpaceTimeField, SpatialField, TimeGrid};

pub use geometry::{angular_cap, angular_decompose, cap_cover, cube_cover, cube_project, Cap, CapCover, Cube, CubeCover};
pub use modulation::{
    modulation_band, temporal_band, temporal_sign_split, temporal_symbol, time_lattice, BandOptions,
    Comparator, Modulation, Route, Taper,
};
pub(crate) use modulation::map_mode_series;

/// A dyadic scale `2^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicScale {
    pub exponent: i32,
}

impl DyadicScale {
    pub fn new(exponent: i32) -> Self {
        DyadicScale { exponent }
    }

    pub fn value(&self) -> f64 {
        2f64.powi(self.exponent)
    }

    /// Nearest dyadic scale at or below `x`.
    pub fn floor(x: f64) -> Self {
        DyadicScale::new(x.log2().floor() as i32)
    }

    /// Exponents whose annulus `[2^{j-1}, 2^{j+1}]` meets the nonzero lattice.
    ///
    /// The range is chosen so that the annuli telescope to the identity on
    /// every nonzero mode.
    pub fn spatial_range(grid: &Grid) -> (i32, i32) {
        let lo = grid.dual_spacing().log2().floor() as i32;
        let hi = grid.max_xi_norm().log2().ceil() as i32;
        (lo, hi)
    }

    pub fn spatial(grid: &Grid, exponent: i32) -> Result<Self> {
        let (lo, hi) = Self::spatial_range(grid);
        if exponent < lo || exponent > hi {
            return Err(Error::Range(format!(
                "spatial scale 2^{exponent} outside representable range 2^{lo}..=2^{hi}"
            )));
        }
        Ok(DyadicScale::new(exponent))
    }
}

fn checked_spatial_scale(grid: &Grid, lambda: f64) -> Result<()> {
    let (lo, hi) = DyadicScale::spatial_range(grid);
    if !(lambda.is_finite() && lambda >= 2f64.powi(lo) && lambda <= 2f64.powi(hi)) {
        return Err(Error::Range(format!(
            "spatial scale {lambda} outside representable range [{}, {}]",
            2f64.powi(lo),
            2f64.powi(hi)
        )));
    }
    Ok(())
}

/// Littlewood-Paley projection `P_lambda`, symbol `psi(|xi| / lambda)`.
pub fn littlewood_paley(u: &SpatialField, lambda: f64) -> Result<SpatialField> {
    checked_spatial_scale(u.grid(), lambda)?;
    Ok(u.apply_real_symbol(|m| cutoff::psi(m.norm / lambda)))
}

/// Low-frequency projection `P_{<= lambda}`, symbol `theta(|xi| / lambda)`.
pub fn low_pass(u: &SpatialField, lambda: f64) -> SpatialField {
    u.apply_real_symbol(|m| cutoff::theta(m.norm / lambda))
}

/// Apply a spatial symbol to every snapshot of a space-time field.
pub fn apply_spatial(u: &SpaceTimeField, symbol: impl Fn(&Mode) -> Complex64 + Sync) -> SpaceTimeField {
    u.map_snapshots(|_, f| f.apply_symbol(&symbol))
}

pub fn littlewood_paley_st(u: &SpaceTimeField, lambda: f64) -> Result<SpaceTimeField> {
    checked_spatial_scale(u.grid(), lambda)?;
    Ok(apply_spatial(u, |m| Complex64::new(cutoff::psi(m.norm / lambda), 0.0)))
}

/// `|nabla|^s` on every snapshot.
pub fn gradient_power_st(u: &SpaceTimeField, s: f64) -> SpaceTimeField {
    u.map_snapshots(|_, f| crate::fourier::gradient_power(f, s))
}

/// Direction of a half-wave flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    /// `e^{-it|nabla|}`
    Plus,
    /// `e^{+it|nabla|}`
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// `e^{-+ it|nabla|} f`: multiplies mode `xi` by `e^{-+ i t |xi|}`.
pub fn half_wave(f: &SpatialField, t: f64, sign: Sign) -> SpatialField {
    let s = sign.value();
    f.apply_symbol(|m| Complex64::from_polar(1.0, -s * t * m.norm))
}

/// Value and time derivative of `V(t)(f, g)`.
#[derive(Clone, Debug)]
pub struct WaveState {
    pub value: SpatialField,
    pub velocity: SpatialField,
    /// True when `g` carried a nonzero mean; that mode evolves as `t * g_0`.
    pub zero_mode_g: bool,
}

/// Mode-wise `cos(t|xi|)`, `sin(t|xi|)/|xi|` with the limit `t` at `xi = 0`.
pub(crate) fn wave_kernel(t: f64, omega: f64) -> (f64, f64) {
    if omega == 0.0 {
        (1.0, t)
    } else {
        let (s, c) = (t * omega).sin_cos();
        (c, s / omega)
    }
}

/// Homogeneous wave propagator `V(t)(f, g) = cos(t|nabla|) f + sin(t|nabla|)|nabla|^{-1} g`.
///
/// The zero mode follows the exact torus solution `f_0 + t g_0`.
pub fn homogeneous_wave(f: &SpatialField, g: &SpatialField, t: f64) -> Result<WaveState> {
    f.ensure_same_shape(g)?;
    let grid = *f.grid();
    let n = grid.len();
    let fh = f.forward();
    let gh = g.forward();
    let mut val = fh.clone();
    let mut vel = gh.clone();
    let mut zero_mode_g = false;
    for idx in 0..n {
        let omega = grid.mode(idx).norm;
        let (c, s_over) = wave_kernel(t, omega);
        let ds = -omega * omega * s_over;
        for comp in 0..f.comps() {
            let i = comp * n + idx;
            let (a, b) = (fh.coeffs()[i], gh.coeffs()[i]);
            if omega == 0.0 && b.norm() > 1e-14 * (1.0 + a.norm()) {
                zero_mode_g = true;
            }
            val.coeffs_mut()[i] = a * c + b * s_over;
            vel.coeffs_mut()[i] = a * ds + b * c;
        }
    }
    Ok(WaveState {
        value: val.inverse(),
        velocity: vel.inverse(),
        zero_mode_g,
    })
}

/// Free wave sampled on a time grid.
pub fn free_wave(f: &SpatialField, g: &SpatialField, time: TimeGrid) -> Result<(SpaceTimeField, SpaceTimeField)> {
    let mut u = Vec::with_capacity(time.samples());
    let mut ut = Vec::with_capacity(time.samples());
    for t in time.times() {
        let w = homogeneous_wave(f, g, t)?;
        u.push(w.value);
        ut.push(w.velocity);
    }
    Ok((SpaceTimeField::new(time, u)?, SpaceTimeField::new(time, ut)?))
}

/// Snapshot-wise `e^{+- i t Phi(xi)}` (`Plus` gives `e^{+itPhi}`).
pub fn adapted_conjugate(u: &SpaceTimeField, phi: impl Fn(&Mode) -> f64 + Sync, sign: Sign) -> SpaceTimeField {
    let s = sign.value();
    u.map_snapshots(|t, f| f.apply_symbol(|m| Complex64::from_polar(1.0, s * t * phi(m))))
}

/// `e^{+- it|nabla|} u(t)`: undoes the `Plus`/`Minus` half-wave flow.
pub fn conjugate_half_wave(u: &SpaceTimeField, sign: Sign) -> SpaceTimeField {
    adapted_conjugate(u, |m| m.norm, sign)
}

/// Where a symbol lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolDomain {
    Spatial,
    Temporal,
    SpaceTime,
}

/// A symbol tabulated on a frequency lattice.
#[derive(Clone, Debug)]
pub struct MultiplierSpec {
    pub domain: SymbolDomain,
    pub profile: String,
    points: Vec<(Vec<f64>, Complex64)>,
}

impl MultiplierSpec {
    pub fn spatial(grid: &Grid, profile: &str, symbol: impl Fn(&Mode) -> Complex64) -> Self {
        let points = grid
            .modes()
            .map(|m| (m.xi[..grid.dim()].to_vec(), symbol(&m)))
            .collect();
        MultiplierSpec {
            domain: SymbolDomain::Spatial,
            profile: profile.to_string(),
            points,
        }
    }

    pub fn temporal(time: &TimeGrid, profile: &str, symbol: impl Fn(f64) -> Complex64) -> Self {
        let points = time_lattice(time)
            .into_iter()
            .map(|tau| (vec![tau], symbol(tau)))
            .collect();
        MultiplierSpec {
            domain: SymbolDomain::Temporal,
            profile: profile.to_string(),
            points,
        }
    }

    pub fn space_time(
        grid: &Grid,
        time: &TimeGrid,
        profile: &str,
        symbol: impl Fn(f64, &Mode) -> Complex64,
    ) -> Self {
        let mut points = Vec::new();
        for tau in time_lattice(time) {
            for m in grid.modes() {
                let mut c = vec![tau];
                c.extend_from_slice(&m.xi[..grid.dim()]);
                points.push((c, symbol(tau, &m)));
            }
        }
        MultiplierSpec {
            domain: SymbolDomain::SpaceTime,
            profile: profile.to_string(),
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn max_abs(&self) -> f64 {
        self.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Rows `coord_0,..,coord_k,re,im`; temporal coordinates come first.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        let io = |e| Error::io("<multiplier csv>", e);
        let width = self.points.first().map_or(0, |p| p.0.len());
        let mut header: Vec<String> = match self.domain {
            SymbolDomain::Spatial => (0..width).map(|a| format!("xi{a}")).collect(),
            SymbolDomain::Temporal => vec!["tau".into()],
            SymbolDomain::SpaceTime => std::iter::once("tau".to_string())
                .chain((1..width).map(|a| format!("xi{}", a - 1)))
                .collect(),
        };
        header.push("re".into());
        header.push("im".into());
        writeln!(out, "{}", header.join(",")).map_err(io)?;
        for (c, v) in &self.points {
            let mut row: Vec<String> = c.iter().map(|x| format!("{x:.16e}")).collect();
            row.push(format!("{:.16e}", v.re));
            row.push(format!("{:.16e}", v.im));
            writeln!(out, "{}", row.join(",")).map_err(io)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;
    use rand::Rng;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(2, 32, 2.0 * PI).unwrap()
    }

    fn random_zero_mean(grid: Grid, seed: u64) -> SpatialField {
        let mut rng = trial_rng(seed, 0);
        let f = SpatialField::from_fn(grid, 1, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        f.apply_real_symbol(|m| if m.norm == 0.0 { 0.0 } else { 1.0 })
    }

    fn plane(grid: Grid, k: [f64; 2]) -> SpatialField {
        SpatialField::from_fn(grid, 1, |_, x| Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1]))
    }

    #[test]
    fn lp_examples() {
        let g = grid();
        let f = plane(g, [4.0, 0.0]);
        assert!((&littlewood_paley(&f, 4.0).unwrap() - &f).norm() < 1e-12);
        assert!(littlewood_paley(&f, 1.0).unwrap().norm() < 1e-12);
        assert!(matches!(littlewood_paley(&f, 1e4), Err(Error::Range(_))));
    }

    #[test]
    fn lp_telescopes() {
        let g = grid();
        let u = random_zero_mean(g, 3);
        let (lo, hi) = DyadicScale::spatial_range(&g);
        let mut sum = SpatialField::zeros(g, 1);
        for j in lo..=hi {
            sum = &sum + &littlewood_paley(&u, DyadicScale::new(j).value()).unwrap();
        }
        assert!((&sum - &u).norm() / u.norm() < 1e-10);
    }

    #[test]
    fn lp_disjoint_scales() {
        let g = grid();
        let u = random_zero_mean(g, 4);
        let a = littlewood_paley(&littlewood_paley(&u, 2.0).unwrap(), 8.0).unwrap();
        assert!(a.norm() < 1e-14);
    }

    #[test]
    fn half_wave_examples() {
        let g = grid();
        let f = plane(g, [1.0, 0.0]);
        assert!((&half_wave(&f, 0.0, Sign::Plus) - &f).norm() < 1e-13);
        let out = half_wave(&f, PI, Sign::Minus);
        assert!((&out + &f).norm() < 1e-12);
        let u = random_zero_mean(g, 9);
        assert!((half_wave(&u, 1.3, Sign::Plus).norm() - u.norm()).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_wave_examples() {
        let g = grid();
        let k = [3.0, 4.0];
        let f0 = SpatialField::zeros(g, 1);
        let gk = &plane(g, k) * 5.0;
        let t = 0.37;
        let w = homogeneous_wave(&f0, &gk, t).unwrap();
        let want = &plane(g, k) * (5.0 * t).sin();
        assert!((&w.value - &want).norm() < 1e-11);
        assert!(!w.zero_mode_g);

        let f = random_zero_mean(g, 1);
        let gg = random_zero_mean(g, 2);
        let w0 = homogeneous_wave(&f, &gg, 0.0).unwrap();
        assert!((&w0.value - &f).norm() < 1e-12);
        assert!((&w0.velocity - &gg).norm() < 1e-12);

        let energy = |s: &WaveState| {
            let grad = crate::fourier::gradient_power(&s.value, 1.0);
            0.5 * (s.velocity.norm_sqr() + grad.norm_sqr())
        };
        let e0 = energy(&homogeneous_wave(&f, &gg, 0.0).unwrap());
        for t in [0.5, 2.0, 10.0] {
            let e = energy(&homogeneous_wave(&f, &gg, t).unwrap());
            assert!((e - e0).abs() / e0 < 1e-12);
        }

        let c = SpatialField::from_real(g, 1, |_, _| 1.0);
        assert!(homogeneous_wave(&f0, &c, 1.0).unwrap().zero_mode_g);
    }

    #[test]
    fn adapted_conjugation_inverts_flow() {
        let g = grid();
        let f = random_zero_mean(g, 5);
        let time = TimeGrid::new(0.0, 0.1, 12).unwrap();
        let u = SpaceTimeField::from_fn(time, g, 1, |_, _, _| Complex64::default())
            .map_snapshots(|t, _| half_wave(&f, t, Sign::Plus));
        let v = conjugate_half_wave(&u, Sign::Plus);
        for s in v.snapshots() {
            assert!((s - &f).norm() / f.norm() < 1e-13);
        }
        let id = adapted_conjugate(&u, |_| 0.0, Sign::Minus);
        assert!(id.sub(&u).unwrap().sup_norm() < 1e-13);
        let w = adapted_conjugate(&u, |m| m.xi[0].powi(2), Sign::Minus);
        for (a, b) in w.snapshots().iter().zip(u.snapshots()) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn multiplier_spec_csv() {
        let g = Grid::new(1, 8, 2.0 * PI).unwrap();
        let spec = MultiplierSpec::spatial(&g, "psi", |m| Complex64::new(cutoff::psi(m.norm / 2.0), 0.0));
        assert_eq!(spec.len(), 8);
        assert!(spec.max_abs() <= 1.0);
        let mut buf = Vec::new();
        spec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("xi0,re,im"));
    }
}
