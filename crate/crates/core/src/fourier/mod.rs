//! Periodic grids, unitary discrete Fourier transforms, spectral derivatives
//! and mixed space-time norms.
//!
//! Normalization: a field sampled at `x_j = j h` (`h = L/N`) has spectral
//! coefficients `c_k = L^{n/2} N^{-n} sum_j f_j e^{-i xi_k . x_j}` so that
//! `f(x) = L^{-n/2} sum_k c_k e^{i xi_k . x}`. With this choice
//! `sum_k |c_k|^2 = h^n sum_j |f_j|^2`, i.e. the spectral l2 norm equals the
//! quadrature L2 norm exactly.

mod fft;
pub mod io;

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub(crate) use fft::{fft_1d, Direction};

/// Periodic spatial grid `[0, L)^n` with `N` points per axis and its dual
/// lattice `xi_k = 2 pi k / L`, `k in {-N/2, .., N/2 - 1}^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points: usize,
    period: f64,
}

/// One lattice point of the dual grid.
#[derive(Clone, Copy, Debug)]
pub struct Mode {
    pub index: usize,
    pub k: [i64; 3],
    pub xi: [f64; 3],
    pub norm: f64,
}

impl Grid {
    pub fn new(dim: usize, points: usize, period: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension {dim} not in 1..=3")));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::Config(format!(
                "points per axis must be a power of two >= 2, got {points}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Config(format!("period must be positive, got {period}")));
        }
        Ok(Grid { dim, points, period })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of grid points, `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Lattice spacing of the dual grid, `2 pi / L`.
    pub fn dual_spacing(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Largest representable frequency per axis, `pi N / L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.points as f64 / self.period
    }

    /// Largest `|xi|` on the lattice.
    pub fn max_xi_norm(&self) -> f64 {
        self.nyquist() * (self.dim as f64).sqrt()
    }

    /// Signed wavenumber of a per-axis index.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.points as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    fn axis_index(&self, k: i64) -> Option<usize> {
        let n = self.points as i64;
        if k < -n / 2 || k >= n / 2 {
            return None;
        }
        Some(k.rem_euclid(n) as usize)
    }

    /// Flat index of the lattice point with wavenumbers `k` (first `dim` entries used).
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() < self.dim {
            return None;
        }
        let mut idx = 0;
        for &ka in &k[..self.dim] {
            idx = idx * self.points + self.axis_index(ka)?;
        }
        Some(idx)
    }

    /// Per-axis indices of a flat index.
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.points;
            idx /= self.points;
        }
        out
    }

    pub fn mode(&self, idx: usize) -> Mode {
        let ij = self.unravel(idx);
        let mut k = [0i64; 3];
        let mut xi = [0.0; 3];
        let dual = self.dual_spacing();
        for a in 0..self.dim {
            k[a] = self.wavenumber(ij[a]);
            xi[a] = dual * k[a] as f64;
        }
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        Mode { index: idx, k, xi, norm }
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.len()).map(move |i| self.mode(i))
    }

    /// `|xi|` for every lattice point, in storage order.
    pub fn xi_norms(&self) -> Vec<f64> {
        self.modes().map(|m| m.norm).collect()
    }

    /// Physical coordinates of a grid point.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let ij = self.unravel(idx);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = ij[a] as f64 * h;
        }
        x
    }

    /// True when a per-axis wavenumber survives the 2/3 truncation rule.
    pub fn dealias_keep(&self, mode: &Mode) -> bool {
        let kmax = (self.points / 3) as i64;
        mode.k[..self.dim].iter().all(|k| k.abs() <= kmax)
    }
}

/// Uniform sample times `t_j = t0 + j dt`, `j = 0..M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    dt: f64,
    samples: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, samples: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) || !t0.is_finite() {
            return Err(Error::Config(format!("invalid time grid t0={t0} dt={dt}")));
        }
        if samples == 0 {
            return Err(Error::Config("time grid needs at least one sample".into()));
        }
        Ok(TimeGrid { t0, dt, samples })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples).map(move |j| self.time(j))
    }

    /// Length of the sampled interval, `(M - 1) dt`.
    pub fn duration(&self) -> f64 {
        (self.samples.saturating_sub(1)) as f64 * self.dt
    }

    /// Period of the window's discrete Fourier series, `M dt`.
    pub fn period(&self) -> f64 {
        self.samples as f64 * self.dt
    }

    /// Index of the sample nearest to `t`, clamped to the window.
    pub fn nearest(&self, t: f64) -> usize {
        let j = ((t - self.t0) / self.dt).round();
        j.clamp(0.0, (self.samples - 1) as f64) as usize
    }
}

/// Complex samples of a `c`-component field on a periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialField {
    grid: Grid,
    comps: usize,
    data: Vec<Complex64>,
}

/// Spectral coefficients of a [`SpatialField`] (same storage layout).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    comps: usize,
    data: Vec<Complex64>,
}

fn check_layout(grid: &Grid, comps: usize, len: usize) -> Result<()> {
    if comps == 0 {
        return Err(Error::Shape("field needs at least one component".into()));
    }
    if len != comps * grid.len() {
        return Err(Error::Shape(format!(
            "expected {} values ({} components x {} points), got {len}",
            comps * grid.len(),
            comps,
            grid.len()
        )));
    }
    Ok(())
}

impl SpatialField {
    pub fn new(grid: Grid, comps: usize, data: Vec<Complex64>) -> Result<Self> {
        check_layout(&grid, comps, data.len())?;
        Ok(SpatialField { grid, comps, data })
    }

    pub fn zeros(grid: Grid, comps: usize) -> Self {
        SpatialField {
            grid,
            comps,
            data: vec![Complex64::default(); comps * grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, comps: usize, mut f: impl FnMut(usize, &[f64; 3]) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(comps * grid.len());
        for c in 0..comps {
            for idx in 0..grid.len() {
                data.push(f(c, &grid.position(idx)));
            }
        }
        SpatialField { grid, comps, data }
    }

    pub fn from_real(grid: Grid, comps: usize, mut f: impl FnMut(usize, &[f64; 3]) -> f64) -> Self {
        Self::from_fn(grid, comps, |c, x| Complex64::new(f(c, x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn same_shape(&self, other: &SpatialField) -> bool {
        self.grid == other.grid && self.comps == other.comps
    }

    pub fn ensure_same_shape(&self, other: &SpatialField) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "fields differ: {:?}/{} vs {:?}/{}",
                self.grid, self.comps, other.grid, other.comps
            )))
        }
    }

    /// `L^2` norm by grid quadrature.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.cell_volume() * self.data.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// `<self, other> = int conj(self) other dx`.
    pub fn inner(&self, other: &SpatialField) -> Complex64 {
        assert!(self.same_shape(other), "inner product of mismatched fields");
        let s: Complex64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.cell_volume()
    }

    /// Pointwise sup of the Euclidean norm across components.
    pub fn sup_pointwise(&self) -> f64 {
        let n = self.grid.len();
        (0..n)
            .map(|i| {
                (0..self.comps)
                    .map(|c| self.data[c * n + i].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> SpatialField {
        SpatialField {
            grid: self.grid,
            comps: self.comps,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> SpatialField {
        SpatialField {
            grid: self.grid,
            comps: self.comps,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Forward unitary transform.
    pub fn forward(&self) -> SpectralField {
        let mut data = self.data.clone();
        let n = self.grid.len();
        let scale = self.grid.period.powf(self.grid.dim as f64 / 2.0) / n as f64;
        for chunk in data.chunks_mut(n) {
            fft::fft_nd(chunk, self.grid.dim, self.grid.points, Direction::Forward);
            chunk.iter_mut().for_each(|z| *z *= scale);
        }
        SpectralField {
            grid: self.grid,
            comps: self.comps,
            data,
        }
    }

    /// Forward transform, multiply every mode by `symbol(mode)`, transform back.
    pub fn apply_symbol(&self, symbol: impl Fn(&Mode) -> Complex64) -> SpatialField {
        let mut spec = self.forward();
        spec.multiply(symbol);
        spec.inverse()
    }

    /// Real-valued symbol variant of [`apply_symbol`](Self::apply_symbol).
    pub fn apply_real_symbol(&self, symbol: impl Fn(&Mode) -> f64) -> SpatialField {
        self.apply_symbol(|m| Complex64::new(symbol(m), 0.0))
    }
}

impl SpectralField {
    pub fn new(grid: Grid, comps: usize, data: Vec<Complex64>) -> Result<Self> {
        check_layout(&grid, comps, data.len())?;
        Ok(SpectralField { grid, comps, data })
    }

    pub fn zeros(grid: Grid, comps: usize) -> Self {
        SpectralField {
            grid,
            comps,
            data: vec![Complex64::default(); comps * grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.data
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.len();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Spectral l2 norm; equals the spatial `L^2` norm (Plancherel).
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Multiply every coefficient by `symbol(mode)`.
    pub fn multiply(&mut self, symbol: impl Fn(&Mode) -> Complex64) {
        let n = self.grid.len();
        let grid = self.grid;
        for idx in 0..n {
            let m = grid.mode(idx);
            let s = symbol(&m);
            for c in 0..self.comps {
                self.data[c * n + idx] *= s;
            }
        }
    }

    pub fn inverse(&self) -> SpatialField {
        let mut data = self.data.clone();
        let n = self.grid.len();
        let scale = self.grid.period.powf(-(self.grid.dim as f64) / 2.0);
        for chunk in data.chunks_mut(n) {
            fft::fft_nd(chunk, self.grid.dim, self.grid.points, Direction::Inverse);
            chunk.iter_mut().for_each(|z| *z *= scale);
        }
        SpatialField {
            grid: self.grid,
            comps: self.comps,
            data,
        }
    }
}

impl Add for &SpatialField {
    type Output = SpatialField;
    fn add(self, rhs: &SpatialField) -> SpatialField {
        assert!(self.same_shape(rhs), "adding mismatched fields");
        SpatialField {
            grid: self.grid,
            comps: self.comps,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SpatialField {
    type Output = SpatialField;
    fn sub(self, rhs: &SpatialField) -> SpatialField {
        assert!(self.same_shape(rhs), "subtracting mismatched fields");
        SpatialField {
            grid: self.grid,
            comps: self.comps,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<f64> for &SpatialField {
    type Output = SpatialField;
    fn mul(self, rhs: f64) -> SpatialField {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

/// Forward transform (alias kept for symmetry with [`inverse_transform`]).
pub fn forward_transform(field: &SpatialField) -> SpectralField {
    field.forward()
}

pub fn inverse_transform(spec: &SpectralField) -> SpatialField {
    spec.inverse()
}

/// `|nabla|^s`; the zero mode is annihilated whenever `s != 0`.
pub fn gradient_power(field: &SpatialField, s: f64) -> SpatialField {
    if s == 0.0 {
        return field.clone();
    }
    field.apply_real_symbol(|m| if m.norm == 0.0 { 0.0 } else { m.norm.powf(s) })
}

/// Spectral `d/dx_axis`. The unpaired Nyquist wavenumber is dropped.
pub fn partial_derivative(field: &SpatialField, axis: usize) -> Result<SpatialField> {
    let grid = *field.grid();
    if axis >= grid.dim() {
        return Err(Error::Shape(format!("axis {axis} >= dimension {}", grid.dim())));
    }
    let nyq = -(grid.points() as i64) / 2;
    Ok(field.apply_symbol(|m| {
        if m.k[axis] == nyq {
            Complex64::default()
        } else {
            Complex64::new(0.0, m.xi[axis])
        }
    }))
}

/// All first spatial derivatives at once (one forward transform).
pub fn gradient(field: &SpatialField) -> Vec<SpatialField> {
    let grid = *field.grid();
    let spec = field.forward();
    let nyq = -(grid.points() as i64) / 2;
    (0..grid.dim())
        .map(|axis| {
            let mut s = spec.clone();
            s.multiply(|m| {
                if m.k[axis] == nyq {
                    Complex64::default()
                } else {
                    Complex64::new(0.0, m.xi[axis])
                }
            });
            s.inverse()
        })
        .collect()
}

/// Discretization of `d/dt` along the sample axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TimeDerivative {
    /// Fourth-order centered differences, fourth-order one-sided at the ends.
    #[default]
    FiniteDifference4,
    /// Spectral differentiation; assumes the window is one period of the series.
    Spectral,
}

/// Samples of a field at every point of a [`TimeGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    time: TimeGrid,
    snapshots: Vec<SpatialField>,
}

impl SpaceTimeField {
    pub fn new(time: TimeGrid, snapshots: Vec<SpatialField>) -> Result<Self> {
        if snapshots.len() != time.samples() {
            return Err(Error::Shape(format!(
                "{} snapshots for {} sample times",
                snapshots.len(),
                time.samples()
            )));
        }
        for s in &snapshots[1..] {
            snapshots[0].ensure_same_shape(s)?;
        }
        Ok(SpaceTimeField { time, snapshots })
    }

    pub fn zeros(time: TimeGrid, grid: Grid, comps: usize) -> Self {
        SpaceTimeField {
            time,
            snapshots: vec![SpatialField::zeros(grid, comps); time.samples()],
        }
    }

    pub fn from_fn(
        time: TimeGrid,
        grid: Grid,
        comps: usize,
        f: impl Fn(f64, usize, &[f64; 3]) -> Complex64,
    ) -> Self {
        let snapshots = time
            .times()
            .map(|t| SpatialField::from_fn(grid, comps, |c, x| f(t, c, x)))
            .collect();
        SpaceTimeField { time, snapshots }
    }

    /// Constant-in-time field.
    pub fn constant(time: TimeGrid, field: &SpatialField) -> Self {
        SpaceTimeField {
            time,
            snapshots: vec![field.clone(); time.samples()],
        }
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn grid(&self) -> &Grid {
        self.snapshots[0].grid()
    }

    pub fn comps(&self) -> usize {
        self.snapshots[0].comps()
    }

    pub fn snapshots(&self) -> &[SpatialField] {
        &self.snapshots
    }

    pub fn snapshot(&self, j: usize) -> &SpatialField {
        &self.snapshots[j]
    }

    pub fn snapshots_mut(&mut self) -> &mut [SpatialField] {
        &mut self.snapshots
    }

    pub fn into_snapshots(self) -> Vec<SpatialField> {
        self.snapshots
    }

    pub fn same_shape(&self, other: &SpaceTimeField) -> bool {
        self.time == other.time && self.snapshots[0].same_shape(&other.snapshots[0])
    }

    pub fn ensure_same_shape(&self, other: &SpaceTimeField) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape("space-time fields differ in grid, components or times".into()))
        }
    }

    /// Apply `f(t_j, u(t_j))` to every snapshot.
    pub fn map_snapshots(&self, f: impl Fn(f64, &SpatialField) -> SpatialField) -> SpaceTimeField {
        let snapshots = self
            .snapshots
            .iter()
            .enumerate()
            .map(|(j, s)| f(self.time.time(j), s))
            .collect();
        SpaceTimeField {
            time: self.time,
            snapshots,
        }
    }

    pub fn zip_map(
        &self,
        other: &SpaceTimeField,
        f: impl Fn(&SpatialField, &SpatialField) -> SpatialField,
    ) -> Result<SpaceTimeField> {
        if self.time != other.time {
            return Err(Error::Shape("time grids differ".into()));
        }
        let snapshots = self
            .snapshots
            .iter()
            .zip(&other.snapshots)
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(SpaceTimeField {
            time: self.time,
            snapshots,
        })
    }

    pub fn add(&self, other: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.ensure_same_shape(other)?;
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.ensure_same_shape(other)?;
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> SpaceTimeField {
        self.map_snapshots(|_, f| f.scale(s))
    }

    /// `||u(t_j)||_{L^2}` for every sample.
    pub fn snapshot_norms(&self) -> Vec<f64> {
        self.snapshots.iter().map(SpatialField::norm).collect()
    }

    /// `L^p_t L^2_x` over the sampled window (trapezoidal in t, exact sup for `p = inf`).
    pub fn mixed_norm(&self, p: f64) -> f64 {
        mixed_norm_of(&self.snapshot_norms(), self.time.dt(), p)
    }

    /// `L^inf_t L^2_x`.
    pub fn sup_norm(&self) -> f64 {
        self.mixed_norm(f64::INFINITY)
    }

    pub fn time_derivative(&self, mode: TimeDerivative) -> Result<SpaceTimeField> {
        let m = self.time.samples();
        match mode {
            TimeDerivative::FiniteDifference4 => {
                if m < 5 {
                    return Err(Error::Arity(format!(
                        "fourth-order differences need >= 5 samples, got {m}"
                    )));
                }
                let h = self.time.dt();
                let s = &self.snapshots;
                let comb = |w: [(usize, f64); 5]| -> SpatialField {
                    let mut out = SpatialField::zeros(*s[0].grid(), s[0].comps());
                    for (j, c) in w {
                        for (o, v) in out.data.iter_mut().zip(&s[j].data) {
                            *o += v * (c / (12.0 * h));
                        }
                    }
                    out
                };
                let mut snapshots = Vec::with_capacity(m);
                snapshots.push(comb([(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)]));
                snapshots.push(comb([(0, -3.0), (1, -10.0), (2, 18.0), (3, -6.0), (4, 1.0)]));
                for j in 2..m - 2 {
                    snapshots.push(comb([
                        (j - 2, 1.0),
                        (j - 1, -8.0),
                        (j, 0.0),
                        (j + 1, 8.0),
                        (j + 2, -1.0),
                    ]));
                }
                let e = m - 1;
                snapshots.push(comb([(e, 3.0), (e - 1, 10.0), (e - 2, -18.0), (e - 3, 6.0), (e - 4, -1.0)]));
                snapshots.push(comb([(e, 25.0), (e - 1, -48.0), (e - 2, 36.0), (e - 3, -16.0), (e - 4, 3.0)]));
                Ok(SpaceTimeField {
                    time: self.time,
                    snapshots,
                })
            }
            TimeDerivative::Spectral => {
                if m < 2 {
                    return Err(Error::Arity("spectral time derivative needs >= 2 samples".into()));
                }
                let period = self.time.period();
                let out = self.map_time_series(|series| {
                    fft_1d(series, m, Direction::Forward);
                    for (j, z) in series.iter_mut().enumerate() {
                        let mj = if j < m / 2 { j as i64 } else { j as i64 - m as i64 };
                        let factor = if 2 * j == m {
                            Complex64::default()
                        } else {
                            Complex64::new(0.0, 2.0 * PI * mj as f64 / period)
                        };
                        *z *= factor / m as f64;
                    }
                    fft_1d(series, m, Direction::Inverse);
                });
                Ok(out)
            }
        }
    }

    /// Run `f` on the time series of every (component, grid point) pair in place.
    pub(crate) fn map_time_series(&self, f: impl Fn(&mut [Complex64]) + Sync) -> SpaceTimeField {
        let m = self.time.samples();
        let width = self.snapshots[0].data.len();
        let mut out = self.clone();
        let mut series = vec![Complex64::default(); m];
        for i in 0..width {
            for (j, s) in self.snapshots.iter().enumerate() {
                series[j] = s.data[i];
            }
            f(&mut series);
            for (j, s) in out.snapshots.iter_mut().enumerate() {
                s.data[i] = series[j];
            }
        }
        out
    }
}

/// Trapezoidal `(int ||u||^p dt)^{1/p}` of a sequence of sample norms.
pub fn mixed_norm_of(norms: &[f64], dt: f64, p: f64) -> f64 {
    if norms.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return norms.iter().copied().fold(0.0, f64::max);
    }
    if norms.len() == 1 {
        return 0.0;
    }
    let last = norms.len() - 1;
    let s: f64 = norms
        .iter()
        .enumerate()
        .map(|(j, n)| {
            let w = if j == 0 || j == last { 0.5 } else { 1.0 };
            w * n.powf(p)
        })
        .sum();
    (s * dt).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid2() -> Grid {
        Grid::new(2, 16, 2.0 * PI).unwrap()
    }

    fn random_field(grid: Grid, comps: usize, seed: u64) -> SpatialField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpatialField::from_fn(grid, comps, |_, _| {
            Complex64::new(rng_val(&mut rng), rng_val(&mut rng))
        })
    }

    fn rng_val(rng: &mut ChaCha8Rng) -> f64 {
        rng.random_range(-1.0..1.0)
    }

    #[test]
    fn constant_field_is_dc_only() {
        let g = grid2();
        let f = SpatialField::from_real(g, 1, |_, _| 1.0);
        let s = f.forward();
        for (i, c) in s.coeffs().iter().enumerate() {
            if i == 0 {
                assert!((c.re - g.period()).abs() < 1e-12);
            } else {
                assert!(c.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lattice_exponential_is_single_coefficient() {
        let g = grid2();
        let k0 = [3i64, -2];
        let f = SpatialField::from_fn(g, 1, |_, x| Complex64::from_polar(1.0, 3.0 * x[0] - 2.0 * x[1]));
        let s = f.forward();
        let target = g.index_of(&k0).unwrap();
        for (i, c) in s.coeffs().iter().enumerate() {
            if i == target {
                assert!((c.norm() - g.period()).abs() < 1e-12);
            } else {
                assert!(c.norm() < 1e-11, "leak at {i}: {c}");
            }
        }
    }

    #[test]
    fn plancherel_and_round_trip() {
        for (dim, n) in [(1, 32), (2, 16), (3, 8)] {
            let g = Grid::new(dim, n, 3.7).unwrap();
            let f = random_field(g, 3, 11 + dim as u64);
            let s = f.forward();
            assert!((s.norm() - f.norm()).abs() / f.norm() < 1e-12);
            let back = s.inverse();
            assert!((&back - &f).norm() / f.norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_power_on_eigenfunction() {
        let g = grid2();
        let f = SpatialField::from_fn(g, 1, |_, x| Complex64::from_polar(1.0, 2.0 * x[1]));
        let out = gradient_power(&f, 1.0);
        assert!((&out - &(&f * 2.0)).norm() < 1e-12);
        assert_eq!(gradient_power(&f, 0.0), f);
        let c = SpatialField::from_real(g, 1, |_, _| 3.0);
        assert!(gradient_power(&c, -1.0).norm() < 1e-14);
    }

    #[test]
    fn gradient_power_composes_on_zero_mean() {
        let g = grid2();
        let mut f = random_field(g, 1, 5).forward();
        f.coeffs_mut()[0] = Complex64::default();
        let f = f.inverse();
        let a = gradient_power(&gradient_power(&f, 0.7), -1.9);
        let b = gradient_power(&f, -1.2);
        assert!((&a - &b).norm() / b.norm() < 1e-10);
    }

    #[test]
    fn spectral_partial_derivative_exact() {
        let g = grid2();
        let f = SpatialField::from_fn(g, 1, |_, x| Complex64::from_polar(1.0, 5.0 * x[0]));
        let d = partial_derivative(&f, 0).unwrap();
        let want = f.scale(Complex64::new(0.0, 5.0));
        assert!((&d - &want).norm() < 1e-11);
        assert!(partial_derivative(&f, 2).is_err());
    }

    #[test]
    fn time_derivative_modes() {
        let g = Grid::new(1, 4, 1.0).unwrap();
        let tg = TimeGrid::new(0.0, 1e-3, 200).unwrap();
        let u = SpaceTimeField::from_fn(tg, g, 1, |t, _, _| Complex64::from_polar(1.0, t));
        let du = u.time_derivative(TimeDerivative::FiniteDifference4).unwrap();
        let want = u.scale(Complex64::new(0.0, 1.0));
        let err = du.sub(&want).unwrap().sup_norm() / want.sup_norm();
        assert!(err < 1e-6, "relative error {err}");

        let c = SpaceTimeField::constant(tg, &SpatialField::from_real(g, 1, |_, _| 2.0));
        assert!(c.time_derivative(TimeDerivative::FiniteDifference4).unwrap().sup_norm() < 1e-9);
        assert!(c.time_derivative(TimeDerivative::Spectral).unwrap().sup_norm() < 1e-9);

        let single = TimeGrid::new(0.0, 0.1, 1).unwrap();
        let one = SpaceTimeField::zeros(single, g, 1);
        assert!(matches!(
            one.time_derivative(TimeDerivative::FiniteDifference4),
            Err(Error::Arity(_))
        ));
        assert!(matches!(one.time_derivative(TimeDerivative::Spectral), Err(Error::Arity(_))));
    }

    #[test]
    fn spectral_time_derivative_on_periodic_series() {
        let g = Grid::new(1, 4, 1.0).unwrap();
        let m = 64;
        let dt = 2.0 * PI / m as f64;
        let tg = TimeGrid::new(0.0, dt, m).unwrap();
        let u = SpaceTimeField::from_fn(tg, g, 1, |t, _, _| Complex64::from_polar(1.0, 3.0 * t));
        let du = u.time_derivative(TimeDerivative::Spectral).unwrap();
        let want = u.scale(Complex64::new(0.0, 3.0));
        assert!(du.sub(&want).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn mixed_norm_examples() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let tg = TimeGrid::new(0.0, 0.01, 301).unwrap();
        let f = SpatialField::from_real(g, 1, |_, _| 1.0);
        let u = SpaceTimeField::constant(tg, &f);
        assert!((u.mixed_norm(2.0) - 3.0f64.sqrt()).abs() < 1e-12);
        let w = SpaceTimeField::from_fn(tg, g, 1, |t, _, _| Complex64::from_polar(1.0 + t, 0.0));
        assert!((w.mixed_norm(f64::INFINITY) - 4.0).abs() < 1e-12);
        let e = SpaceTimeField::from_fn(tg, g, 1, |t, _, _| Complex64::from_polar(1.0, t));
        assert!((e.mixed_norm(2.0) - 3.0f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn shape_errors() {
        let g = grid2();
        assert!(matches!(
            SpatialField::new(g, 1, vec![Complex64::default(); 3]),
            Err(Error::Shape(_))
        ));
        assert!(Grid::new(2, 12, 1.0).is_err());
        assert!(Grid::new(4, 8, 1.0).is_err());
        let tg = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let a = SpatialField::zeros(g, 1);
        let b = SpatialField::zeros(g, 3);
        assert!(SpaceTimeField::new(tg, vec![a, b]).is_err());
    }
}
