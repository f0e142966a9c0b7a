//! Wave maps into the two-sphere: null form, Duhamel operator, pseudo-spectral
//! time stepping, Picard iteration and scattering profiles.
//!
//! Conventions: `box = d_t^2 - Laplacian`, `Q0(u,v) = u_t . v_t - grad u . grad v`.
//! The equation is `box phi = phi (|grad phi|^2 - |phi_t|^2) = -phi Q0(phi, phi)`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{
    gradient, gradient_power, Grid, SpaceTimeField, SpatialField, SpectralField, TimeDerivative,
    TimeGrid,
};
use crate::multipliers::cutoff::chi;
use crate::multipliers::{conjugate_half_wave, half_wave, homogeneous_wave, map_mode_series, wave_kernel, Sign};
use crate::variation::random::band_limited;

/// Sphere-valued position and tangent velocity at `t = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CauchyData {
    pub f: SpatialField,
    pub g: SpatialField,
}

impl CauchyData {
    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }

    /// Constant map `p` at rest.
    pub fn constant(grid: Grid, p: [f64; 3]) -> Result<Self> {
        let f = SpatialField::from_real(grid, 3, |c, _| p[c]);
        sphere_constrain(&f, &SpatialField::zeros(grid, 3))
    }

    /// Traveling equator map `(cos(k x_1 - w t), sin(k x_1 - w t), 0)` at `t = 0`.
    pub fn equator(grid: Grid, k: f64, omega: f64) -> Self {
        let f = SpatialField::from_real(grid, 3, |c, x| match c {
            0 => (k * x[0]).cos(),
            1 => (k * x[0]).sin(),
            _ => 0.0,
        });
        let g = SpatialField::from_real(grid, 3, |c, x| match c {
            0 => omega * (k * x[0]).sin(),
            1 => -omega * (k * x[0]).cos(),
            _ => 0.0,
        });
        CauchyData { f, g }
    }

    /// Constrained perturbation of the north pole by real band-limited noise
    /// of relative amplitude `amplitude` on modes `|xi| <= cutoff`.
    pub fn small_random(grid: Grid, amplitude: f64, cutoff: f64, rng: &mut impl Rng) -> Result<Self> {
        let noise = |rng: &mut _| {
            let n = band_limited(grid, 3, cutoff, rng).map(|z| Complex64::new(z.re, 0.0));
            let s = n.sup_pointwise().max(f64::MIN_POSITIVE);
            n.scale(Complex64::new(amplitude / s, 0.0))
        };
        let pole = SpatialField::from_real(grid, 3, |c, _| if c == 2 { 1.0 } else { 0.0 });
        let f = &pole + &noise(rng);
        let g = noise(rng);
        sphere_constrain(&f, &g)
    }
}

fn real_vec(field: &SpatialField, idx: usize) -> [f64; 3] {
    let n = field.grid().len();
    let d = field.data();
    [d[idx].re, d[n + idx].re, d[2 * n + idx].re]
}

fn require_vector(field: &SpatialField) -> Result<()> {
    if field.comps() != 3 {
        return Err(Error::Shape(format!(
            "sphere-valued field needs 3 components, got {}",
            field.comps()
        )));
    }
    Ok(())
}

/// `f <- f/|f|`, `g <- g - (g.f) f`, pointwise (real parts).
pub fn sphere_constrain(f: &SpatialField, g: &SpatialField) -> Result<CauchyData> {
    require_vector(f)?;
    f.ensure_same_shape(g)?;
    let n = f.grid().len();
    let mut fo = SpatialField::zeros(*f.grid(), 3);
    let mut go = SpatialField::zeros(*f.grid(), 3);
    for idx in 0..n {
        let a = real_vec(f, idx);
        let b = real_vec(g, idx);
        let r = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        if r < 1e-8 {
            return Err(Error::Degenerate(format!("|f| = {r:e} at grid point {idx}")));
        }
        let p = [a[0] / r, a[1] / r, a[2] / r];
        let dot = b[0] * p[0] + b[1] * p[1] + b[2] * p[2];
        for c in 0..3 {
            fo.data_mut()[c * n + idx] = Complex64::new(p[c], 0.0);
            go.data_mut()[c * n + idx] = Complex64::new(b[c] - dot * p[c], 0.0);
        }
    }
    Ok(CauchyData { f: fo, g: go })
}

/// Pointwise `sum_c a_c b_c` (bilinear, no conjugation).
fn dot_fields(a: &SpatialField, b: &SpatialField) -> SpatialField {
    let n = a.grid().len();
    let mut out = SpatialField::zeros(*a.grid(), 1);
    for c in 0..a.comps() {
        let (x, y) = (a.component(c), b.component(c));
        for ((o, p), q) in out.data_mut().iter_mut().zip(x).zip(y) {
            *o += p * q;
        }
    }
    debug_assert_eq!(out.data().len(), n);
    out
}

fn q0_snapshot(u: &SpatialField, ut: &SpatialField, v: &SpatialField, vt: &SpatialField) -> SpatialField {
    let mut q = dot_fields(ut, vt);
    for (du, dv) in gradient(u).iter().zip(gradient(v).iter()) {
        let s = dot_fields(du, dv);
        for (a, b) in q.data_mut().iter_mut().zip(s.data()) {
            *a -= b;
        }
    }
    q
}

/// `Q0(u, v) = u_t . v_t - sum_j d_j u . d_j v`, summed over components.
pub fn null_form(u: &SpaceTimeField, v: &SpaceTimeField, mode: TimeDerivative) -> Result<SpaceTimeField> {
    u.ensure_same_shape(v)?;
    let ut = u.time_derivative(mode)?;
    let vt = v.time_derivative(mode)?;
    let snaps = (0..u.time().samples())
        .map(|j| q0_snapshot(u.snapshot(j), ut.snapshot(j), v.snapshot(j), vt.snapshot(j)))
        .collect();
    SpaceTimeField::new(*u.time(), snaps)
}

/// `box u` with spectral Laplacian and the chosen time derivative.
pub fn wave_operator(u: &SpaceTimeField, mode: TimeDerivative) -> Result<SpaceTimeField> {
    let utt = u.time_derivative(mode)?.time_derivative(mode)?;
    let lap = u.map_snapshots(|_, f| f.apply_real_symbol(|m| -m.norm * m.norm));
    utt.sub(&lap)
}

/// `||2 Q0(u,v) - [box(uv) - (box u) v - u (box v)]|| / max(||2 Q0||, 1e-14)`
/// in `L^2_{t,x}` over the window.
pub fn null_identity_residual(u: &SpaceTimeField, v: &SpaceTimeField, mode: TimeDerivative) -> Result<f64> {
    u.ensure_same_shape(v)?;
    let pointwise = |a: &SpaceTimeField, b: &SpaceTimeField| -> Result<SpaceTimeField> {
        a.zip_map(b, dot_fields)
    };
    let q = null_form(u, v, mode)?.scale(Complex64::new(2.0, 0.0));
    let uv = pointwise(u, v)?;
    let rhs = wave_operator(&uv, mode)?
        .sub(&pointwise(&wave_operator(u, mode)?, v)?)?
        .sub(&pointwise(u, &wave_operator(v, mode)?)?)?;
    let num = q.sub(&rhs)?.mixed_norm(2.0);
    Ok(num / q.mixed_norm(2.0).max(1e-14))
}

/// `phi (|grad phi|^2 - |phi_t|^2)` pointwise.
pub fn wave_maps_rhs(phi: &SpatialField, phi_t: &SpatialField) -> Result<SpatialField> {
    require_vector(phi)?;
    phi.ensure_same_shape(phi_t)?;
    let mut w = dot_fields(phi_t, phi_t).scale(Complex64::new(-1.0, 0.0));
    for d in gradient(phi) {
        let s = dot_fields(&d, &d);
        for (a, b) in w.data_mut().iter_mut().zip(s.data()) {
            *a += b;
        }
    }
    let n = phi.grid().len();
    let mut out = phi.clone();
    for c in 0..3 {
        for (o, s) in out.component_mut(c).iter_mut().zip(w.data()) {
            *o *= s;
        }
    }
    debug_assert_eq!(out.data().len(), 3 * n);
    Ok(out)
}

/// `-phi Q0(phi, phi)` from already known derivatives (cross-check of [`wave_maps_rhs`]).
pub fn minus_phi_q0(phi: &SpatialField, phi_t: &SpatialField) -> SpatialField {
    let q = q0_snapshot(phi, phi_t, phi, phi_t);
    let mut out = phi.clone();
    for c in 0..phi.comps() {
        for (o, s) in out.component_mut(c).iter_mut().zip(q.data()) {
            *o *= -s;
        }
    }
    out
}

/// `E = 1/2 int |phi_t|^2 + |grad phi|^2`, by Parseval with symbol `|xi|^2`.
pub fn energy(phi: &SpatialField, phi_t: &SpatialField) -> f64 {
    0.5 * (phi_t.norm_sqr() + gradient_power(phi, 1.0).norm_sqr())
}

/// `(e^{z} - 1)/z` and `(e^{z}(z - 1) + 1)/z^2`, stable near 0.
fn filon_weights(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 0.1 {
        let mut p1 = Complex64::default();
        let mut p2 = Complex64::default();
        let mut term = Complex64::new(1.0, 0.0); // z^k / k!
        for k in 0..12 {
            p1 += term / (k as f64 + 1.0);
            p2 += term / (k as f64 + 2.0);
            term *= z / (k as f64 + 1.0);
        }
        (p1, p2)
    } else {
        let e = z.exp();
        ((e - 1.0) / z, (e * (z - 1.0) + 1.0) / (z * z))
    }
}

/// Retarded solution `box^{-1} F` with zero data at `t = 0`, and its time derivative.
///
/// `F` is taken piecewise linear between samples and the oscillatory kernel
/// is integrated exactly per mode. Zero before `t = 0`, which must be a sample.
pub fn duhamel(force: &SpaceTimeField) -> Result<(SpaceTimeField, SpaceTimeField)> {
    let time = *force.time();
    let j0 = zero_index(&time)?;
    let h = time.dt();
    let times: Vec<f64> = time.times().collect();
    let value = map_mode_series(force, |m, s| {
        let w = m.norm;
        let mut out = vec![Complex64::default(); s.len()];
        // J = int e^{iws} F, K = int e^{-iws} F; at w = 0: A = int F, B = int s F
        let mut jacc = Complex64::default();
        let mut kacc = Complex64::default();
        for j in j0..s.len() {
            if j > j0 {
                let (a, fa, fb) = (times[j - 1], s[j - 1], s[j]);
                if w == 0.0 {
                    jacc += (fa + fb) * (0.5 * h);
                    let mid = 0.5 * (a + times[j]);
                    kacc += (fa * a + (fa + fb) * (2.0 * mid) + fb * times[j]) * (h / 6.0);
                } else {
                    for (acc, sg) in [(&mut jacc, 1.0), (&mut kacc, -1.0)] {
                        let z = Complex64::new(0.0, sg * w * h);
                        let (p1, p2) = filon_weights(z);
                        let ea = Complex64::from_polar(1.0, sg * w * a);
                        *acc += ea * h * (fa * p1 + (fb - fa) * p2);
                    }
                }
            }
            let t = times[j];
            out[j] = if w == 0.0 {
                jacc * t - kacc
            } else {
                let e = Complex64::from_polar(1.0, w * t);
                (e * kacc - e.conj() * jacc) / Complex64::new(0.0, 2.0 * w)
            };
        }
        s.copy_from_slice(&out);
    });
    let deriv = map_mode_series(force, |m, s| {
        let w = m.norm;
        let mut out = vec![Complex64::default(); s.len()];
        let mut jacc = Complex64::default();
        let mut kacc = Complex64::default();
        for j in j0..s.len() {
            if j > j0 {
                let (a, fa, fb) = (times[j - 1], s[j - 1], s[j]);
                for (acc, sg) in [(&mut jacc, 1.0), (&mut kacc, -1.0)] {
                    let z = Complex64::new(0.0, sg * w * h);
                    let (p1, p2) = filon_weights(z);
                    let ea = Complex64::from_polar(1.0, sg * w * a);
                    *acc += ea * h * (fa * p1 + (fb - fa) * p2);
                }
            }
            let e = Complex64::from_polar(1.0, w * times[j]);
            out[j] = (e * kacc + e.conj() * jacc) * 0.5;
        }
        s.copy_from_slice(&out);
    });
    Ok((value, deriv))
}

fn zero_index(time: &TimeGrid) -> Result<usize> {
    if time.t0() > 1e-12 * time.dt() {
        return Err(Error::Config(format!("window must start at or before t = 0, starts at {}", time.t0())));
    }
    let j0 = time.nearest(0.0);
    if time.time(j0).abs() > 1e-9 * time.dt() {
        return Err(Error::Config("t = 0 is not a sample time".into()));
    }
    Ok(j0)
}

/// Time integrator for [`evolve`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Lawson (integrating-factor) Heun method.
    Rk2,
    /// Lawson classical fourth-order Runge-Kutta.
    #[default]
    Rk4,
}

/// Per-sample solver diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub t: f64,
    pub energy: f64,
    /// `sup_x ||phi| - 1|`
    pub constraint_sup: f64,
    /// `sup_x |phi . phi_t|`
    pub step_residual: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub phi: SpaceTimeField,
    pub phi_t: SpaceTimeField,
    pub diagnostics: Vec<Diagnostic>,
}

impl Trajectory {
    pub fn time(&self) -> &TimeGrid {
        self.phi.time()
    }

    /// Largest relative energy deviation from the first sample.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.diagnostics[0].energy;
        let scale = if e0 == 0.0 { 1.0 } else { e0 };
        self.diagnostics
            .iter()
            .map(|d| (d.energy - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    pub fn constraint_sup(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.constraint_sup).fold(0.0, f64::max)
    }

    /// Diagnostics as CSV rows `t,energy,constraint_sup,step_residual`.
    pub fn diagnostics_csv(&self) -> String {
        let mut s = String::from("t,energy,constraint_sup,step_residual\n");
        for d in &self.diagnostics {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                d.t, d.energy, d.constraint_sup, d.step_residual
            ));
        }
        s
    }
}

pub fn diagnose(t: f64, phi: &SpatialField, phi_t: &SpatialField) -> Diagnostic {
    let n = phi.grid().len();
    let mut cs: f64 = 0.0;
    let mut sr: f64 = 0.0;
    for idx in 0..n {
        let a = real_vec(phi, idx);
        let b = real_vec(phi_t, idx);
        let r = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        cs = cs.max((r - 1.0).abs());
        sr = sr.max((a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).abs());
    }
    Diagnostic {
        t,
        energy: energy(phi, phi_t),
        constraint_sup: cs,
        step_residual: sr,
    }
}

/// `u_+- = u +- i |nabla|^{-1} u_t`.
#[derive(Clone, Debug)]
pub struct HalfWavePair {
    pub plus: SpatialField,
    pub minus: SpatialField,
}

impl HalfWavePair {
    pub fn from_state(u: &SpatialField, ut: &SpatialField) -> Self {
        let w = gradient_power(ut, -1.0).scale(Complex64::new(0.0, 1.0));
        HalfWavePair {
            plus: u + &w,
            minus: u - &w,
        }
    }

    /// `(u, u_t) = ((u_+ + u_-)/2, |nabla|(u_+ - u_-)/(2i))`; exact for zero-mean `u_t`.
    pub fn reconstruct(&self) -> (SpatialField, SpatialField) {
        let u = &(&self.plus + &self.minus) * 0.5;
        let d = gradient_power(&(&self.plus - &self.minus), 1.0);
        (u, d.scale(Complex64::new(0.0, -0.5)))
    }
}

/// Per-mode linear flow of `(u_hat, u_t_hat)` over time `h`.
struct Rotation {
    /// `(cos, sin/w, -w sin)` per mode
    coeffs: Vec<(f64, f64, f64)>,
}

impl Rotation {
    fn new(grid: &Grid, h: f64) -> Self {
        let coeffs = grid
            .modes()
            .map(|m| {
                let (c, so) = wave_kernel(h, m.norm);
                (c, so, -m.norm * m.norm * so)
            })
            .collect();
        Rotation { coeffs }
    }

    fn apply(&self, y: &(SpectralField, SpectralField)) -> (SpectralField, SpectralField) {
        let n = self.coeffs.len();
        let mut u = y.0.clone();
        let mut v = y.1.clone();
        for (i, (a, b)) in u.coeffs_mut().iter_mut().zip(v.coeffs_mut().iter_mut()).enumerate() {
            let (c, so, ds) = self.coeffs[i % n];
            let (ua, vb) = (*a, *b);
            *a = ua * c + vb * so;
            *b = ua * ds + vb * c;
        }
        (u, v)
    }
}

fn axpy(y: &(SpectralField, SpectralField), a: f64, x: &(SpectralField, SpectralField)) -> (SpectralField, SpectralField) {
    let mut u = y.0.clone();
    let mut v = y.1.clone();
    for (o, i) in u.coeffs_mut().iter_mut().zip(x.0.coeffs()) {
        *o += i * a;
    }
    for (o, i) in v.coeffs_mut().iter_mut().zip(x.1.coeffs()) {
        *o += i * a;
    }
    (u, v)
}

/// Dealiased nonlinearity in spectral form, scaled by `h`: `(0, h F_hat)`.
fn nonlinear_step(y: &(SpectralField, SpectralField), keep: &[bool], h: f64) -> (SpectralField, SpectralField) {
    let trunc = |s: &SpectralField| {
        let mut s = s.clone();
        let n = keep.len();
        for (i, z) in s.coeffs_mut().iter_mut().enumerate() {
            if !keep[i % n] {
                *z = Complex64::default();
            }
        }
        s
    };
    let u = trunc(&y.0).inverse();
    let v = trunc(&y.1).inverse();
    let f = wave_maps_rhs(&u, &v).expect("3-component state");
    let mut fh = trunc(&f.forward());
    fh.coeffs_mut().iter_mut().for_each(|z| *z *= h);
    (SpectralField::zeros(*y.0.grid(), 3), fh)
}

/// Integrate `box phi = phi(|grad phi|^2 - |phi_t|^2)` from `(f, g)` at `t = 0`
/// to `t_end`, recording every `record_every` steps.
///
/// Linear part exact per mode; nonlinearity by a Lawson Runge-Kutta stage,
/// dealiased with the 2/3 rule.
pub fn evolve(data: &CauchyData, t_end: f64, dt: f64, scheme: Scheme, record_every: usize) -> Result<Trajectory> {
    require_vector(&data.f)?;
    data.f.ensure_same_shape(&data.g)?;
    if !(dt > 0.0 && t_end >= 0.0 && dt.is_finite() && t_end.is_finite()) {
        return Err(Error::Config(format!("invalid span t_end={t_end}, dt={dt}")));
    }
    let stride = record_every.max(1);
    let steps = (t_end / dt).round() as usize;
    if ((steps as f64) * dt - t_end).abs() > 1e-9 * dt.max(t_end) {
        return Err(Error::Config(format!("t_end {t_end} is not a multiple of dt {dt}")));
    }
    if steps % stride != 0 {
        return Err(Error::Config(format!("{steps} steps not divisible by record stride {stride}")));
    }
    let grid = *data.f.grid();
    let keep: Vec<bool> = grid.modes().map(|m| grid.dealias_keep(&m)).collect();
    let full = Rotation::new(&grid, dt);
    let half = Rotation::new(&grid, dt / 2.0);
    let mut y = (data.f.forward(), data.g.forward());

    let mut phis = vec![data.f.clone()];
    let mut vels = vec![data.g.clone()];
    let mut diags = vec![diagnose(0.0, &data.f, &data.g)];
    for step in 1..=steps {
        let next = match scheme {
            Scheme::Rk2 => {
                let k1 = nonlinear_step(&y, &keep, dt);
                let ey = full.apply(&y);
                let ek1 = full.apply(&k1);
                let k2 = nonlinear_step(&axpy(&ey, 1.0, &ek1), &keep, dt);
                axpy(&axpy(&ey, 0.5, &ek1), 0.5, &k2)
            }
            Scheme::Rk4 => {
                let k1 = nonlinear_step(&y, &keep, dt);
                let k2 = nonlinear_step(&half.apply(&axpy(&y, 0.5, &k1)), &keep, dt);
                let hy = half.apply(&y);
                let k3 = nonlinear_step(&axpy(&hy, 0.5, &k2), &keep, dt);
                let ey = full.apply(&y);
                let k4 = nonlinear_step(&axpy(&ey, 1.0, &half.apply(&k3)), &keep, dt);
                let mut acc = axpy(&ey, 1.0 / 6.0, &full.apply(&k1));
                let mid = half.apply(&axpy(&k2, 1.0, &k3));
                acc = axpy(&acc, 2.0 / 6.0, &mid);
                axpy(&acc, 1.0 / 6.0, &k4)
            }
        };
        let finite = next.0.coeffs().iter().chain(next.1.coeffs()).all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::Diverged {
                t: step as f64 * dt,
                last: Box::new((y.0.inverse(), y.1.inverse())),
            });
        }
        y = next;
        if step % stride == 0 {
            let (u, v) = (y.0.inverse(), y.1.inverse());
            diags.push(diagnose(step as f64 * dt, &u, &v));
            phis.push(u);
            vels.push(v);
        }
    }
    let time = TimeGrid::new(0.0, dt * stride as f64, phis.len())?;
    Ok(Trajectory {
        phi: SpaceTimeField::new(time, phis)?,
        phi_t: SpaceTimeField::new(time, vels)?,
        diagnostics: diags,
    })
}

/// `chi(t |xi| / chi_scale) V(t)(f, g)` and its time derivative on a window
/// containing `t = 0`; the cutoff is the identity for `t >= 0`.
pub fn truncated_free_wave(
    f: &SpatialField,
    g: &SpatialField,
    time: TimeGrid,
    chi_scale: f64,
) -> Result<(SpaceTimeField, SpaceTimeField)> {
    zero_index(&time)?;
    let mut phis = Vec::with_capacity(time.samples());
    let mut vels = Vec::with_capacity(time.samples());
    for t in time.times() {
        let w = homogeneous_wave(f, g, t)?;
        if t >= 0.0 {
            phis.push(w.value);
            vels.push(w.velocity);
        } else {
            let eps = 1e-6;
            let c = |m: &crate::fourier::Mode| chi(t * m.norm / chi_scale);
            let dc = |m: &crate::fourier::Mode| {
                (chi((t + eps) * m.norm / chi_scale) - chi((t - eps) * m.norm / chi_scale)) / (2.0 * eps)
            };
            let v = w.value.apply_real_symbol(c);
            let vt = &w.velocity.apply_real_symbol(c) + &w.value.apply_real_symbol(dc);
            phis.push(v);
            vels.push(vt);
        }
    }
    Ok((SpaceTimeField::new(time, phis)?, SpaceTimeField::new(time, vels)?))
}

/// [`truncated_free_wave`] of sphere data, with diagnostics.
pub fn linear_trajectory(data: &CauchyData, time: TimeGrid, chi_scale: f64) -> Result<Trajectory> {
    let (phi, phi_t) = truncated_free_wave(&data.f, &data.g, time, chi_scale)?;
    let diagnostics = phi
        .snapshots()
        .iter()
        .zip(phi_t.snapshots())
        .zip(time.times())
        .map(|((a, b), t)| diagnose(t, a, b))
        .collect();
    Ok(Trajectory {
        phi,
        phi_t,
        diagnostics,
    })
}

/// One application of `T[u] = chi(t|nabla|) V(t)(f,g) + box^{-1}(-u Q0(u,u))`,
/// with `Q0` built from the trajectory's own `u_t` and 2/3-dealiased products.
pub fn picard_map(u: &Trajectory, data: &CauchyData, chi_scale: f64) -> Result<Trajectory> {
    let time = *u.time();
    let grid = *u.phi.grid();
    let keep: Vec<bool> = grid.modes().map(|m| grid.dealias_keep(&m)).collect();
    let trunc = |f: &SpatialField| f.apply_real_symbol(|m| if keep[m.index] { 1.0 } else { 0.0 });
    let force_snaps = u
        .phi
        .snapshots()
        .iter()
        .zip(u.phi_t.snapshots())
        .map(|(a, b)| Ok(trunc(&minus_phi_q0(&trunc(a), &trunc(b)))))
        .collect::<Result<Vec<_>>>()?;
    let force = SpaceTimeField::new(time, force_snaps)?;
    let (dv, dvt) = duhamel(&force)?;
    let lin = linear_trajectory(data, time, chi_scale)?;
    let phi = lin.phi.add(&dv)?;
    let phi_t = lin.phi_t.add(&dvt)?;
    let diagnostics = phi
        .snapshots()
        .iter()
        .zip(phi_t.snapshots())
        .zip(time.times())
        .map(|((a, b), t)| diagnose(t, a, b))
        .collect();
    Ok(Trajectory {
        phi,
        phi_t,
        diagnostics,
    })
}

/// Picard iterates from the linear solution with successive `L^inf_t L^2`
/// differences.
pub struct PicardRun {
    pub iterate: Trajectory,
    pub differences: Vec<f64>,
}

impl PicardRun {
    /// Largest ratio of successive differences. Pairs whose first entry has
    /// fallen below `1e-12` times the first difference sit at the roundoff
    /// floor and are skipped.
    pub fn contraction_factor(&self) -> f64 {
        let floor = self.differences.first().copied().unwrap_or(0.0) * 1e-12;
        self.differences
            .windows(2)
            .filter(|w| w[0] > floor)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }
}

pub fn picard_iterate(data: &CauchyData, time: TimeGrid, iterations: usize, chi_scale: f64) -> Result<PicardRun> {
    let mut cur = linear_trajectory(data, time, chi_scale)?;
    let mut differences = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let next = picard_map(&cur, data, chi_scale)?;
        differences.push(next.phi.sub(&cur.phi)?.sup_norm());
        cur = next;
    }
    Ok(PicardRun {
        iterate: cur,
        differences,
    })
}

/// Scattering profiles at the probe times.
#[derive(Clone, Debug)]
pub struct Scattering {
    pub f_plus: SpatialField,
    pub f_minus: SpatialField,
    pub f_inf: SpatialField,
    pub g_inf: SpatialField,
    pub probe_times: Vec<f64>,
    /// `||f_+(t_{k+1}) - f_+(t_k)|| + ||f_-(t_{k+1}) - f_-(t_k)||`.
    pub cauchy_profile: Vec<f64>,
}

/// `f_+-(t) = e^{+- it|nabla|}(u(t) +- i|nabla|^{-1} u_t(t))` at the samples nearest
/// to `probes`; `f_inf = (f_+ + f_-)/2`, `g_inf = (i/2)|nabla|(f_- - f_+)`.
pub fn scattering_extract(traj: &Trajectory, probes: &[f64]) -> Result<Scattering> {
    let time = traj.time();
    let mut idx: Vec<usize> = probes.iter().map(|&t| time.nearest(t)).collect();
    idx.dedup();
    if idx.len() < 3 {
        return Err(Error::Arity(format!("need >= 3 distinct probe samples, got {}", idx.len())));
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for &j in &idx {
        let t = time.time(j);
        let pair = HalfWavePair::from_state(traj.phi.snapshot(j), traj.phi_t.snapshot(j));
        plus.push(half_wave(&pair.plus, t, Sign::Minus));
        minus.push(half_wave(&pair.minus, t, Sign::Plus));
    }
    let cauchy_profile = (1..idx.len())
        .map(|k| (&plus[k] - &plus[k - 1]).norm() + (&minus[k] - &minus[k - 1]).norm())
        .collect();
    let f_plus = plus.pop().expect("nonempty");
    let f_minus = minus.pop().expect("nonempty");
    let f_inf = &(&f_plus + &f_minus) * 0.5;
    let g_inf = gradient_power(&(&f_minus - &f_plus), 1.0).scale(Complex64::new(0.0, 0.5));
    Ok(Scattering {
        f_plus,
        f_minus,
        f_inf,
        g_inf,
        probe_times: idx.iter().map(|&j| time.time(j)).collect(),
        cauchy_profile,
    })
}

/// `e^{+- it|nabla|}` conjugated half-wave components of a trajectory.
pub fn profile_series(traj: &Trajectory) -> (SpaceTimeField, SpaceTimeField) {
    let inv = traj.phi_t.map_snapshots(|_, f| gradient_power(f, -1.0).scale(Complex64::new(0.0, 1.0)));
    let up = traj.phi.add(&inv).expect("same shape");
    let um = traj.phi.sub(&inv).expect("same shape");
    (conjugate_half_wave(&up, Sign::Plus), conjugate_half_wave(&um, Sign::Minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(2, 16, 2.0 * PI).unwrap()
    }

    #[test]
    fn null_form_examples() {
        let g = grid();
        let t = TimeGrid::new(0.0, 2.0 * PI / 32.0, 32).unwrap();
        let u = SpaceTimeField::from_fn(t, g, 1, |s, _, x| Complex64::from_polar(1.0, s + x[0]));
        let v = SpaceTimeField::from_fn(t, g, 1, |s, _, x| Complex64::from_polar(1.0, s - x[0]));
        let q = null_form(&u, &u, TimeDerivative::Spectral).unwrap();
        assert!(q.sup_norm() < 1e-11);
        let q = null_form(&u, &v, TimeDerivative::Spectral).unwrap();
        let want = SpaceTimeField::from_fn(t, g, 1, |s, _, _| Complex64::from_polar(-2.0, 2.0 * s));
        assert!(q.sub(&want).unwrap().sup_norm() < 1e-10);
        let r = null_identity_residual(&u, &v, TimeDerivative::Spectral).unwrap();
        assert!(r < 1e-10, "{r}");
        let c = SpaceTimeField::from_fn(t, g, 1, |_, _, _| Complex64::new(2.0, 0.0));
        assert!(null_form(&c, &c, TimeDerivative::FiniteDifference4).unwrap().sup_norm() < 1e-12);
        assert!(null_identity_residual(&c, &c, TimeDerivative::Spectral).unwrap() < 1e-10);
    }

    #[test]
    fn rhs_examples() {
        let g = grid();
        let d = CauchyData::equator(g, 2.0, 0.0);
        let r = wave_maps_rhs(&d.f, &d.g).unwrap();
        assert!((&r - &(&d.f * 4.0)).norm() < 1e-11);
        assert!((&r - &minus_phi_q0(&d.f, &d.g)).norm() < 1e-12);
        let c = CauchyData::constant(g, [0.0, 0.6, 0.8]).unwrap();
        assert!(wave_maps_rhs(&c.f, &c.g).unwrap().norm() < 1e-14);
        assert!(wave_maps_rhs(&SpatialField::zeros(g, 1), &SpatialField::zeros(g, 1)).is_err());
    }

    #[test]
    fn energy_of_equator() {
        let g = grid();
        let d = CauchyData::equator(g, 1.0, 0.0);
        assert!((energy(&d.f, &d.g) - 2.0 * PI * PI).abs() < 1e-10);
        let c = CauchyData::constant(g, [1.0, 0.0, 0.0]).unwrap();
        assert!(energy(&c.f, &c.g) < 1e-20);
    }

    #[test]
    fn constrain_examples() {
        let g = grid();
        let f = SpatialField::from_real(g, 3, |c, _| if c == 0 { 2.0 } else { 0.0 });
        let d = sphere_constrain(&f, &SpatialField::zeros(g, 3)).unwrap();
        assert!((&d.f - &(&f * 0.5)).norm() < 1e-15);
        let again = sphere_constrain(&d.f, &d.g).unwrap();
        assert_eq!(again, d);
        let mut rng = trial_rng(3, 0);
        let r = CauchyData::small_random(g, 0.3, 3.0, &mut rng).unwrap();
        let diag = diagnose(0.0, &r.f, &r.g);
        assert!(diag.constraint_sup < 1e-12 && diag.step_residual < 1e-12);
        assert!(matches!(
            sphere_constrain(&SpatialField::zeros(g, 3), &SpatialField::zeros(g, 3)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn duhamel_examples() {
        let g = grid();
        let t = TimeGrid::new(-0.5, 0.01, 301).unwrap();
        let f = SpaceTimeField::from_fn(t, g, 1, |_, _, x| Complex64::from_polar(1.0, x[1]));
        let (v, vt) = duhamel(&f).unwrap();
        for (j, s) in t.times().enumerate() {
            let want = if s < 0.0 { 0.0 } else { 1.0 - s.cos() };
            let wt = if s < 0.0 { 0.0 } else { s.sin() };
            let e = SpaceTimeField::from_fn(t, g, 1, |_, _, x| Complex64::from_polar(1.0, x[1]));
            assert!((v.snapshot(j) - &(e.snapshot(j) * want)).norm() < 1e-12);
            assert!((vt.snapshot(j) - &(e.snapshot(j) * wt)).norm() < 1e-12);
        }
        // constant-mode force: (t^2 / 2) F
        let c = SpaceTimeField::from_fn(t, g, 1, |_, _, _| Complex64::new(1.0, 0.0));
        let (cv, _) = duhamel(&c).unwrap();
        let last = t.samples() - 1;
        let tl = t.time(last);
        assert!((cv.snapshot(last).data()[0].re - tl * tl / 2.0).abs() < 1e-12);
        assert!(duhamel(&SpaceTimeField::zeros(t, g, 1)).unwrap().0.sup_norm() == 0.0);
    }

    #[test]
    fn duhamel_inverts_wave_operator() {
        let g = grid();
        let t = TimeGrid::new(0.0, 1e-3, 1001).unwrap();
        let f = SpaceTimeField::from_fn(t, g, 1, |s, _, x| {
            Complex64::new((2.0 * s).cos() * (x[0] + 2.0 * x[1]).sin() + s * s * x[0].cos(), 0.0)
        });
        let (v, _) = duhamel(&f).unwrap();
        let r = wave_operator(&v, TimeDerivative::FiniteDifference4).unwrap().sub(&f).unwrap();
        let rel = r.mixed_norm(2.0) / f.mixed_norm(2.0);
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn half_wave_pair_round_trip() {
        let g = grid();
        let mut rng = trial_rng(4, 0);
        let u = band_limited(g, 1, 6.0, &mut rng);
        let ut = band_limited(g, 1, 6.0, &mut rng).apply_real_symbol(|m| if m.norm > 0.0 { 1.0 } else { 0.0 });
        let (a, b) = HalfWavePair::from_state(&u, &ut).reconstruct();
        assert!((&a - &u).norm() < 1e-12 * u.norm());
        assert!((&b - &ut).norm() < 1e-12 * ut.norm());
    }

    #[test]
    fn constant_map_is_stationary() {
        let g = grid();
        let d = CauchyData::constant(g, [0.0, 0.0, 1.0]).unwrap();
        let tr = evolve(&d, 0.1, 0.01, Scheme::Rk4, 1).unwrap();
        for s in tr.phi.snapshots() {
            assert!((s - &d.f).norm() < 1e-14);
        }
        assert_eq!(tr.diagnostics.len(), 11);
    }

    #[test]
    fn equator_map_short_run() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        let (k, w) = (1.0, 2.0);
        let d = CauchyData::equator(g, k, w);
        let tr = evolve(&d, 0.2, 1e-3, Scheme::Rk4, 100).unwrap();
        let tf = 0.2;
        let exact = SpatialField::from_real(g, 3, |c, x| match c {
            0 => (k * x[0] - w * tf).cos(),
            1 => (k * x[0] - w * tf).sin(),
            _ => 0.0,
        });
        let err = (tr.phi.snapshot(2) - &exact).norm();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn linear_scattering_recovers_data() {
        let g = grid();
        let mut rng = trial_rng(9, 0);
        let zm = |f: SpatialField| f.apply_real_symbol(|m| if m.norm > 0.0 { 1.0 } else { 0.0 });
        let f = zm(band_limited(g, 3, 5.0, &mut rng));
        let gg = zm(band_limited(g, 3, 5.0, &mut rng));
        let d = CauchyData { f: f.clone(), g: gg.clone() };
        let t = TimeGrid::new(0.0, 0.1, 21).unwrap();
        let tr = linear_trajectory(&d, t, 1.0).unwrap();
        let s = scattering_extract(&tr, &[0.5, 1.0, 2.0]).unwrap();
        assert!((&s.f_inf - &f).norm() < 1e-12 * f.norm());
        assert!((&s.g_inf - &gg).norm() < 1e-12 * gg.norm());
        assert!(s.cauchy_profile.iter().all(|c| *c < 1e-12));
        assert!(scattering_extract(&tr, &[0.5, 0.5]).is_err());
    }
}
