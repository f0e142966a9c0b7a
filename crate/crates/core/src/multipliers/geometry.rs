//! Angular caps and frequency cubes as smooth partitions of unity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::cutoff::{cube_profile, theta};
use crate::error::{Error, Result};
use crate::fourier::{Grid, Mode, SpatialField};

/// Angular sector of half-width `alpha` around the unit vector `center`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub alpha: f64,
    pub center: [f64; 3],
}

impl Cap {
    pub fn angle_to(&self, xi: &[f64; 3]) -> f64 {
        let n = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            return f64::NAN;
        }
        let c: f64 = xi.iter().zip(&self.center).map(|(a, b)| a * b).sum::<f64>() / n;
        c.clamp(-1.0, 1.0).acos()
    }

    pub fn contains(&self, xi: &[f64; 3]) -> bool {
        self.angle_to(xi) < self.alpha
    }
}

/// Finitely overlapping caps whose smooth symbols sum to 1 away from `xi = 0`.
#[derive(Clone, Debug)]
pub struct CapCover {
    dim: usize,
    alpha: f64,
    caps: Vec<Cap>,
    /// Plateau and support radii of each bump.
    inner: f64,
    outer: f64,
}

fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Cover of the directions in dimension `dim` by caps of radius `alpha`.
pub fn cap_cover(dim: usize, alpha: f64) -> Result<CapCover> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Range(format!("cap radius {alpha} not in (0, 1]")));
    }
    let (caps, inner, outer) = match dim {
        1 => (
            vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
            alpha / 2.0,
            alpha,
        ),
        2 => {
            let k = (2.0 * PI / alpha).ceil() as usize;
            let delta = 2.0 * PI / k as f64;
            let centers = (0..k)
                .map(|i| {
                    let a = delta * i as f64;
                    [a.cos(), a.sin(), 0.0]
                })
                .collect();
            (centers, delta / 2.0, delta)
        }
        3 => {
            let count = (40.0 / (alpha * alpha)).ceil() as usize;
            (fibonacci_sphere(count), alpha / 2.0, alpha)
        }
        _ => return Err(Error::Config(format!("caps need dimension 1..=3, got {dim}"))),
    };
    Ok(CapCover {
        dim,
        alpha,
        caps: caps.into_iter().map(|center| Cap { alpha, center }).collect(),
        inner,
        outer,
    })
}

impl CapCover {
    pub fn caps(&self) -> &[Cap] {
        &self.caps
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn bump(&self, cap: &Cap, xi: &[f64; 3]) -> f64 {
        if self.dim == 1 {
            return if xi[0] * cap.center[0] > 0.0 { 1.0 } else { 0.0 };
        }
        let a = cap.angle_to(xi);
        if a >= self.outer {
            return 0.0;
        }
        let cut = theta(1.0 + (a - self.inner) / (self.outer - self.inner));
        if self.dim == 3 {
            // Fibonacci neighbours sit inside the plateau; a Gaussian weight
            // keeps each centre dominated by its own cap.
            let eps = 0.15 * self.alpha;
            cut * (-(a / eps).powi(2)).exp()
        } else {
            cut
        }
    }

    /// Symbols of every cap at one frequency (all zero at `xi = 0`).
    pub fn symbols(&self, xi: &[f64; 3]) -> Vec<f64> {
        if xi.iter().all(|v| *v == 0.0) {
            return vec![0.0; self.caps.len()];
        }
        let raw: Vec<f64> = self.caps.iter().map(|c| self.bump(c, xi)).collect();
        let total: f64 = raw.iter().sum();
        if total == 0.0 {
            // cannot happen for a covering family; keep the partition honest
            return raw;
        }
        raw.into_iter().map(|b| b / total).collect()
    }

    pub fn symbol(&self, k: usize, xi: &[f64; 3]) -> f64 {
        self.symbols(xi)[k]
    }

    /// `(C_overlap, M1, M2)` over the nonzero modes of `grid`:
    /// the largest number of caps seen by one mode, and the extreme values of
    /// `(sum_k m_k(xi)^2)^{1/2}`.
    pub fn constants(&self, grid: &Grid) -> (usize, f64, f64) {
        let mut overlap = 0usize;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for m in grid.modes().filter(|m| m.norm > 0.0) {
            let s = self.symbols(&m.xi);
            overlap = overlap.max(s.iter().filter(|v| **v > 0.0).count());
            let q = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            lo = lo.min(q);
            hi = hi.max(q);
        }
        (overlap, lo, hi)
    }
}

/// Angular projection `R_kappa` for cap `k` of a cover.
pub fn angular_cap(u: &SpatialField, cover: &CapCover, k: usize) -> Result<SpatialField> {
    if cover.dim() != u.grid().dim() {
        return Err(Error::Shape(format!(
            "cap cover in dimension {} applied to a {}-dimensional field",
            cover.dim(),
            u.grid().dim()
        )));
    }
    if k >= cover.len() {
        return Err(Error::Range(format!("cap {k} of {}", cover.len())));
    }
    Ok(u.apply_real_symbol(|m: &Mode| cover.symbol(k, &m.xi)))
}

/// All cap projections at once (one forward transform, one symbol pass).
pub fn angular_decompose(u: &SpatialField, cover: &CapCover) -> Result<Vec<SpatialField>> {
    if cover.dim() != u.grid().dim() {
        return Err(Error::Shape(format!(
            "cap cover in dimension {} applied to a {}-dimensional field",
            cover.dim(),
            u.grid().dim()
        )));
    }
    let grid = *u.grid();
    let n = grid.len();
    let spec = u.forward();
    let mut parts = vec![spec.clone(); cover.len()];
    for idx in 0..n {
        let s = cover.symbols(&grid.mode(idx).xi);
        for (part, w) in parts.iter_mut().zip(&s) {
            for c in 0..u.comps() {
                part.coeffs_mut()[c * n + idx] *= w;
            }
        }
    }
    Ok(parts.iter().map(|p| p.inverse()).collect())
}

/// Frequency cube of side `side` centered at `side * center`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub side: f64,
    pub center: [i64; 3],
}

impl Cube {
    pub fn symbol(&self, dim: usize, xi: &[f64; 3]) -> f64 {
        (0..dim)
            .map(|a| cube_profile(xi[a] / self.side - self.center[a] as f64))
            .product()
    }
}

/// Every cube of side `side` whose symbol can be nonzero on the lattice of `grid`.
#[derive(Clone, Debug)]
pub struct CubeCover {
    dim: usize,
    cubes: Vec<Cube>,
}

pub fn cube_cover(grid: &Grid, side: f64) -> Result<CubeCover> {
    if !(side.is_finite() && side > 0.0) {
        return Err(Error::Range(format!("cube side {side}")));
    }
    let reach = (grid.nyquist() / side).ceil() as i64 + 1;
    let dim = grid.dim();
    let axis: Vec<i64> = (-reach..=reach).collect();
    let mut cubes = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let mut center = [0i64; 3];
        for a in 0..dim {
            center[a] = axis[idx[a]];
        }
        cubes.push(Cube { side, center });
        let mut a = 0;
        loop {
            if a == dim {
                return Ok(CubeCover { dim, cubes });
            }
            idx[a] += 1;
            if idx[a] < axis.len() {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

impl CubeCover {
    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Cube projection `P_q`.
pub fn cube_project(u: &SpatialField, q: &Cube) -> SpatialField {
    let dim = u.grid().dim();
    u.apply_real_symbol(|m| q.symbol(dim, &m.xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;
    use num_complex::Complex64;
    use rand::Rng;

    fn annulus_field(grid: Grid, seed: u64) -> SpatialField {
        let mut rng = trial_rng(seed, 0);
        SpatialField::from_fn(grid, 1, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .apply_real_symbol(|m| if m.norm > 2.0 && m.norm < 12.0 { 1.0 } else { 0.0 })
    }

    #[test]
    fn center_passes_and_far_modes_vanish() {
        for dim in [2, 3] {
            let cover = cap_cover(dim, 0.3).unwrap();
            let cap = cover.caps()[0];
            let xi = [cap.center[0] * 5.0, cap.center[1] * 5.0, cap.center[2] * 5.0];
            assert!(cover.symbol(0, &xi) >= 0.9);
            let other = if dim == 2 { [0.0, 5.0, 0.0] } else { [-xi[0], -xi[1], -xi[2]] };
            assert!(cap.angle_to(&other) > 2.0 * cap.alpha);
            assert_eq!(cover.symbol(0, &other), 0.0);
        }
    }

    #[test]
    fn caps_sum_to_identity_on_annulus() {
        for (dim, n) in [(2, 32), (3, 16)] {
            let g = Grid::new(dim, n, 2.0 * PI).unwrap();
            let cover = cap_cover(dim, 0.5).unwrap();
            let u = annulus_field(g, dim as u64);
            let parts = angular_decompose(&u, &cover).unwrap();
            let mut sum = SpatialField::zeros(g, 1);
            for p in &parts {
                sum = &sum + p;
            }
            assert!((&sum - &u).norm() / u.norm() < 1e-10);
            let one = angular_cap(&u, &cover, 3).unwrap();
            assert!((&one - &parts[3]).norm() < 1e-13);
        }
    }

    #[test]
    fn cover_constants() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        let cover = cap_cover(2, 0.1).unwrap();
        let (overlap, m1, m2) = cover.constants(&g);
        assert!(overlap <= 2);
        assert!(m1 > 0.5 && m2 <= 1.0 + 1e-15);
        let u = annulus_field(g, 4);
        let sq: f64 = angular_decompose(&u, &cover)
            .unwrap()
            .iter()
            .map(SpatialField::norm_sqr)
            .sum();
        assert!(sq <= overlap as f64 * u.norm_sqr());
    }

    #[test]
    fn cubes_sum_to_identity() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let cover = cube_cover(&g, 4.0).unwrap();
        let u = annulus_field(g, 5);
        let mut sum = SpatialField::zeros(g, 1);
        for q in cover.cubes() {
            sum = &sum + &cube_project(&u, q);
        }
        assert!((&sum - &u).norm() / u.norm() < 1e-10);
    }
}
