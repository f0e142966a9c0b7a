//! Smooth cutoff profiles built from `h(x) = exp(-1/x)`.

fn h(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`, C-infinity in between.
pub fn smooth_step(x: f64) -> f64 {
    let a = h(x);
    let b = h(1.0 - x);
    if a + b == 0.0 {
        // unreachable for finite x, kept for NaN safety
        return 0.0;
    }
    a / (a + b)
}

/// Equals 1 on `[0, 1]`, 0 on `[2, inf)`.
pub fn theta(r: f64) -> f64 {
    smooth_step(2.0 - r)
}

/// Dyadic annulus profile `theta(r) - theta(2r)`, supported in `[1/2, 2]`, `psi(1) = 1`.
pub fn psi(r: f64) -> f64 {
    theta(r) - theta(2.0 * r)
}

/// Time cutoff: 0 for `s <= -1`, 1 for `s >= 0`.
pub fn chi(s: f64) -> f64 {
    smooth_step(s + 1.0)
}

/// Smooth step from 0 at `-1/4` to 1 at `1/4`.
pub(crate) fn sigma(s: f64) -> f64 {
    smooth_step(2.0 * s + 0.5)
}

/// One-dimensional cube profile; its integer translates sum to 1.
pub fn cube_profile(s: f64) -> f64 {
    sigma(s + 0.5) - sigma(s - 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus() {
        assert_eq!(theta(0.0), 1.0);
        assert_eq!(theta(1.0), 1.0);
        assert_eq!(theta(2.0), 0.0);
        assert_eq!(psi(1.0), 1.0);
        assert_eq!(psi(0.5), 0.0);
        assert_eq!(psi(2.0), 0.0);
        assert_eq!(psi(4.0), 0.0);
        assert_eq!(chi(-1.0), 0.0);
        assert_eq!(chi(0.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn psi_telescopes() {
        for &r in &[0.013, 0.3, 1.7, 5.5, 33.0] {
            let s: f64 = (-10..=10).map(|j| psi(r / 2f64.powi(j))).sum();
            assert!((s - 1.0).abs() < 1e-14, "r={r} sum={s}");
        }
    }

    #[test]
    fn cube_profiles_sum_to_one() {
        for &s in &[-0.9, -0.25, 0.0, 0.1, 0.49, 0.75, 2.3] {
            let tot: f64 = (-6..=6).map(|z| cube_profile(s - z as f64)).sum();
            assert!((tot - 1.0).abs() < 1e-14);
        }
        assert_eq!(cube_profile(0.75), 0.0);
        assert_eq!(cube_profile(0.0), 1.0);
    }
}
