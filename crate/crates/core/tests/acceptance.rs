//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use wavelab_core::estimates::{
    check_besov, check_bilinear_atomic, check_bilinear_free, check_duality, check_key_increment, check_resonance,
    EstimateReport, SamplingSpec,
};
use wavelab_core::fourier::TimeDerivative;
use wavelab_core::multipliers::{modulation_band, BandOptions, Comparator, Modulation, Route, Taper};
use wavelab_core::rng::trial_rng;
use wavelab_core::variation::random::band_limited;
use wavelab_core::variation::{distance_matrix, p_variation, variation_dp};
use wavelab_core::wavemaps::{evolve, null_identity_residual, picard_iterate, CauchyData, Scheme};
use wavelab_core::{Grid, SpaceTimeField, SpatialField, TimeGrid};

type Outcome = Result<String, String>;

fn from_report(r: &EstimateReport) -> Outcome {
    let msg = format!(
        "{}: n={} min={:.4e} median={:.4e} max={:.4e} violations={}",
        r.id, r.stats.count, r.stats.min, r.stats.median, r.stats.max, r.violations
    );
    if r.passed() {
        Ok(msg)
    } else {
        Err(format!("{msg} failures={:?}", r.failures))
    }
}

fn all_ok(parts: Vec<Outcome>) -> Outcome {
    let failed = parts.iter().any(|p| p.is_err());
    let text = parts
        .into_iter()
        .map(|p| match p {
            Ok(s) | Err(s) => s,
        })
        .collect::<Vec<_>>()
        .join("; ");
    if failed {
        Err(text)
    } else {
        Ok(text)
    }
}

fn equator_oracle() -> Outcome {
    let grid = Grid::new(2, 64, 2.0 * PI).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (k, w) in [(1.0, 2.0), (2.0, 1.0), (1.0, 0.0)] {
        let start = Instant::now();
        let tr = evolve(&CauchyData::equator(grid, k, w), 1.0, 1e-3, Scheme::Rk4, 1000).map_err(|e| e.to_string())?;
        let exact = SpatialField::from_real(grid, 3, |c, x| match c {
            0 => (k * x[0] - w).cos(),
            1 => (k * x[0] - w).sin(),
            _ => 0.0,
        });
        let last = tr.phi.snapshots().last().expect("recorded");
        let err = (last - &exact).norm();
        if start.elapsed().as_secs_f64() > 60.0 {
            return Err(format!("(k, w) = ({k}, {w}) took {:.1}s", start.elapsed().as_secs_f64()));
        }
        if err >= 1e-6 {
            return Err(format!("(k, w) = ({k}, {w}): L2 error {err:.3e}"));
        }
        worst = worst.max(err);
    }
    Ok(format!("max L2 error {worst:.3e}"))
}

/// Sum of a few random space-time plane waves, periodic on the window.
fn trig_field(grid: Grid, time: TimeGrid, rng: &mut impl Rng) -> SpaceTimeField {
    let terms: Vec<([f64; 2], f64, Complex64)> = (0..6)
        .map(|_| {
            let k = [rng.random_range(-4i32..=4) as f64, rng.random_range(-4i32..=4) as f64];
            let m = rng.random_range(-4i32..=4) as f64;
            (k, m, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        })
        .collect();
    SpaceTimeField::from_fn(time, grid, 1, |t, _, x| {
        terms.iter().map(|(k, m, c)| c * Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + m * t)).sum()
    })
}

fn null_identity() -> Outcome {
    let grid = Grid::new(2, 32, 2.0 * PI).map_err(|e| e.to_string())?;
    let time = TimeGrid::new(0.0, 2.0 * PI / 32.0, 32).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let mut rng = trial_rng(2, k);
        let u = trig_field(grid, time, &mut rng);
        let v = trig_field(grid, time, &mut rng);
        worst = worst.max(null_identity_residual(&u, &v, TimeDerivative::Spectral).map_err(|e| e.to_string())?);
    }
    let u = SpaceTimeField::from_fn(time, grid, 1, |t, _, x| Complex64::from_polar(1.0, t + x[0]));
    let v = SpaceTimeField::from_fn(time, grid, 1, |t, _, x| Complex64::from_polar(1.0, t - x[0]));
    let plane = null_identity_residual(&u, &v, TimeDerivative::Spectral).map_err(|e| e.to_string())?;
    let msg = format!("random max residual {worst:.3e}, plane-wave pair {plane:.3e}");
    if worst < 1e-8 && plane < 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn conservation() -> Outcome {
    let grid = Grid::new(2, 32, 2.0 * PI).map_err(|e| e.to_string())?;
    let (mut drift, mut constraint): (f64, f64) = (0.0, 0.0);
    for k in 0..20 {
        let data = CauchyData::small_random(grid, 1e-2, 4.0, &mut trial_rng(3, k)).map_err(|e| e.to_string())?;
        let tr = evolve(&data, 1.0, 1e-3, Scheme::Rk4, 100).map_err(|e| e.to_string())?;
        drift = drift.max(tr.energy_drift());
        constraint = constraint.max(tr.constraint_sup());
    }
    let msg = format!("max relative energy drift {drift:.3e}, max constraint defect {constraint:.3e}");
    if drift < 1e-6 && constraint < 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn brute_force(d: &[Vec<f64>], p: f64) -> f64 {
    let m = d.len();
    if m < 2 {
        return 0.0;
    }
    let inner = m - 2;
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << inner) {
        let mut prev = 0;
        let mut sum = 0.0;
        for i in 1..m {
            if i == m - 1 || mask & (1 << (i - 1)) != 0 {
                sum += d[prev][i].powf(p);
                prev = i;
            }
        }
        best = best.max(sum);
    }
    best
}

fn dp_exactness() -> Outcome {
    let grid = Grid::new(1, 8, 2.0 * PI).map_err(|e| e.to_string())?;
    let mut cases = 0;
    for k in 0..200u64 {
        let m = 2 + (k as usize % 11);
        let mut rng = trial_rng(4, k);
        let time = TimeGrid::new(0.0, 1.0, m).map_err(|e| e.to_string())?;
        let snaps: Vec<SpatialField> = (0..m).map(|_| band_limited(grid, 1, 4.0, &mut rng)).collect();
        let u = SpaceTimeField::new(time, snaps).map_err(|e| e.to_string())?;
        let refs: Vec<&SpatialField> = u.snapshots().iter().collect();
        let d = distance_matrix(&refs);
        for p in [1.0, 1.5, 2.0, 3.0] {
            let dp = variation_dp(m, |i, j| d[i][j], p).0;
            let bf = brute_force(&d, p);
            let pv = p_variation(&u, p).map_err(|e| e.to_string())?;
            if dp != bf || pv != bf.powf(1.0 / p) {
                return Err(format!("M={m} p={p}: dp {dp:e} brute force {bf:e} p_variation {pv:e}"));
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} (series, p) cases, M = 2..=12, bitwise equal"))
}

fn duality() -> Outcome {
    let spec = SamplingSpec {
        samples: 1000,
        seed: 5,
        ..SamplingSpec::default()
    };
    all_ok(
        [4.0 / 3.0, 2.0, 4.0]
            .into_iter()
            .map(|p| check_duality(&spec, p).map_err(|e| e.to_string()).and_then(|r| from_report(&r)))
            .collect(),
    )
}

fn modulation_routes() -> Outcome {
    let grid = Grid::new(2, 16, 2.0 * PI).map_err(|e| e.to_string())?;
    let time = TimeGrid::new(0.0, 0.05, 128).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in 0..50u64 {
        let mut rng = trial_rng(6, k);
        let snaps: Vec<SpatialField> = (0..time.samples()).map(|_| band_limited(grid, 1, 6.0, &mut rng)).collect();
        let u = SpaceTimeField::new(time, snaps).map_err(|e| e.to_string())?;
        let d = [1.0, 2.0, 4.0, 8.0][k as usize % 4];
        let taper = if k % 2 == 0 { Taper::Hann } else { Taper::Rectangular };
        let comparator = if k % 3 == 0 { Comparator::AtMost } else { Comparator::Approx };
        for m in [Modulation::Plus, Modulation::Minus] {
            let opts = BandOptions::new(comparator, taper);
            let a = modulation_band(&u, d, m, opts, Route::Direct).map_err(|e| e.to_string())?;
            let b = modulation_band(&u, d, m, opts, Route::Conjugation).map_err(|e| e.to_string())?;
            let scale = a.sup_norm().max(b.sup_norm()).max(f64::MIN_POSITIVE);
            worst = worst.max(a.sub(&b).map_err(|e| e.to_string())?.sup_norm() / scale);
        }
    }
    let msg = format!("max relative route difference {worst:.3e}");
    if worst < 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn key_increment() -> Outcome {
    let spec = SamplingSpec {
        samples: 500,
        seed: 7,
        ..SamplingSpec::default()
    };
    all_ok(
        [1.0, 2.0, 3.0]
            .into_iter()
            .map(|p| check_key_increment(&spec, p).map_err(|e| e.to_string()).and_then(|r| from_report(&r)))
            .collect(),
    )
}

fn bilinear_free() -> Outcome {
    let spec = SamplingSpec {
        samples: 50,
        octaves: 4,
        seed: 8,
        ..SamplingSpec::default()
    };
    let r = check_bilinear_free(&spec).map_err(|e| e.to_string())?;
    let spreads: Vec<String> = r
        .table
        .iter()
        .filter_map(|row| row.get("max_over_min").map(|v| format!("{} {v:.3}", row.label)))
        .collect();
    from_report(&r).map(|s| format!("{s}; {}", spreads.join(", "))).map_err(|s| format!("{s}; {}", spreads.join(", ")))
}

fn bilinear_atomic() -> Outcome {
    let spec = SamplingSpec {
        samples: 50,
        octaves: 4,
        seed: 9,
        ..SamplingSpec::default()
    };
    let r = check_bilinear_atomic(&spec, 2.0, 2.0).map_err(|e| e.to_string())?;
    let fit = r.slope.ok_or("no slope fitted")?;
    let msg = format!("slope {:.4} residual {:.4}", fit.slope, fit.residual);
    match from_report(&r) {
        Ok(s) if fit.slope <= 0.3 => Ok(format!("{msg}; {s}")),
        Ok(s) | Err(s) => Err(format!("{msg}; {s}")),
    }
}

fn resonance() -> Outcome {
    let spec = SamplingSpec {
        samples: 10_000,
        octaves: 3,
        seed: 10,
        ..SamplingSpec::default()
    };
    check_resonance(&spec).map_err(|e| e.to_string()).and_then(|r| from_report(&r))
}

fn besov() -> Outcome {
    let spec = SamplingSpec {
        samples: 50,
        octaves: 4,
        seed: 11,
        ..SamplingSpec::default()
    };
    all_ok(
        [2.0, 3.0]
            .into_iter()
            .map(|p| check_besov(&spec, p).map_err(|e| e.to_string()).and_then(|r| from_report(&r)))
            .collect(),
    )
}

fn picard_vs_evolve() -> Outcome {
    let grid = Grid::new(2, 32, 2.0 * PI).map_err(|e| e.to_string())?;
    let data = CauchyData::small_random(grid, 1e-2, 4.0, &mut trial_rng(12, 0)).map_err(|e| e.to_string())?;
    let time = TimeGrid::new(0.0, 0.01, 51).map_err(|e| e.to_string())?;
    let run = picard_iterate(&data, time, 5, 1.0).map_err(|e| e.to_string())?;
    let tr = evolve(&data, 0.5, 1e-3, Scheme::Rk4, 10).map_err(|e| e.to_string())?;
    if tr.phi.time().samples() != time.samples() {
        return Err("recorded samples do not match the Picard window".into());
    }
    let diff = run.iterate.phi.sub(&tr.phi).map_err(|e| e.to_string())?.sup_norm();
    let q = run.contraction_factor();
    let msg = format!(
        "L-inf L2 difference {diff:.3e}, contraction factor {q:.3e}, differences {:?}",
        run.differences.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()
    );
    if diff < 1e-4 && q < 1.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("equator-map oracle", equator_oracle),
        ("null identity", null_identity),
        ("energy and constraint conservation", conservation),
        ("variation DP exactness", dp_exactness),
        ("duality inequality", duality),
        ("modulation conjugation identity", modulation_routes),
        ("key increment inequality", key_increment),
        ("bilinear free-wave boundedness", bilinear_free),
        ("atomic bilinear slope", bilinear_atomic),
        ("resonance geometry", resonance),
        ("Besov equivalence", besov),
        ("Picard/evolve cross-validation", picard_vs_evolve),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("{:02} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("PASS [{label}] ({secs:.1}s) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL [{label}] ({secs:.1}s) {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
