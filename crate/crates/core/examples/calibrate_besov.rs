use std::f64::consts::PI;
use wavelab_core::rng::trial_rng;
use wavelab_core::variation::random::{atom, band_limited};
use wavelab_core::variation::{up_lower_bound, up_upper_bound};
use wavelab_core::{Grid, SpaceTimeField, TimeGrid};
fn main() {
    let grid = Grid::new(1, 8, 2.0 * PI).unwrap();
    let mut worst: f64 = 0.0;
    for (dt, m) in [(1.0, 32), (0.1, 64), (0.05, 128)] {
        let time = TimeGrid::new(0.0, dt, m).unwrap();
        for k in 0..200u64 {
            let mut rng = trial_rng(k, 0);
            let u = if k % 2 == 0 {
                atom(grid, time, 1 + (k as usize % 9), 2.0, &mut rng).sample()
            } else {
                let s = (0..m).map(|_| band_limited(grid, 1, 4.0, &mut rng)).collect();
                SpaceTimeField::new(time, s).unwrap()
            };
            let lo = up_lower_bound(&u, 2.0, 64, k).unwrap();
            let (sum, _) = up_upper_bound(&u, 2.0).unwrap();
            worst = worst.max(lo / sum);
        }
        println!("dt {dt} M {m}: max lower/sum so far {worst:.4}");
    }
}
