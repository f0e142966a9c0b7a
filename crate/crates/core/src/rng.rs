use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream for trial `trial` of a run seeded with `seed`.
///
/// Every trial gets its own ChaCha stream, so the split is stable under
/// any parallel schedule.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
