//! Trial fan-out for Monte Carlo campaigns and circuit sampling.
//!
//! Trial `i` of a campaign with master seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` with its stream set to `i`. Results are
//! therefore identical whether trials run on the rayon pool or sequentially,
//! and in the same order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for trial `index` of a campaign seeded with `master_seed`.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Runs `trials` independent trials on the current thread.
pub fn map_trials_sequential<T, F>(trials: usize, master_seed: u64, f: F) -> Vec<T>
where
    F: Fn(usize, &mut ChaCha8Rng) -> T,
{
    (0..trials).map(|i| f(i, &mut trial_rng(master_seed, i as u64))).collect()
}

/// Runs `trials` independent trials on the rayon pool.
#[cfg(feature = "parallel")]
pub fn map_trials_parallel<T, F>(trials: usize, master_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..trials).into_par_iter().map(|i| f(i, &mut trial_rng(master_seed, i as u64))).collect()
}

/// Parallel when the `parallel` feature is on, sequential otherwise.
pub fn map_trials<T, F>(trials: usize, master_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_trials_parallel(trials, master_seed, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_trials_sequential(trials, master_seed, f)
    }
}
