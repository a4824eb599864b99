//! Per-path random streams.
//!
//! Path `i` of an ensemble always draws from stream `i` of a ChaCha8
//! generator keyed by the master seed, so results do not depend on how paths
//! are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type PathRng = ChaCha8Rng;

pub fn path_rng(master_seed: u64, path_index: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

/// Runs `f(path_index, rng)` for every path in parallel and returns the
/// results in path-index order.
pub fn par_map_paths<T, F>(n_paths: usize, master_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut PathRng) -> T + Sync + Send,
{
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(master_seed, i);
            f(i, &mut rng)
        })
        .collect()
}
