//! Seeded, schedule-independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_150_601;

/// Independent stream `index` of the generator family for `seed`.
///
/// Trial `i` of any Monte Carlo run draws from `stream(seed, i)`, so results
/// do not depend on how trials are scheduled across threads.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
