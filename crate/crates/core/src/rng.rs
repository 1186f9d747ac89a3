//! Seeded random streams.
//!
//! Every sampler in the crate draws from ChaCha8 seeded with the run seed,
//! with an independent stream index per consumer, so adding a consumer never
//! perturbs the numbers another one sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream indices used inside the crate.
pub mod streams {
    pub const INSTANCE: u64 = 1;
    pub const CONSTANTS: u64 = 2;
    pub const VARIATION: u64 = 3;
    pub const SADDLE_CHECK: u64 = 4;
    pub const VI_RESIDUAL: u64 = 5;
    pub const VERIFY: u64 = 6;
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
