//! Seeded random streams.
//!
//! Every consumer draws from its own ChaCha stream keyed by the run seed, so
//! adding users or changing a policy never shifts anyone else's samples.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Stream {
    UserPlacement = 1,
    UserArrivals = 2,
    Policy = 3,
}

pub fn substream(seed: u64, stream: Stream, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 56) | (index & ((1 << 56) - 1)));
    rng
}

/// Exponential sample with the given mean by inversion of `u` in [0, 1).
pub fn exponential_from_uniform(u: f64, mean: f64) -> f64 {
    -mean * libm::log(1.0 - u)
}

pub fn sample_interarrival<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    exponential_from_uniform(rng.gen::<f64>(), mean)
}
