//! Deterministic random streams.
//!
//! Every independent unit of work (a dyad in a simulation, a dyad's Gibbs
//! updates, the global penalty update) draws from its own ChaCha stream keyed
//! by `(seed, purpose, index)`, so results never depend on how work is spread
//! over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Simulate,
    GibbsDyad,
    GibbsGlobal,
    Predict,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Simulate => 0x5349_4d55_4c41_5445,
            Purpose::GibbsDyad => 0x4749_4242_5344_5941,
            Purpose::GibbsGlobal => 0x4749_4242_5347_4c42,
            Purpose::Predict => 0x5052_4544_4943_5421,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ purpose.tag()));
    rng.set_stream(index);
    rng
}

/// Laplace (double exponential) draw with location 0 and scale `scale`,
/// density `exp(-|x|/scale) / (2 scale)`.
pub fn laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    if rng.random::<bool>() {
        scale * e
    } else {
        -scale * e
    }
}
