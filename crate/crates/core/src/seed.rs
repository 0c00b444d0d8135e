//! Reproducible random substreams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A `(master_seed, stream_index)` pair naming one ChaCha8 substream.
///
/// Two specs with the same pair always regenerate the same sequence; distinct
/// stream indices under one master seed select disjoint ChaCha streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Counter-derived child spec: the `index`-th substream under this spec.
    ///
    /// The child depends only on `(self, index)`, never on the order in which
    /// children are requested.
    pub fn child(&self, index: u64) -> SeedSpec {
        let mixed = splitmix64(self.master_seed ^ splitmix64(self.stream_index ^ 0xA076_1D64_78BD_642F));
        SeedSpec {
            master_seed: mixed,
            stream_index: index,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
