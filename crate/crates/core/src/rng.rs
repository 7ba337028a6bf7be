//! Splittable, counter-based random streams.
//!
//! Every run draws from ChaCha8 streams keyed by `(master seed, a0, run index)`
//! with the [`StreamRole`] selecting the ChaCha stream id. Streams are
//! independent of the order in which runs execute, which keeps parallel and
//! sequential schedules bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamRole {
    /// Initial sample and the initial test's noise; shared by paired runs.
    Init = 0,
    SightNoise = 1,
    SightChoice = 2,
    RcNoise = 3,
    RcChoice = 4,
    Family = 5,
    Aux = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master: u64,
    pub a0: u64,
    pub run: u64,
}

impl StreamKey {
    pub fn new(master: u64, a0: usize, run: u64) -> Self {
        Self {
            master,
            a0: a0 as u64,
            run,
        }
    }

    pub fn stream(&self, role: StreamRole) -> StreamRng {
        let mut seed = [0u8; 32];
        let mut state = splitmix64(self.master ^ 0x6a09_e667_f3bc_c908);
        for (i, word) in [self.a0, self.run, 0x5151_5151, 0xa5a5_a5a5].iter().enumerate() {
            state = splitmix64(state ^ splitmix64(*word ^ i as u64));
            seed[i * 8..(i + 1) * 8].copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(role as u64);
        rng
    }
}

/// Streams for a single standalone run seeded directly.
pub fn stream(seed: u64, role: StreamRole) -> StreamRng {
    StreamKey::new(seed, 0, 0).stream(role)
}

/// The three streams one sampler run consumes.
///
/// `init` draws the initial sample and the initial test's noise, so paired
/// runs built from the same key see the same set, order and first answer.
#[derive(Debug, Clone)]
pub struct RunStreams {
    pub init: StreamRng,
    pub noise: StreamRng,
    pub choice: StreamRng,
}

impl RunStreams {
    pub fn sight(key: &StreamKey) -> Self {
        Self {
            init: key.stream(StreamRole::Init),
            noise: key.stream(StreamRole::SightNoise),
            choice: key.stream(StreamRole::SightChoice),
        }
    }

    pub fn rc(key: &StreamKey) -> Self {
        Self {
            init: key.stream(StreamRole::Init),
            noise: key.stream(StreamRole::RcNoise),
            choice: key.stream(StreamRole::RcChoice),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
