//! Counter-based random streams.
//!
//! Every random draw of a sweep comes from a ChaCha8 stream whose key depends
//! on `(seed, purpose, snr_index)` and whose stream id is the block index. A
//! block therefore sees the same numbers no matter which worker runs it or in
//! which order, which is what makes sweeps independent of the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Each purpose gets an independent key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Bits,
    Channel,
    PilotNoise,
    DataNoise,
    TrainingBits,
    TrainingChannel,
    TrainingPilotNoise,
    TrainingDataNoise,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Bits => 1,
            Purpose::Channel => 2,
            Purpose::PilotNoise => 3,
            Purpose::DataNoise => 4,
            Purpose::TrainingBits => 11,
            Purpose::TrainingChannel => 12,
            Purpose::TrainingPilotNoise => 13,
            Purpose::TrainingDataNoise => 14,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The stream for one `(seed, purpose, snr_index, block)` tuple.
pub fn block_stream(seed: u64, purpose: Purpose, snr_index: usize, block: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    let words = [
        splitmix64(&mut state),
        splitmix64(&mut state) ^ purpose.tag().wrapping_mul(0xD6E8_FEB8_6659_FD93),
        splitmix64(&mut state) ^ (snr_index as u64).wrapping_mul(0xA076_1D64_78BD_642F),
        splitmix64(&mut state),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(block);
    rng
}
