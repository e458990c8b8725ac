//! Deterministic RNG streams for parallel replication.
//!
//! Every replicate derives its own generator from a master seed and a list of
//! stream identifiers (scenario id, replicate index, ...). Streams are
//! independent of scheduling order, so parallel runs reproduce serial runs.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a ChaCha stream from a master seed and a path of stream ids.
pub fn derive_rng(master_seed: u64, ids: &[u64]) -> ChaCha12Rng {
    let mut state = master_seed;
    // fold the id path into the splitmix state before expanding the key
    for &id in ids {
        let mixed = splitmix64(&mut state);
        state ^= id.wrapping_mul(0xd605_bbb5_8c8a_bc03) ^ mixed;
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}
