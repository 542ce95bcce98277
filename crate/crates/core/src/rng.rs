//! Seed derivation. Every random stream is a pure function of the global
//! seed, a table id and a stream label, so results never depend on which
//! worker handled a table.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub fn derive_seed(seed: u64, table_id: &str, stream: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((stream.len() as u64).to_le_bytes());
    h.update(stream.as_bytes());
    h.update(table_id.as_bytes());
    h.finalize().into()
}

pub fn derive_rng(seed: u64, table_id: &str, stream: &str) -> StreamRng {
    ChaCha8Rng::from_seed(derive_seed(seed, table_id, stream))
}
