//! Labeled random substreams derived from a single run seed.
//!
//! Every stochastic consumer draws from its own stream keyed by
//! `(seed, label)`, so adding a consumer never shifts the draws seen by
//! another one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator behind every substream.
pub type SimRng = ChaCha8Rng;

pub const PAIRING: &str = "pairing";
pub const INIT: &str = "init";
pub const ADOPTION: &str = "adoption";
pub const FALLBACK: &str = "fallback";

/// Stream label for the policy of agent `agent_id`.
pub fn policy_label(agent_id: usize) -> String {
    format!("policy/{agent_id}")
}

/// Returns the deterministic stream for `(seed, stream_label)`.
pub fn derive_rng(seed: u64, stream_label: &str) -> SimRng {
    let mut hasher = Sha256::new();
    hasher.update(b"sign-game/substream/v1\0");
    hasher.update(seed.to_le_bytes());
    hasher.update(stream_label.as_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(key)
}
