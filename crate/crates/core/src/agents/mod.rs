//! Baseline testing agents and the exploration collector.

mod curiosity;
mod ga;
mod random;

pub use curiosity::{collect_exploration_corpus, run_curiosity, CuriosityConfig, CuriosityRun};
pub use ga::{run_ga, GaConfig, GaResult};
pub use random::{random_commands, run_random};

use thiserror::Error;

use crate::env::EnvError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Derives an independent stream seed (splitmix64 finalizer).
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
