use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sub_seed, AgentError};
use crate::env::{Action, Environment, RunTrace};

/// `n` commands drawn uniformly from the version's vocabulary.
pub fn random_commands(env: &Environment, version: &str, seed: u64, n: usize) -> Result<Vec<Action>, AgentError> {
    let vocab = env.vocabulary(version)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 0x5EED));
    Ok((0..n).map(|_| vocab.choose(&mut rng).expect("non-empty vocabulary").clone()).collect())
}

/// Uniformly random play, capped at `max_steps` atomic steps.
pub fn run_random(env: &Environment, version: &str, seed: u64, max_steps: usize) -> Result<RunTrace, AgentError> {
    if max_steps == 0 {
        return Err(AgentError::Config("max_steps must be positive".into()));
    }
    let commands = random_commands(env, version, seed, max_steps)?;
    Ok(env.execute(version, seed, &commands, max_steps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvName;

    #[test]
    fn bounded_and_repeatable() {
        let env = Environment::load(EnvName::OvercookedLite).unwrap();
        let v = env.base_version().to_string();
        assert_eq!(run_random(&env, &v, 3, 1).unwrap().len(), 1);
        let a = run_random(&env, &v, 3, 100).unwrap();
        assert!(a.len() <= 100);
        assert_eq!(a, run_random(&env, &v, 3, 100).unwrap());
        assert_ne!(a, run_random(&env, &v, 4, 100).unwrap());
        assert!(run_random(&env, &v, 3, 0).is_err());
    }
}
