//! Count-based novelty explorer and the exploration corpus collector.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sub_seed, AgentError};
use crate::env::{Action, EnvState, Environment, RunTrace};
use crate::extract::LogEvent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CuriosityConfig {
    /// Novelty bonus scale.
    pub beta: f64,
    pub extrinsic_weight: f64,
    /// Probability of a uniformly random command instead of the greedy one.
    pub epsilon: f64,
    /// Atomic step budget.
    pub max_steps: usize,
    /// Steps per evaluation interval.
    pub interval: usize,
    /// Stop after this many intervals without a new state.
    pub stagnation: usize,
}

impl Default for CuriosityConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            extrinsic_weight: 1.0,
            epsilon: 0.1,
            max_steps: 2000,
            interval: 1000,
            stagnation: 7,
        }
    }
}

impl CuriosityConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.beta > 0.0) {
            return Err(AgentError::Config("beta must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(AgentError::Config("epsilon must lie in [0, 1]".into()));
        }
        if self.max_steps == 0 || self.interval == 0 || self.stagnation == 0 {
            return Err(AgentError::Config("max_steps, interval and stagnation must be positive".into()));
        }
        Ok(())
    }

    pub fn bonus(&self, visits: u32) -> f64 {
        self.beta / (1.0 + visits as f64).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct CuriosityRun {
    pub trace: RunTrace,
    pub commands: Vec<Action>,
    /// Distinct states seen after each atomic step.
    pub unique_after_step: Vec<usize>,
    pub visits: HashMap<u64, u32>,
}

impl CuriosityRun {
    pub fn unique_states(&self) -> usize {
        self.visits.len()
    }
}

/// Advances `state` through one command; returns the reward and the keys of
/// the states passed through.
fn play(env: &Environment, state: &mut EnvState, cmd: &Action, budget: usize) -> (f64, Vec<u64>) {
    let mut reward = 0.0;
    let mut keys = Vec::new();
    for atomic in env.expand(state, cmd).into_iter().take(budget) {
        reward += env.step(state, &atomic).reward;
        keys.push(state.view.novelty_key());
    }
    (reward, keys)
}

/// Greedy one-step lookahead on extrinsic reward plus a count-based bonus.
pub fn run_curiosity(
    env: &Environment,
    version: &str,
    config: &CuriosityConfig,
    seed: u64,
) -> Result<CuriosityRun, AgentError> {
    config.validate()?;
    let vocab = env.vocabulary(version)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 0xC0));
    let mut state = env.reset(version, seed)?;
    let mut visits: HashMap<u64, u32> = HashMap::from([(state.view.novelty_key(), 1)]);
    let mut commands = Vec::new();
    let mut unique_after_step = Vec::new();
    let mut steps = 0;
    let mut last_unique = visits.len();
    let mut stale_intervals = 0;
    let mut next_check = config.interval;

    while steps < config.max_steps {
        let budget = config.max_steps - steps;
        let chosen = if rng.gen_bool(config.epsilon) {
            vocab.choose(&mut rng).expect("non-empty vocabulary").clone()
        } else {
            let mut best: Vec<&Action> = Vec::new();
            let mut best_score = f64::NEG_INFINITY;
            for cmd in &vocab {
                let mut probe = state.clone();
                let (reward, keys) = play(env, &mut probe, cmd, budget);
                let novelty = keys.last().map_or(0.0, |k| config.bonus(visits.get(k).copied().unwrap_or(0)));
                let score = config.extrinsic_weight * reward + novelty;
                if score > best_score + 1e-12 {
                    best_score = score;
                    best = vec![cmd];
                } else if (score - best_score).abs() <= 1e-12 {
                    best.push(cmd);
                }
            }
            (*best.choose(&mut rng).expect("some candidate")).clone()
        };
        let (_, keys) = play(env, &mut state, &chosen, budget);
        for k in keys {
            *visits.entry(k).or_insert(0) += 1;
            unique_after_step.push(visits.len());
            steps += 1;
        }
        commands.push(chosen);
        if steps >= next_check {
            next_check += config.interval;
            if visits.len() > last_unique {
                last_unique = visits.len();
                stale_intervals = 0;
            } else {
                stale_intervals += 1;
                if stale_intervals >= config.stagnation {
                    break;
                }
            }
        }
    }
    let trace = env.execute(version, seed, &commands, steps)?;
    Ok(CuriosityRun {
        trace,
        commands,
        unique_after_step,
        visits,
    })
}

/// Task names, then each seed's curiosity run, then each task's reference
/// walkthrough, all at `version`.
pub fn collect_exploration_corpus(
    env: &Environment,
    version: &str,
    config: &CuriosityConfig,
    seeds: &[u64],
) -> Result<Vec<LogEvent>, AgentError> {
    if seeds.is_empty() {
        return Ok(Vec::new());
    }
    let mut events: Vec<LogEvent> = env.catalog.tasks.iter().map(|t| LogEvent::task(&t.name)).collect();
    for &seed in seeds {
        let run = run_curiosity(env, version, config, seed)?;
        events.extend(run.trace.events().cloned());
    }
    for task in &env.catalog.tasks {
        let trace = env.execute_with(version, seeds[0], &task.walkthrough, usize::MAX, false)?;
        events.extend(trace.events().cloned());
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::run_random;
    use crate::env::EnvName;

    fn short() -> CuriosityConfig {
        CuriosityConfig {
            max_steps: 120,
            interval: 40,
            ..Default::default()
        }
    }

    #[test]
    fn unique_count_monotone_and_repeatable() {
        let env = Environment::load(EnvName::Craftworld).unwrap();
        let r = run_curiosity(&env, "1.0.0", &short(), 5).unwrap();
        assert!(r.unique_after_step.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r.trace.len(), r.unique_after_step.len());
        let again = run_curiosity(&env, "1.0.0", &short(), 5).unwrap();
        assert_eq!(r.trace, again.trace);
    }

    #[test]
    fn bonus_decreases_with_visits() {
        let c = CuriosityConfig::default();
        assert!((0..50).all(|n| c.bonus(n + 1) < c.bonus(n)));
    }

    #[test]
    fn explores_more_than_random() {
        let env = Environment::load(EnvName::Craftworld).unwrap();
        for seed in 0..3 {
            let r = run_curiosity(&env, "1.0.0", &short(), seed).unwrap();
            let rand = run_random(&env, "1.0.0", seed, r.trace.len()).unwrap();
            let rand_unique: std::collections::HashSet<u64> =
                rand.steps.iter().map(|s| s.state.novelty_key()).collect();
            assert!(r.unique_states() > rand_unique.len() + 1);
        }
    }

    #[test]
    fn corpus_indexes_increase_per_run() {
        let env = Environment::load(EnvName::OvercookedLite).unwrap();
        assert!(collect_exploration_corpus(&env, "1.2.0", &short(), &[]).unwrap().is_empty());
        let run = run_curiosity(&env, "1.2.0", &short(), 1).unwrap();
        let idx: Vec<u64> = run.trace.events().filter_map(|e| e.step_index).collect();
        assert!(idx.windows(2).all(|w| w[1] >= w[0]));
        assert!(idx.first() == Some(&1));
    }
}
