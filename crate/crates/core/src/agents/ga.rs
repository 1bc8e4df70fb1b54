//! Canonical generational GA over fixed-length command sequences.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sub_seed, AgentError};
use crate::env::{Action, Environment, RunTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub sequence_length: usize,
    pub generations: usize,
    /// Per-gene probability; `None` means 1 / sequence_length.
    pub mutation_rate: Option<f64>,
    pub crossover_rate: f64,
    pub elitism_count: usize,
    pub tournament_size: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            sequence_length: 100,
            generations: 150,
            mutation_rate: None,
            crossover_rate: 0.9,
            elitism_count: 2,
            tournament_size: 3,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Config(m.into()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.elitism_count >= self.population_size {
            return bad("elitism_count must be below population_size");
        }
        if self.sequence_length == 0 || self.tournament_size == 0 {
            return bad("sequence_length and tournament_size must be positive");
        }
        let rates = [self.crossover_rate, self.mutation_rate()];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return bad("rates must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn mutation_rate(&self) -> f64 {
        self.mutation_rate.unwrap_or(1.0 / self.sequence_length as f64)
    }
}

#[derive(Debug, Clone)]
pub struct GaResult {
    pub best: Vec<Action>,
    pub best_fitness: f64,
    pub best_trace: RunTrace,
    /// Best fitness of the initial population, then after each generation.
    pub history: Vec<f64>,
}

type Genome = Vec<u16>;

/// Fitness is the cumulative reward of the sequence, capped at
/// `sequence_length` atomic steps.
pub fn run_ga(env: &Environment, version: &str, config: &GaConfig) -> Result<GaResult, AgentError> {
    config.validate()?;
    let vocab = env.vocabulary(version)?;
    let n = config.sequence_length;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, 0x6A));
    let decode = |g: &Genome| -> Vec<Action> { g.iter().map(|&i| vocab[i as usize].clone()).collect() };
    let mut cache: HashMap<Genome, f64> = HashMap::new();
    let evaluate = |pop: &[Genome], cache: &mut HashMap<Genome, f64>| -> Result<Vec<f64>, AgentError> {
        let fresh: Vec<&Genome> = {
            let mut seen = std::collections::HashSet::new();
            pop.iter().filter(|g| !cache.contains_key(*g) && seen.insert(*g)).collect()
        };
        let scored: Vec<Result<f64, AgentError>> = fresh
            .par_iter()
            .map(|g| Ok(env.score(version, config.seed, &decode(g), n)?))
            .collect();
        for (g, s) in fresh.into_iter().zip(scored) {
            cache.insert(g.clone(), s?);
        }
        Ok(pop.iter().map(|g| cache[g]).collect())
    };

    let mut pop: Vec<Genome> = (0..config.population_size)
        .map(|_| (0..n).map(|_| rng.gen_range(0..vocab.len()) as u16).collect())
        .collect();
    let mut fit = evaluate(&pop, &mut cache)?;
    let mut history = vec![max(&fit)];
    let mutation = config.mutation_rate();

    for _ in 0..config.generations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]).then(a.cmp(&b)));
        let mut next: Vec<Genome> = order[..config.elitism_count].iter().map(|&i| pop[i].clone()).collect();
        while next.len() < config.population_size {
            let p1 = tournament(&fit, config.tournament_size, &mut rng);
            let p2 = tournament(&fit, config.tournament_size, &mut rng);
            let mut child = if rng.gen_bool(config.crossover_rate) && n > 1 {
                let cut = rng.gen_range(1..n);
                pop[p1][..cut].iter().chain(&pop[p2][cut..]).copied().collect()
            } else {
                pop[p1].clone()
            };
            for gene in child.iter_mut() {
                if rng.gen_bool(mutation) {
                    *gene = rng.gen_range(0..vocab.len()) as u16;
                }
            }
            next.push(child);
        }
        pop = next;
        fit = evaluate(&pop, &mut cache)?;
        history.push(max(&fit));
    }

    let best_idx = (0..pop.len())
        .max_by(|&a, &b| fit[a].total_cmp(&fit[b]).then(b.cmp(&a)))
        .expect("non-empty population");
    let best = decode(&pop[best_idx]);
    let best_trace = env.execute(version, config.seed, &best, n)?;
    Ok(GaResult {
        best,
        best_fitness: fit[best_idx],
        best_trace,
        history,
    })
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn tournament(fit: &[f64], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.gen_range(0..fit.len());
    for _ in 1..size {
        let c = rng.gen_range(0..fit.len());
        if fit[c] > fit[best] || (fit[c] == fit[best] && c < best) {
            best = c;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvName;

    fn small(seed: u64, generations: usize) -> GaConfig {
        GaConfig {
            population_size: 10,
            sequence_length: 20,
            generations,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn zero_generations_is_initial_best() {
        let env = Environment::load(EnvName::OvercookedLite).unwrap();
        let r = run_ga(&env, "1.2.0", &small(1, 0)).unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.history[0], r.best_fitness);
        assert!((r.best_trace.cumulative_reward - r.best_fitness).abs() < 1e-9);
    }

    #[test]
    fn elitism_keeps_best() {
        let env = Environment::load(EnvName::OvercookedLite).unwrap();
        let r = run_ga(&env, "1.2.0", &small(2, 15)).unwrap();
        assert_eq!(r.history.len(), 16);
        assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
        let again = run_ga(&env, "1.2.0", &small(2, 15)).unwrap();
        assert_eq!(r.history, again.history);
        assert_eq!(r.best, again.best);
    }

    #[test]
    fn config_validation() {
        let mut c = GaConfig::default();
        assert!(c.validate().is_ok());
        c.elitism_count = 50;
        assert!(c.validate().is_err());
        c = GaConfig { population_size: 1, ..Default::default() };
        assert!(c.validate().is_err());
        c = GaConfig { crossover_rate: 1.5, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
