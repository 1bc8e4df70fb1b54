//! Runs one method on one environment across seeds.

use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ExplorationConfig, LlmConfig, Method};
use super::metrics::{SeedMetrics, Summary, TraceStats};
use super::HarnessError;
use crate::agents::{collect_exploration_corpus, run_curiosity, run_ga, run_random, sub_seed, GaConfig};
use crate::env::{EnvName, Environment, RunTrace};
use crate::extract::{build_graph, ExtractionBatch};
use crate::kg::{load_graph, KnowledgeGraph};
use crate::llm::mock::MockProvider;
use crate::llm::{Gateway, HttpProvider};
use crate::pipeline::{run_pipeline, GenerationMode, TestCase, UpdateLog, UpdateOutcome};

pub fn make_gateway(llm: &LlmConfig, env: EnvName) -> Gateway {
    match llm {
        LlmConfig::Mock => Gateway::new(Arc::new(MockProvider::for_env(env))),
        LlmConfig::Http(p) => Gateway::new(Arc::new(HttpProvider::new(p.clone()))),
    }
}

/// Explores the base version and extracts a graph from what was seen.
pub fn explore_graph(
    env: &Environment,
    config: &ExplorationConfig,
    gateway: Option<&Gateway>,
) -> Result<(KnowledgeGraph, ExtractionBatch), HarnessError> {
    let version = env.base_version().to_string();
    let corpus = collect_exploration_corpus(env, &version, &config.curiosity, &config.seeds)?;
    let gateway = gateway.filter(|_| config.use_llm);
    Ok(build_graph(env.name, &version, gateway, &corpus))
}

pub fn seed_graph(env: &Environment, config: &ExperimentConfig, gateway: &Gateway) -> Result<KnowledgeGraph, HarnessError> {
    match &config.seed_graph {
        Some(path) => Ok(load_graph(BufReader::new(File::open(path)?))?),
        None => Ok(explore_graph(env, &config.exploration, Some(gateway))?.0),
    }
}

pub fn trace_digest(trace: &RunTrace) -> String {
    hex::encode(Sha256::digest(trace.to_jsonl().as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Test-case id, or `u<n>-<task>` for a baseline run.
    pub id: String,
    pub update: u8,
    pub version: String,
    pub stats: TraceStats,
    pub reward: f64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub metrics: SeedMetrics,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub env: EnvName,
    pub method: Method,
    /// `mock`, a provider model id, or `none` for baselines.
    pub gateway: String,
    pub summary: Summary,
    pub seeds: Vec<SeedResult>,
}

/// Everything a run produced. Only `result` is needed for reports.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub result: ExperimentResult,
    pub outcomes: Vec<UpdateOutcome>,
    /// Per seed, in `SeedResult::runs` order.
    pub traces: Vec<Vec<RunTrace>>,
}

impl Experiment {
    pub fn tests(&self) -> impl Iterator<Item = &TestCase> {
        self.outcomes.iter().flat_map(|o| o.tests.iter())
    }
}

struct Job {
    id: String,
    update: u8,
    version: String,
    trace: RunTrace,
}

/// Update numbers and logs selected by the config.
fn selected_updates<'e>(env: &'e Environment, cfg: &ExperimentConfig) -> Vec<(u8, &'e UpdateLog)> {
    env.catalog
        .updates
        .iter()
        .enumerate()
        .map(|(i, log)| (u8::try_from(i + 1).expect("fewer than 256 updates"), log))
        .filter(|(n, _)| cfg.updates.is_empty() || cfg.updates.contains(n))
        .collect()
}

/// One run per catalog task on each selected update. The agents are
/// task-agnostic, so tasks only separate the runs' random streams.
fn baseline_jobs(env: &Environment, cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Job>, HarnessError> {
    let mut out = Vec::new();
    for (update, log) in selected_updates(env, cfg) {
        let v = &log.to_version;
        for (i, task) in env.catalog.tasks.iter().enumerate() {
            let run_seed = sub_seed(seed, i as u64);
            let trace = match cfg.method {
                Method::Random => run_random(env, v, run_seed, cfg.random.max_steps)?,
                Method::Curiosity => run_curiosity(env, v, &cfg.curiosity, run_seed)?.trace,
                Method::Ga => {
                    let ga = GaConfig {
                        seed: run_seed,
                        ..cfg.ga.clone()
                    };
                    run_ga(env, v, &ga)?.best_trace
                }
                Method::Klpeg | Method::KlpegNoKg => unreachable!("pipeline methods run generated tests"),
            };
            out.push(Job {
                id: format!("u{update}-{}", task.id),
                update,
                version: v.clone(),
                trace,
            });
        }
    }
    Ok(out)
}

fn test_jobs(env: &Environment, tests: &[&TestCase], seed: u64, max_steps: usize) -> Result<Vec<Job>, HarnessError> {
    tests
        .iter()
        .map(|t| {
            let commands = t.steps.iter().map(|s| env.parse_action(s)).collect::<Result<Vec<_>, _>>()?;
            Ok(Job {
                id: t.id.clone(),
                update: t.update,
                version: t.version.clone(),
                trace: env.execute(&t.version, seed, &commands, max_steps)?,
            })
        })
        .collect()
}

/// Runs the configured method. Pipeline methods generate their tests once
/// and replay them under every seed; `gateway` overrides the configured
/// provider.
pub fn run_experiment(cfg: &ExperimentConfig, gateway: Option<&Gateway>) -> Result<Experiment, HarnessError> {
    cfg.validate()?;
    let env = Environment::load(cfg.env)?;
    let outcomes = if cfg.method.uses_pipeline() {
        let owned;
        let gw = match gateway {
            Some(g) => g,
            None => {
                owned = make_gateway(&cfg.llm, cfg.env);
                &owned
            }
        };
        let graph = seed_graph(&env, cfg, gw)?;
        let mut pcfg = cfg.pipeline.clone();
        pcfg.mode = if cfg.method == Method::KlpegNoKg { GenerationMode::NoKg } else { GenerationMode::Klpeg };
        let mut outcomes = run_pipeline(&env, &graph, gw, &pcfg)?.0;
        outcomes.retain(|o| cfg.updates.is_empty() || cfg.updates.contains(&o.update));
        outcomes
    } else {
        Vec::new()
    };
    let tests: Vec<&TestCase> = outcomes.iter().flat_map(|o| o.tests.iter()).collect();
    let per_seed: Vec<(SeedResult, Vec<RunTrace>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let jobs = if cfg.method.uses_pipeline() {
                test_jobs(&env, &tests, seed, cfg.max_steps_per_test)?
            } else {
                baseline_jobs(&env, cfg, seed)?
            };
            let mut runs = Vec::with_capacity(jobs.len());
            let mut traces = Vec::with_capacity(jobs.len());
            for job in jobs {
                runs.push(RunRecord {
                    stats: TraceStats::of(&job.trace, &env.catalog),
                    reward: job.trace.cumulative_reward,
                    digest: trace_digest(&job.trace),
                    id: job.id,
                    update: job.update,
                    version: job.version,
                });
                traces.push(job.trace);
            }
            let stats: Vec<TraceStats> = runs.iter().map(|r| r.stats.clone()).collect();
            let metrics = SeedMetrics::new(seed, &stats);
            Ok((SeedResult { metrics, runs }, traces))
        })
        .collect::<Result<_, HarnessError>>()?;
    let (seeds, traces): (Vec<SeedResult>, Vec<Vec<RunTrace>>) = per_seed.into_iter().unzip();
    let metrics: Vec<SeedMetrics> = seeds.iter().map(|s| s.metrics.clone()).collect();
    Ok(Experiment {
        result: ExperimentResult {
            env: cfg.env,
            method: cfg.method,
            gateway: if cfg.method.uses_pipeline() { cfg.llm.label().to_string() } else { "none".to_string() },
            summary: Summary::over(&metrics, &env.catalog),
            seeds,
        },
        outcomes,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_runs_every_task() {
        let mut cfg = ExperimentConfig::new(EnvName::OvercookedLite, Method::Random);
        cfg.seeds = vec![1];
        cfg.updates = vec![1];
        cfg.random.max_steps = 30;
        let exp = run_experiment(&cfg, None).unwrap();
        let runs = &exp.result.seeds[0].runs;
        assert_eq!(runs.len(), 7);
        assert_eq!(exp.traces[0].len(), 7);
        assert!(runs.iter().all(|r| r.stats.steps <= 30 && r.digest.len() == 64 && r.version == "1.2.1"));
        assert_eq!(exp.result.summary.seeds, 1);
        assert!(exp.outcomes.is_empty());
    }
}
