//! Experiment driver, metrics and reports.

pub mod archive;
pub mod config;
pub mod experiment;
pub mod metrics;
pub mod report;

pub use archive::write_archive;
pub use config::{ExperimentConfig, ExplorationConfig, LlmConfig, Method, RandomConfig};
pub use experiment::{explore_graph, make_gateway, run_experiment, seed_graph, trace_digest, Experiment, ExperimentResult, RunRecord, SeedResult};
pub use metrics::{SeedMetrics, Summary, TraceStats};

use thiserror::Error;

use crate::agents::AgentError;
use crate::env::EnvError;
use crate::kg::KgError;
use crate::pipeline::PipelineError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("bad configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Graph(#[from] KgError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Json(_) => 2,
            HarnessError::Agent(AgentError::Config(_)) => 2,
            HarnessError::Graph(KgError::InvalidPolicy(_)) => 2,
            HarnessError::Pipeline(PipelineError::Graph(KgError::InvalidPolicy(_))) => 2,
            _ => 3,
        }
    }
}
