//! The update pipeline: log parsing, graph sync, impact inference, task
//! selection and test generation.

mod delta;
mod describe;
mod generate;
mod impact;
mod update_log;

use thiserror::Error;

pub use delta::{derive_delta, sync_graph, Change, DeltaTools, GraphDelta, RelationIndex, SyncReport};
pub use describe::{mentions, ImpactDescription, KnowledgeLine};
pub use generate::{
    run_pipeline, run_update, AuditRecord, EntryImpact, GenerationMode, PipelineConfig, TestCase, UpdateOutcome,
};
pub use impact::{infer_impact, infer_impact_via, prerequisite_knowledge, select_tasks, ImpactMap, ImpactTools};
pub use update_log::{canonical_version, parse_update_log, EntryCategory, UpdateEntry, UpdateLog};

use crate::env::EnvError;
use crate::kg::KgError;
use crate::llm::GatewayError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("update log has no `## vA -> vB` header")]
    MalformedLog,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("update parser reply disagrees with its tool calls: {0}")]
    DeltaInconsistent(String),
    #[error("impact inferencer answer for `{item}` differs from the traversal (missing {missing:?}, extra {extra:?})")]
    ImpactMismatch {
        item: String,
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("generated step `{step}` is not an available action")]
    VocabularyViolation { step: String },
    #[error(transparent)]
    Graph(#[from] KgError),
    #[error(transparent)]
    Env(#[from] EnvError),
}
