//! Chat-completion gateway, prompt templates and output contracts.

mod contract;
pub mod mock;
mod provider;
mod session;
mod templates;

pub use contract::{parse_contract, Payload, RawTriple, SchemaError, TestCasePayload, TripleOp};
pub use provider::{ChatMessage, ChatProvider, HttpProvider, ProviderConfig, ProviderError, Role};
pub use session::{
    describe_tools, parse_tool_block, tool_block, Completion, Gateway, ParamKind, ParamSpec, Reply, ToolHost,
    ToolInvocation, ToolSpec, REASK, TOOL_RESULTS_PREFIX,
};
pub use templates::{render, unrender, TemplateId};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("unbound placeholder `{{{0}}}`")]
    UnboundPlaceholder(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("tool-call rounds exceeded the cap of {0}")]
    ToolRounds(usize),
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("bad arguments for tool `{tool}`: {message}")]
    ToolArguments { tool: String, message: String },
}
