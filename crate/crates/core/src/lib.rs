//! Knowledge-graph guided incremental playtesting.
//!
//! The crate keeps a game knowledge graph across versions, turns game logs
//! and natural-language update logs into graph facts, infers the impact of
//! each update by bounded traversal, generates targeted test cases and runs
//! them in two built-in deterministic game simulators.

pub mod agents;
pub mod env;
pub mod harness;
pub mod extract;
pub mod kg;
pub mod llm;
pub mod pipeline;
