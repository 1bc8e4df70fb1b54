//! Triple extraction from gameplay logs.
//!
//! Three extractors share one output type: regex rules for structured log
//! lines, compiled-in script hooks for state-aware checks, and the LLM
//! extractor for free-form UI text.

mod event;
mod rules;
mod scripts;

pub use event::{LogEvent, SourceKind, StateDiff};
pub use rules::{rule_extract, Rule, RuleConfig};
pub use scripts::{hooks_for, script_extract, CraftworldHooks, OvercookedHooks, ScriptHooks};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EnvName;
use crate::kg::{KgError, KnowledgeGraph, NodeKind, RelationCategory, RelationLabel, Triple};
use crate::llm::{Gateway, GatewayError, Payload, TemplateId};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("extractor config: {0}")]
    Config(String),
    #[error("script failure: {0}")]
    Script(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// A triple plus the node kinds its endpoints should take when inserted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedTriple {
    pub triple: Triple,
    pub head_kind: NodeKind,
    pub tail_kind: NodeKind,
}

impl ExtractedTriple {
    pub fn insert_into(&self, graph: &mut KnowledgeGraph) -> Result<bool, KgError> {
        graph.insert_triple(&self.triple, self.head_kind, self.tail_kind)
    }
}

/// Endpoint kinds implied by a relation category, used for LLM output where
/// the model names no kinds. Existing graph kinds take precedence at merge.
pub fn default_kinds(category: RelationCategory) -> (NodeKind, NodeKind) {
    use RelationCategory::*;
    match category {
        SceneTransition => (NodeKind::Scene, NodeKind::Scene),
        UiActionMapping => (NodeKind::Action, NodeKind::Event),
        TaskDependency => (NodeKind::Task, NodeKind::Element),
        EventElementRelation => (NodeKind::Event, NodeKind::Element),
        ActionElementRelation => (NodeKind::Action, NodeKind::Element),
        GameElementInteraction | CausalTransition => (NodeKind::Element, NodeKind::Element),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Extractor {
    Rule,
    Script,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenanced {
    #[serde(flatten)]
    pub triple: ExtractedTriple,
    pub extractor: Extractor,
    pub event_index: usize,
}

#[derive(Debug, Default)]
pub struct ExtractionBatch {
    pub triples: Vec<Provenanced>,
    /// Per-event failures; the batch keeps going past them.
    pub errors: Vec<(usize, ExtractError)>,
}

impl ExtractionBatch {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// One line per triple: `index<TAB>extractor<TAB>category<TAB>(h, r, t)`.
    pub fn golden_lines(&self) -> String {
        let mut out = String::new();
        for p in &self.triples {
            let t = &p.triple.triple;
            out.push_str(&format!("{}\t{:?}\t{:?}\t{}\n", p.event_index, p.extractor, t.relation.category, t));
        }
        out
    }

    pub fn categories(&self) -> std::collections::BTreeSet<RelationCategory> {
        self.triples.iter().map(|p| p.triple.triple.relation.category).collect()
    }

    /// Inserts every triple. Kind conflicts are logged and skipped.
    pub fn merge_into(&self, graph: &mut KnowledgeGraph) -> usize {
        let mut added = 0;
        for p in &self.triples {
            let t = &p.triple;
            let hk = graph.kind_of(&t.triple.head).unwrap_or(t.head_kind);
            let tk = graph.kind_of(&t.triple.tail).unwrap_or(t.tail_kind);
            let kinds = if p.extractor == Extractor::Llm { (hk, tk) } else { (t.head_kind, t.tail_kind) };
            match graph.insert_triple(&t.triple, kinds.0, kinds.1) {
                Ok(true) => added += 1,
                Ok(false) => {}
                Err(e) => log::warn!("skipping {}: {e}", t.triple),
            }
        }
        added
    }
}

/// Runs the LLM extractor on one natural-language event.
pub fn llm_extract(
    gateway: &Gateway,
    event: &LogEvent,
    vocab: &[RelationLabel],
) -> Result<Vec<ExtractedTriple>, ExtractError> {
    let relations = vocab.iter().map(|r| r.label()).collect::<Vec<_>>().join(", ");
    let bindings = BTreeMap::from([("input_text", event.text.clone()), ("relations", relations)]);
    let reply = gateway.ask(TemplateId::Extractor, &bindings, None)?;
    let Payload::Triples(items) = reply.payload else {
        unreachable!("extractor template parses to triples")
    };
    let by_label: BTreeMap<&str, &RelationLabel> = vocab.iter().map(|r| (r.label(), r)).collect();
    let mut out = Vec::new();
    for item in items {
        let label = crate::kg::normalize_relation(&item.relation);
        let Some(rel) = by_label.get(label.as_str()) else {
            log::warn!("dropping triple with relation `{}` outside the vocabulary", item.relation);
            continue;
        };
        match Triple::parse(&item.head, rel.label(), rel.category, &item.tail) {
            Ok(triple) => {
                let (head_kind, tail_kind) = default_kinds(rel.category);
                out.push(ExtractedTriple { triple, head_kind, tail_kind });
            }
            Err(e) => log::warn!("dropping malformed triple: {e}"),
        }
    }
    Ok(out)
}

/// Fans every event out to the extractors that handle its source.
pub fn extract_all(
    config: &RuleConfig,
    hooks: &dyn ScriptHooks,
    gateway: Option<&Gateway>,
    events: &[LogEvent],
) -> ExtractionBatch {
    let mut batch = ExtractionBatch::default();
    for (i, event) in events.iter().enumerate() {
        let tag = |triples: Vec<ExtractedTriple>, ex: Extractor| {
            triples.into_iter().map(move |triple| Provenanced {
                triple,
                extractor: ex,
                event_index: i,
            })
        };
        batch.triples.extend(tag(rule_extract(config, event), Extractor::Rule));
        if matches!(event.source, SourceKind::GameLog | SourceKind::StateDiff) {
            match script_extract(hooks, event) {
                Ok(ts) => batch.triples.extend(tag(ts, Extractor::Script)),
                Err(e) => batch.errors.push((i, e)),
            }
        }
        if let (SourceKind::UiPrompt, Some(gw)) = (event.source, gateway) {
            match llm_extract(gw, event, &config.relations) {
                Ok(ts) => batch.triples.extend(tag(ts, Extractor::Llm)),
                Err(e) => batch.errors.push((i, e)),
            }
        }
    }
    batch
}

/// Extracts from `events` and merges the result into a fresh graph.
pub fn build_graph(
    env: EnvName,
    version: &str,
    gateway: Option<&Gateway>,
    events: &[LogEvent],
) -> (KnowledgeGraph, ExtractionBatch) {
    let config = RuleConfig::shipped(env);
    let batch = extract_all(&config, hooks_for(env).as_ref(), gateway, events);
    let mut graph = KnowledgeGraph::new(version);
    batch.merge_into(&mut graph);
    (graph, batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvName;

    fn oc_rules() -> RuleConfig {
        RuleConfig::from_json(include_str!("../../data/overcooked/extractor_rules.json")).unwrap()
    }

    #[test]
    fn empty_batch() {
        let b = extract_all(&oc_rules(), hooks_for(EnvName::OvercookedLite).as_ref(), None, &[]);
        assert!(b.is_empty() && b.errors.is_empty());
    }

    #[test]
    fn provenance_follows_event_order() {
        let events = vec![
            LogEvent::task("Serve Tomato Salad"),
            LogEvent::game("player chops tomato into chopped tomato with the knife at the chopping board"),
        ];
        let b = extract_all(&oc_rules(), hooks_for(EnvName::OvercookedLite).as_ref(), None, &events);
        let idx: Vec<usize> = b.triples.iter().map(|p| p.event_index).collect();
        assert_eq!(idx, [0, 1, 1, 1, 1]);
        assert!(b.triples.iter().all(|p| p.extractor == Extractor::Rule));
        let mut g = KnowledgeGraph::new("v");
        b.merge_into(&mut g);
        assert!(g.edge_count() <= b.len());
    }

    #[test]
    fn duplicates_collapse_in_graph() {
        let e = LogEvent::game("player cooks fish into cooked fish on the stove");
        let events = vec![e.clone(), e];
        let b = extract_all(&oc_rules(), hooks_for(EnvName::OvercookedLite).as_ref(), None, &events);
        let mut g = KnowledgeGraph::new("v");
        b.merge_into(&mut g);
        assert_eq!(b.len(), 6);
        assert_eq!(g.edge_count(), 3);
    }
}
