//! Update-log parsing through the gateway and graph synchronisation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{PipelineError, UpdateLog};
use crate::extract::default_kinds;
use crate::kg::{normalize_name, normalize_relation, KnowledgeGraph, NodeId, RelationCategory, RelationLabel, Triple};
use crate::llm::{Completion, Gateway, ParamKind, ParamSpec, Payload, RawTriple, TemplateId, ToolHost, ToolSpec, TripleOp};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Change {
    pub op: TripleOp,
    pub triple: Triple,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphDelta {
    pub changes: Vec<Change>,
    pub related_items: Vec<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncReport {
    pub inserted: usize,
    pub removed: usize,
    /// Triples that could not be applied, with the reason.
    pub rejected: Vec<(String, String)>,
}

/// Resolves relation labels against the graph and the extraction vocabulary.
#[derive(Debug, Clone)]
pub struct RelationIndex(BTreeMap<String, RelationCategory>);

impl RelationIndex {
    pub fn new(graph: &KnowledgeGraph, vocab: &[RelationLabel]) -> Self {
        let mut map = graph.relation_categories();
        for r in vocab {
            map.entry(r.label().to_string()).or_insert(r.category);
        }
        Self(map)
    }

    pub fn triple(&self, head: &str, relation: &str, tail: &str) -> Result<Triple, String> {
        let label = normalize_relation(relation);
        let category = *self.0.get(&label).ok_or_else(|| format!("unknown relation `{relation}`"))?;
        Triple::parse(head, &label, category, tail).map_err(|e| e.to_string())
    }
}

/// Tools offered while parsing an update log. Updates are staged, not
/// applied, so a failed parse leaves the graph untouched.
pub struct DeltaTools<'g> {
    graph: &'g KnowledgeGraph,
    relations: RelationIndex,
    pub staged: Vec<Change>,
}

impl<'g> DeltaTools<'g> {
    pub fn new(graph: &'g KnowledgeGraph, vocab: &[RelationLabel]) -> Self {
        Self {
            graph,
            relations: RelationIndex::new(graph, vocab),
            staged: Vec::new(),
        }
    }
}

fn param(name: &str, kind: ParamKind) -> ParamSpec {
    ParamSpec {
        name: name.into(),
        kind,
        required: true,
    }
}

impl ToolHost for DeltaTools<'_> {
    fn specs(&self) -> Vec<ToolSpec> {
        vec![
            ToolSpec {
                name: "find_nodes".into(),
                description: "graph nodes whose name contains the given text".into(),
                params: vec![param("name", ParamKind::String)],
            },
            ToolSpec {
                name: "graph_update".into(),
                description: "stage an insert or remove of one triple".into(),
                params: vec![param("op", ParamKind::String), param("triple", ParamKind::Triple)],
            },
        ]
    }

    fn invoke(&mut self, name: &str, args: &Value) -> Result<Value, String> {
        match name {
            "find_nodes" => {
                let needle = normalize_name(args["name"].as_str().unwrap_or_default());
                let hits: Vec<Value> = self
                    .graph
                    .nodes()
                    .filter(|(n, _)| n.as_str().contains(&needle))
                    .take(20)
                    .map(|(n, k)| json!({"name": n.as_str(), "kind": format!("{k:?}")}))
                    .collect();
                Ok(Value::Array(hits))
            }
            "graph_update" => {
                let op = match args["op"].as_str() {
                    Some("insert") => TripleOp::Insert,
                    Some("remove") => TripleOp::Remove,
                    other => return Err(format!("op must be insert or remove, got {other:?}")),
                };
                let t = &args["triple"];
                let field = |f: &str| t[f].as_str().unwrap_or_default().to_string();
                let triple = self.relations.triple(&field("Head"), &field("Relation"), &field("Tail"))?;
                if op == TripleOp::Remove && !self.graph.contains_triple(&triple) {
                    return Err(format!("{triple} is not in the graph"));
                }
                self.staged.push(Change { op, triple });
                Ok(json!({"staged": true}))
            }
            other => Err(format!("no tool named `{other}`")),
        }
    }
}

/// Asks the update parser for the log's graph delta.
///
/// The delta must agree with the updates staged through tool calls: a
/// reply that reports triples it never staged, or drops staged ones, is
/// rejected.
pub fn derive_delta(
    gateway: &Gateway,
    graph: &KnowledgeGraph,
    log: &UpdateLog,
    vocab: &[RelationLabel],
) -> Result<(GraphDelta, Completion), PipelineError> {
    let mut tools = DeltaTools::new(graph, vocab);
    let bindings = BTreeMap::from([("update_log", log.source.clone())]);
    let reply = gateway.ask(TemplateId::UpdateParser, &bindings, Some(&mut tools))?;
    let Payload::Delta { triples, related_items } = reply.payload else {
        unreachable!("update parser template parses to a delta")
    };
    let mut reported = BTreeSet::new();
    for RawTriple {
        head,
        relation,
        tail,
        op,
    } in &triples
    {
        let triple = tools
            .relations
            .triple(head, relation, tail)
            .map_err(PipelineError::DeltaInconsistent)?;
        reported.insert(Change {
            op: op.unwrap_or(TripleOp::Insert),
            triple,
        });
    }
    let staged: BTreeSet<Change> = tools.staged.iter().cloned().collect();
    if let Some(c) = reported.symmetric_difference(&staged).next() {
        let side = if staged.contains(c) { "staged but not reported" } else { "reported but never staged" };
        return Err(PipelineError::DeltaInconsistent(format!("{:?} {} {side}", c.op, c.triple)));
    }
    let mut related = Vec::new();
    for item in related_items {
        match NodeId::new(&item) {
            Ok(n) if !related.contains(&n) => related.push(n),
            Ok(_) => {}
            Err(_) => log::warn!("ignoring empty related item"),
        }
    }
    let mut changes = tools.staged;
    changes.dedup();
    let delta = GraphDelta {
        changes,
        related_items: related,
    };
    Ok((delta, reply.completion))
}

/// Applies a delta in order and retags the graph. Per-triple failures are
/// reported, not fatal.
pub fn sync_graph(graph: &mut KnowledgeGraph, delta: &GraphDelta, to_version: &str) -> SyncReport {
    let mut report = SyncReport::default();
    for c in &delta.changes {
        match c.op {
            TripleOp::Insert => {
                let (dh, dt) = default_kinds(c.triple.relation.category);
                let hk = graph.kind_of(&c.triple.head).unwrap_or(dh);
                let tk = graph.kind_of(&c.triple.tail).unwrap_or(dt);
                match graph.insert_triple(&c.triple, hk, tk) {
                    Ok(true) => report.inserted += 1,
                    Ok(false) => {}
                    Err(e) => report.rejected.push((c.triple.to_string(), e.to_string())),
                }
            }
            TripleOp::Remove => {
                if graph.remove_triple(&c.triple) {
                    report.removed += 1;
                } else {
                    report.rejected.push((c.triple.to_string(), "not present".into()));
                }
            }
        }
    }
    graph.version_tag = to_version.to_string();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::NodeKind;
    use crate::llm::{tool_block, ChatMessage, ChatProvider, ProviderError};
    use std::sync::{Arc, Mutex};

    struct Queue(Mutex<Vec<String>>);
    impl ChatProvider for Queue {
        fn chat(&self, _: &[ChatMessage]) -> Result<String, ProviderError> {
            self.0.lock().unwrap().pop().ok_or(ProviderError::Timeout)
        }
    }

    fn gateway(replies: &[String]) -> Gateway {
        Gateway::new(Arc::new(Queue(Mutex::new(replies.iter().rev().cloned().collect()))))
    }

    fn seed() -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new("1.0.0");
        let t = Triple::parse("knife", "destroys", RelationCategory::GameElementInteraction, "tomato").unwrap();
        g.insert_triple(&t, NodeKind::Element, NodeKind::Element).unwrap();
        g
    }

    fn log() -> UpdateLog {
        super::super::parse_update_log("## v1.0.0 -> v1.0.1\n### Bug Fixes\n- Fixed the knife.\n").unwrap()
    }

    #[test]
    fn staged_changes_apply() {
        let call = tool_block(&[
            ("find_nodes", json!({"name": "knife"})),
            (
                "graph_update",
                json!({"op": "remove", "triple": {"Head": "knife", "Relation": "destroys", "Tail": "tomato"}}),
            ),
        ]);
        let last = json!({"new_or_modified_triples": [{"Head": "Knife", "Relation": "destroys", "Tail": "tomato", "Op": "remove"}], "related_items": ["knife"]});
        let gw = gateway(&[call, last.to_string()]);
        let mut g = seed();
        let (delta, completion) = derive_delta(&gw, &g, &log(), &[]).unwrap();
        assert_eq!(completion.tool_invocations[0].result[0]["name"], "knife");
        let report = sync_graph(&mut g, &delta, "1.0.1");
        assert_eq!((report.inserted, report.removed), (0, 1));
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.version_tag, "1.0.1");
    }

    #[test]
    fn unreported_staging_is_inconsistent() {
        let call = tool_block(&[(
            "graph_update",
            json!({"op": "insert", "triple": {"Head": "knife", "Relation": "destroys", "Tail": "onion"}}),
        )]);
        let last = json!({"new_or_modified_triples": [], "related_items": []});
        let err = derive_delta(&gateway(&[call, last.to_string()]), &seed(), &log(), &[]).unwrap_err();
        assert!(matches!(err, PipelineError::DeltaInconsistent(_)));
    }

    #[test]
    fn unknown_relation_is_a_tool_error() {
        let g = KnowledgeGraph::new("v");
        let mut tools = DeltaTools::new(&g, &[]);
        let args = json!({"op": "insert", "triple": {"Head": "a", "Relation": "zaps", "Tail": "b"}});
        assert!(tools.invoke("graph_update", &args).is_err());
        assert!(tools.staged.is_empty());
    }
}
