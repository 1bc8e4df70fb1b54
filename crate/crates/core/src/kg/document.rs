//! Graph document format: sorted JSON so that documents diff cleanly
//! across versions.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{KgError, KnowledgeGraph, NodeId, NodeKind, RelationCategory, RelationLabel, Triple};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub version_tag: String,
    /// Optional manifest header; checked on load when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<DocumentCounts>,
    pub nodes: Vec<NodeEntry>,
    pub triples: Vec<TripleEntry>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DocumentCounts {
    pub nodes: usize,
    pub triples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub name: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TripleEntry {
    pub head: String,
    pub relation: String,
    pub category: RelationCategory,
    pub tail: String,
}

impl GraphDocument {
    pub fn from_graph(graph: &KnowledgeGraph) -> Self {
        let nodes: Vec<NodeEntry> = graph
            .nodes()
            .map(|(n, k)| NodeEntry {
                name: n.to_string(),
                kind: k,
            })
            .collect();
        let triples: Vec<TripleEntry> = graph
            .triples()
            .map(|t| TripleEntry {
                head: t.head.to_string(),
                relation: t.relation.label().to_string(),
                category: t.relation.category,
                tail: t.tail.to_string(),
            })
            .collect();
        GraphDocument {
            version_tag: graph.version_tag.clone(),
            counts: Some(DocumentCounts {
                nodes: nodes.len(),
                triples: triples.len(),
            }),
            nodes,
            triples,
        }
    }

    pub fn into_graph(self) -> Result<KnowledgeGraph, KgError> {
        let malformed = |location: String, message: String| KgError::MalformedDocument { location, message };
        let mut g = KnowledgeGraph::new(self.version_tag);
        for (i, n) in self.nodes.iter().enumerate() {
            let id = NodeId::new(&n.name)
                .map_err(|e| malformed(format!("nodes[{i}].name"), e.to_string()))?;
            g.ensure_node(&id, n.kind)
                .map_err(|e| malformed(format!("nodes[{i}].kind"), e.to_string()))?;
        }
        for (i, t) in self.triples.iter().enumerate() {
            let head = NodeId::new(&t.head)
                .map_err(|e| malformed(format!("triples[{i}].head"), e.to_string()))?;
            let tail = NodeId::new(&t.tail)
                .map_err(|e| malformed(format!("triples[{i}].tail"), e.to_string()))?;
            let relation = RelationLabel::new(&t.relation, t.category)
                .map_err(|e| malformed(format!("triples[{i}].relation"), e.to_string()))?;
            if !g.contains_node(&head) {
                return Err(malformed(
                    format!("triples[{i}].head"),
                    format!("undeclared node `{head}`"),
                ));
            }
            if !g.contains_node(&tail) {
                return Err(malformed(
                    format!("triples[{i}].tail"),
                    format!("undeclared node `{tail}`"),
                ));
            }
            g.insert_existing(&Triple::new(head, relation, tail))
                .map_err(|e| malformed(format!("triples[{i}]"), e.to_string()))?;
        }
        if let Some(counts) = self.counts {
            if counts.nodes != g.node_count() || counts.triples != g.edge_count() {
                return Err(malformed(
                    "counts".into(),
                    format!(
                        "manifest declares {} nodes / {} triples, document has {} / {}",
                        counts.nodes,
                        counts.triples,
                        g.node_count(),
                        g.edge_count()
                    ),
                ));
            }
        }
        Ok(g)
    }
}

pub fn save_graph<W: Write>(graph: &KnowledgeGraph, mut sink: W) -> std::io::Result<()> {
    let doc = GraphDocument::from_graph(graph);
    serde_json::to_writer_pretty(&mut sink, &doc)?;
    sink.write_all(b"\n")
}

pub fn load_graph<R: Read>(source: R) -> Result<KnowledgeGraph, KgError> {
    let doc: GraphDocument = serde_json::from_reader(source).map_err(|e| KgError::MalformedDocument {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    doc.into_graph()
}

impl KnowledgeGraph {
    pub fn to_json_string(&self) -> String {
        let mut buf = Vec::new();
        save_graph(self, &mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn from_json_str(s: &str) -> Result<Self, KgError> {
        load_graph(s.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new("v1.0.0");
        let rows = [
            ("wooden pickaxe", "mines", RelationCategory::GameElementInteraction, "stone", NodeKind::Element, NodeKind::Element),
            ("overworld", "transitions_to", RelationCategory::SceneTransition, "nether", NodeKind::Scene, NodeKind::Scene),
            ("obtain stone sword", "depends_on", RelationCategory::TaskDependency, "wooden plank", NodeKind::Task, NodeKind::Element),
        ];
        for (h, r, c, t, hk, tk) in rows {
            g.insert_triple(&Triple::parse(h, r, c, t).unwrap(), hk, tk).unwrap();
        }
        g
    }

    #[test]
    fn round_trip_three_triples() {
        let g = sample();
        let text = g.to_json_string();
        let back = KnowledgeGraph::from_json_str(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json_string(), text);
    }

    #[test]
    fn undeclared_node_is_malformed() {
        let text = r#"{"version_tag":"v","nodes":[{"name":"a","kind":"Element"}],
            "triples":[{"head":"a","relation":"r","category":"TaskDependency","tail":"b"}]}"#;
        match KnowledgeGraph::from_json_str(text) {
            Err(KgError::MalformedDocument { location, .. }) => assert_eq!(location, "triples[0].tail"),
            other => panic!("expected malformed, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = KnowledgeGraph::from_json_str("{\n\"version_tag\": }").unwrap_err();
        match err {
            KgError::MalformedDocument { location, .. } => assert!(location.starts_with("line 2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn manifest_mismatch_is_malformed() {
        let mut doc = GraphDocument::from_graph(&sample());
        doc.counts = Some(DocumentCounts { nodes: 1, triples: 3 });
        assert!(doc.into_graph().is_err());
    }
}
