//! Game knowledge graph: a directed, labeled multigraph of typed nodes.
//!
//! Edges are facts of the form `(head, relation, tail)`. The graph keeps a
//! forward and a reverse adjacency index so impact traversal can follow
//! dependents as cheaply as dependencies.

mod document;
mod traverse;

pub use document::{load_graph, save_graph, GraphDocument};
pub use traverse::{Direction, TraversalPolicy};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KgError {
    #[error("node `{node}` already exists as {existing:?}, cannot re-declare as {requested:?}")]
    KindConflict {
        node: NodeId,
        existing: NodeKind,
        requested: NodeKind,
    },
    #[error("query pattern has no head, relation or tail")]
    EmptyPattern,
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("malformed graph document at {location}: {message}")]
    MalformedDocument { location: String, message: String },
    #[error("invalid traversal policy: {0}")]
    InvalidPolicy(String),
    #[error("empty node name")]
    EmptyName,
}

/// Normalized node key: case-folded, trimmed, internal whitespace collapsed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(name: &str) -> Result<Self, KgError> {
        let norm = normalize_name(name);
        if norm.is_empty() {
            return Err(KgError::EmptyName);
        }
        Ok(NodeId(norm))
    }

    /// Panicking constructor for literals known to be non-empty.
    pub fn from_static(name: &str) -> Self {
        Self::new(name).expect("node name must not be empty")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for NodeId {
    type Error = KgError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        NodeId::new(&s)
    }
}

impl From<NodeId> for String {
    fn from(n: NodeId) -> String {
        n.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Relation labels additionally map spaces to underscores, so that
/// `depends on` and `depends_on` are the same relation.
pub fn normalize_relation(label: &str) -> String {
    normalize_name(label).replace(' ', "_")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Element,
    Task,
    Action,
    Event,
    Scene,
}

/// The seven triple types of the knowledge taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationCategory {
    GameElementInteraction,
    TaskDependency,
    CausalTransition,
    UiActionMapping,
    SceneTransition,
    EventElementRelation,
    ActionElementRelation,
}

impl RelationCategory {
    pub const ALL: [RelationCategory; 7] = [
        RelationCategory::GameElementInteraction,
        RelationCategory::TaskDependency,
        RelationCategory::CausalTransition,
        RelationCategory::UiActionMapping,
        RelationCategory::SceneTransition,
        RelationCategory::EventElementRelation,
        RelationCategory::ActionElementRelation,
    ];
}

/// A relation label plus its taxonomy category.
///
/// Identity (equality, ordering, hashing) is the label alone: the category
/// is descriptive metadata that never distinguishes two edges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationLabel {
    label: String,
    pub category: RelationCategory,
}

impl RelationLabel {
    pub fn new(label: &str, category: RelationCategory) -> Result<Self, KgError> {
        let label = normalize_relation(label);
        if label.is_empty() {
            return Err(KgError::EmptyName);
        }
        Ok(Self { label, category })
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl PartialEq for RelationLabel {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
    }
}
impl Eq for RelationLabel {}
impl PartialOrd for RelationLabel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for RelationLabel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.label.cmp(&other.label)
    }
}
impl std::hash::Hash for RelationLabel {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.label.hash(state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: NodeId,
    pub relation: RelationLabel,
    pub tail: NodeId,
}

impl Triple {
    pub fn new(head: NodeId, relation: RelationLabel, tail: NodeId) -> Self {
        Self { head, relation, tail }
    }

    /// Convenience constructor from raw strings.
    pub fn parse(
        head: &str,
        relation: &str,
        category: RelationCategory,
        tail: &str,
    ) -> Result<Self, KgError> {
        Ok(Self {
            head: NodeId::new(head)?,
            relation: RelationLabel::new(relation, category)?,
            tail: NodeId::new(tail)?,
        })
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.head, self.relation.label(), self.tail)
    }
}

type EdgeKey = (NodeId, String, NodeId);

/// Directed labeled multigraph with forward and reverse adjacency.
///
/// Single-writer / multi-reader: mutation takes `&mut self`, traversal and
/// queries take `&self`, and the type is `Send + Sync`.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<NodeId, NodeKind>,
    edges: BTreeMap<EdgeKey, RelationCategory>,
    forward: BTreeMap<NodeId, BTreeSet<EdgeKey>>,
    reverse: BTreeMap<NodeId, BTreeSet<EdgeKey>>,
    pub version_tag: String,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.version_tag == other.version_tag
    }
}

impl KnowledgeGraph {
    pub fn new(version_tag: impl Into<String>) -> Self {
        Self {
            version_tag: version_tag.into(),
            ..Default::default()
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn kind_of(&self, node: &NodeId) -> Option<NodeKind> {
        self.nodes.get(node).copied()
    }

    pub fn contains_node(&self, node: &NodeId) -> bool {
        self.nodes.contains_key(node)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, NodeKind)> {
        self.nodes.iter().map(|(n, k)| (n, *k))
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &NodeId> {
        self.nodes
            .iter()
            .filter(move |(_, k)| **k == kind)
            .map(|(n, _)| n)
    }

    /// All triples in (head, relation, tail) order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.edges.iter().map(|(k, c)| edge_to_triple(k, *c))
    }

    pub fn contains_triple(&self, triple: &Triple) -> bool {
        self.edges.contains_key(&edge_key(triple))
    }

    /// Declares a node, or checks that an existing node has the same kind.
    pub fn ensure_node(&mut self, node: &NodeId, kind: NodeKind) -> Result<bool, KgError> {
        match self.nodes.get(node) {
            Some(existing) if *existing != kind => Err(KgError::KindConflict {
                node: node.clone(),
                existing: *existing,
                requested: kind,
            }),
            Some(_) => Ok(false),
            None => {
                self.nodes.insert(node.clone(), kind);
                Ok(true)
            }
        }
    }

    /// Inserts a triple, creating missing endpoints with the given kinds.
    /// Returns `true` iff the triple was not already present.
    pub fn insert_triple(
        &mut self,
        triple: &Triple,
        head_kind: NodeKind,
        tail_kind: NodeKind,
    ) -> Result<bool, KgError> {
        // Check both endpoints before mutating anything.
        for (node, kind) in [(&triple.head, head_kind), (&triple.tail, tail_kind)] {
            if let Some(existing) = self.nodes.get(node) {
                if *existing != kind {
                    return Err(KgError::KindConflict {
                        node: node.clone(),
                        existing: *existing,
                        requested: kind,
                    });
                }
            }
        }
        self.ensure_node(&triple.head, head_kind)?;
        self.ensure_node(&triple.tail, tail_kind)?;
        let key = edge_key(triple);
        if self.edges.contains_key(&key) {
            return Ok(false);
        }
        self.edges.insert(key.clone(), triple.relation.category);
        self.forward
            .entry(triple.head.clone())
            .or_default()
            .insert(key.clone());
        self.reverse.entry(triple.tail.clone()).or_default().insert(key);
        Ok(true)
    }

    /// Inserts a triple whose endpoints must already exist.
    pub fn insert_existing(&mut self, triple: &Triple) -> Result<bool, KgError> {
        let hk = self
            .kind_of(&triple.head)
            .ok_or_else(|| KgError::UnknownNode(triple.head.clone()))?;
        let tk = self
            .kind_of(&triple.tail)
            .ok_or_else(|| KgError::UnknownNode(triple.tail.clone()))?;
        self.insert_triple(triple, hk, tk)
    }

    /// Removes a triple. Nodes are never garbage-collected.
    pub fn remove_triple(&mut self, triple: &Triple) -> bool {
        let key = edge_key(triple);
        if self.edges.remove(&key).is_none() {
            return false;
        }
        if let Some(set) = self.forward.get_mut(&triple.head) {
            set.remove(&key);
            if set.is_empty() {
                self.forward.remove(&triple.head);
            }
        }
        if let Some(set) = self.reverse.get_mut(&triple.tail) {
            set.remove(&key);
            if set.is_empty() {
                self.reverse.remove(&triple.tail);
            }
        }
        true
    }

    /// Pattern query; at least one field must be given. Results are sorted
    /// by (head, relation, tail).
    pub fn query(
        &self,
        head: Option<&NodeId>,
        relation: Option<&str>,
        tail: Option<&NodeId>,
    ) -> Result<Vec<Triple>, KgError> {
        if head.is_none() && relation.is_none() && tail.is_none() {
            return Err(KgError::EmptyPattern);
        }
        let relation = relation.map(normalize_relation);
        let matches = |k: &EdgeKey| {
            head.map_or(true, |h| &k.0 == h)
                && relation.as_ref().map_or(true, |r| &k.1 == r)
                && tail.map_or(true, |t| &k.2 == t)
        };
        let candidates: Box<dyn Iterator<Item = &EdgeKey>> = match (head, tail) {
            (Some(h), _) => Box::new(self.forward.get(h).into_iter().flatten()),
            (None, Some(t)) => Box::new(self.reverse.get(t).into_iter().flatten()),
            (None, None) => Box::new(self.edges.keys()),
        };
        let mut out: Vec<Triple> = candidates
            .filter(|k| matches(k))
            .map(|k| edge_to_triple(k, self.edges[k]))
            .collect();
        out.sort();
        Ok(out)
    }

    /// Triples leaving `node`.
    pub fn outgoing<'a>(&'a self, node: &NodeId) -> impl Iterator<Item = Triple> + 'a {
        self.forward
            .get(node)
            .into_iter()
            .flatten()
            .map(move |k| edge_to_triple(k, self.edges[k]))
    }

    /// Triples entering `node`.
    pub fn incoming<'a>(&'a self, node: &NodeId) -> impl Iterator<Item = Triple> + 'a {
        self.reverse
            .get(node)
            .into_iter()
            .flatten()
            .map(move |k| edge_to_triple(k, self.edges[k]))
    }

    /// All triples with `node` as head or tail, sorted and deduplicated.
    pub fn incident(&self, node: &NodeId) -> Vec<Triple> {
        let set: BTreeSet<Triple> = self.outgoing(node).chain(self.incoming(node)).collect();
        set.into_iter().collect()
    }

    /// Label → category for every relation currently in the graph.
    pub fn relation_categories(&self) -> BTreeMap<String, RelationCategory> {
        self.edges
            .iter()
            .map(|(k, c)| (k.1.clone(), *c))
            .collect()
    }

    /// Index coherence check: the forward and reverse indexes hold exactly
    /// the edge set.
    pub fn indexes_coherent(&self) -> bool {
        let fwd: BTreeSet<&EdgeKey> = self.forward.values().flatten().collect();
        let rev: BTreeSet<&EdgeKey> = self.reverse.values().flatten().collect();
        let all: BTreeSet<&EdgeKey> = self.edges.keys().collect();
        fwd == all
            && rev == all
            && self.forward.iter().all(|(h, s)| s.iter().all(|k| &k.0 == h))
            && self.reverse.iter().all(|(t, s)| s.iter().all(|k| &k.2 == t))
    }
}

fn edge_key(t: &Triple) -> EdgeKey {
    (t.head.clone(), t.relation.label().to_string(), t.tail.clone())
}

fn edge_to_triple(k: &EdgeKey, category: RelationCategory) -> Triple {
    Triple {
        head: k.0.clone(),
        relation: RelationLabel {
            label: k.1.clone(),
            category,
        },
        tail: k.2.clone(),
    }
}
