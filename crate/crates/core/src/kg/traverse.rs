//! Bounded multi-hop impact traversal.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{normalize_relation, KgError, KnowledgeGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Follow edges head → tail.
    Forward,
    /// Follow edges tail → head (dependents).
    Reverse,
    #[default]
    Both,
}

impl std::str::FromStr for Direction {
    type Err = KgError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "forward" => Ok(Direction::Forward),
            "reverse" => Ok(Direction::Reverse),
            "both" => Ok(Direction::Both),
            other => Err(KgError::InvalidPolicy(format!("unknown direction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraversalPolicy {
    max_hops: usize,
    pub direction: Direction,
    /// Relation labels to follow; empty means every relation.
    #[serde(default)]
    relation_filter: BTreeSet<String>,
}

impl Default for TraversalPolicy {
    fn default() -> Self {
        Self {
            max_hops: 3,
            direction: Direction::Both,
            relation_filter: BTreeSet::new(),
        }
    }
}

impl TraversalPolicy {
    pub fn new(max_hops: usize, direction: Direction) -> Result<Self, KgError> {
        if max_hops == 0 {
            return Err(KgError::InvalidPolicy("max_hops must be at least 1".into()));
        }
        Ok(Self {
            max_hops,
            direction,
            relation_filter: BTreeSet::new(),
        })
    }

    pub fn with_relations<I, S>(mut self, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.relation_filter = labels
            .into_iter()
            .map(|l| normalize_relation(l.as_ref()))
            .collect();
        self
    }

    pub fn max_hops(&self) -> usize {
        self.max_hops
    }

    pub fn relation_filter(&self) -> &BTreeSet<String> {
        &self.relation_filter
    }

    pub(crate) fn admits(&self, label: &str) -> bool {
        self.relation_filter.is_empty() || self.relation_filter.contains(label)
    }
}

impl KnowledgeGraph {
    /// Neighbors of `node` one hop away under the policy's direction and filter.
    pub fn neighbors(&self, node: &NodeId, policy: &TraversalPolicy) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        if matches!(policy.direction, Direction::Forward | Direction::Both) {
            out.extend(
                self.outgoing(node)
                    .filter(|t| policy.admits(t.relation.label()))
                    .map(|t| t.tail),
            );
        }
        if matches!(policy.direction, Direction::Reverse | Direction::Both) {
            out.extend(
                self.incoming(node)
                    .filter(|t| policy.admits(t.relation.label()))
                    .map(|t| t.head),
            );
        }
        out
    }

    /// Minimum hop distance to every node reachable from `start` in at most
    /// `max_hops` steps, excluding `start` itself.
    pub fn impact_distances(
        &self,
        start: &NodeId,
        policy: &TraversalPolicy,
    ) -> Result<BTreeMap<NodeId, usize>, KgError> {
        if !self.contains_node(start) {
            return Err(KgError::UnknownNode(start.clone()));
        }
        let mut dist: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut seen: BTreeSet<NodeId> = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([(start.clone(), 0usize)]);
        while let Some((node, d)) = queue.pop_front() {
            if d == policy.max_hops {
                continue;
            }
            for next in self.neighbors(&node, policy) {
                if seen.insert(next.clone()) {
                    dist.insert(next.clone(), d + 1);
                    queue.push_back((next, d + 1));
                }
            }
        }
        Ok(dist)
    }

    /// The impact scope of `start`: every other node reachable by a path of
    /// at most `max_hops` edges.
    pub fn impact_set(
        &self,
        start: &NodeId,
        policy: &TraversalPolicy,
    ) -> Result<BTreeSet<NodeId>, KgError> {
        Ok(self.impact_distances(start, policy)?.into_keys().collect())
    }
}
