//! Impact inference, task selection and the knowledge handed to the
//! test generator.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use super::PipelineError;
use crate::env::TaskSpec;
use crate::kg::{KnowledgeGraph, NodeId, NodeKind, TraversalPolicy, Triple};
use crate::llm::{Gateway, Completion, ParamKind, ParamSpec, Payload, TemplateId, ToolHost, ToolSpec};

/// Hop distance of every impacted node; the starting items sit at 0.
pub type ImpactMap = BTreeMap<NodeId, usize>;

/// Union of the items' impact sets. Items missing from the graph are
/// skipped with a warning.
pub fn infer_impact(graph: &KnowledgeGraph, items: &[NodeId], policy: &TraversalPolicy) -> ImpactMap {
    let mut out = ImpactMap::new();
    for item in items {
        let Ok(dist) = graph.impact_distances(item, policy) else {
            log::warn!("`{item}` is not in the graph; no impact inferred");
            continue;
        };
        out.insert(item.clone(), 0);
        for (n, d) in dist {
            let slot = out.entry(n).or_insert(d);
            *slot = (*slot).min(d);
        }
    }
    out
}

/// Exposes the traversal to the impact inferencer.
pub struct ImpactTools<'g> {
    pub graph: &'g KnowledgeGraph,
    pub policy: TraversalPolicy,
}

impl ToolHost for ImpactTools<'_> {
    fn specs(&self) -> Vec<ToolSpec> {
        vec![ToolSpec {
            name: "impact_set".into(),
            description: format!(
                "nodes within {} hop(s) of an item ({:?} edges)",
                self.policy.max_hops(),
                self.policy.direction
            ),
            params: vec![ParamSpec {
                name: "item".into(),
                kind: ParamKind::String,
                required: true,
            }],
        }]
    }

    fn invoke(&mut self, _name: &str, args: &Value) -> Result<Value, String> {
        let item = NodeId::new(args["item"].as_str().unwrap_or_default()).map_err(|e| e.to_string())?;
        let set = self.graph.impact_set(&item, &self.policy).map_err(|e| e.to_string())?;
        Ok(set.iter().map(|n| Value::from(n.as_str())).collect())
    }
}

/// Runs the impact inferencer for one item and checks its answer against
/// the traversal.
pub fn infer_impact_via(
    gateway: &Gateway,
    graph: &KnowledgeGraph,
    item: &NodeId,
    policy: &TraversalPolicy,
) -> Result<(BTreeSet<NodeId>, Completion), PipelineError> {
    let mut tools = ImpactTools {
        graph,
        policy: policy.clone(),
    };
    let bindings = BTreeMap::from([("input_item", item.as_str().to_string())]);
    let reply = gateway.ask(TemplateId::ImpactInferencer, &bindings, Some(&mut tools))?;
    let Payload::Impact { items, .. } = reply.payload else {
        unreachable!("impact template parses to an impact payload")
    };
    let got: BTreeSet<NodeId> = items.iter().filter_map(|i| NodeId::new(i).ok()).collect();
    let expected = graph.impact_set(item, policy).unwrap_or_default();
    if got != expected {
        return Err(PipelineError::ImpactMismatch {
            item: item.to_string(),
            missing: expected.difference(&got).map(ToString::to_string).collect(),
            extra: got.difference(&expected).map(ToString::to_string).collect(),
        });
    }
    Ok((got, reply.completion))
}

/// Tasks touched by an impact map, nearest first.
///
/// A task is touched when its own node is impacted (rank = its distance) or
/// when it depends on an impacted element (rank = that distance + 1). Ties
/// go to tasks with more dependencies in `focus`, then by name.
pub fn select_tasks<'t>(
    graph: &KnowledgeGraph,
    tasks: &'t [TaskSpec],
    impact: &ImpactMap,
    focus: &BTreeSet<NodeId>,
) -> Vec<(&'t TaskSpec, usize)> {
    let mut out: Vec<(&TaskSpec, usize, usize)> = tasks
        .iter()
        .filter_map(|task| {
            let node = NodeId::new(&task.name).ok()?;
            let own = impact.get(&node).copied();
            let deps: Vec<NodeId> = graph
                .outgoing(&node)
                .filter(|t| t.relation.label() == "depends_on")
                .map(|t| t.tail)
                .collect();
            let via = deps.iter().filter_map(|d| impact.get(d).map(|r| r + 1)).min();
            let hits = deps.iter().filter(|d| focus.contains(*d)).count();
            own.into_iter().chain(via).min().map(|r| (task, r, hits))
        })
        .collect();
    out.sort_by(|a, b| {
        a.1.cmp(&b.1)
            .then_with(|| b.2.cmp(&a.2))
            .then_with(|| a.0.name.cmp(&b.0.name))
    });
    out.into_iter().map(|(t, r, _)| (t, r)).collect()
}

/// Relations whose head is needed to obtain the tail.
const PRODUCER_RELATIONS: [&str; 6] = ["crafts", "smelts_to", "cooked_to", "chopped_to", "plated_into", "drops"];
/// Relations whose head is needed to act on the tail.
const EQUIPMENT_RELATIONS: [&str; 2] = ["mines", "attacks"];

/// Relations from an action to what it yields.
const OUTPUT_RELATIONS: [&str; 2] = ["produces", "delivers"];

/// Facts needed to reach `seeds`: every edge one hop from a seed, plus the
/// backward closure over production, tool, weapon and fuel edges. Actions
/// next to a seed contribute what they yield.
pub fn prerequisite_knowledge(graph: &KnowledgeGraph, seeds: &[NodeId]) -> BTreeSet<Triple> {
    let mut facts = BTreeSet::new();
    let mut frontier: Vec<NodeId> = Vec::new();
    for s in seeds {
        for t in graph.incident(s) {
            for end in [&t.head, &t.tail] {
                if end != s && graph.kind_of(end) == Some(NodeKind::Action) {
                    for p in graph.outgoing(end).filter(|p| OUTPUT_RELATIONS.contains(&p.relation.label())) {
                        frontier.push(p.tail.clone());
                        facts.insert(p);
                    }
                }
            }
            if t.relation.label() == "depends_on" && &t.head == s {
                frontier.push(t.tail.clone());
            }
            facts.insert(t);
        }
        frontier.push(s.clone());
    }
    let mut seen = BTreeSet::new();
    let mut needs_fuel = false;
    let mut fuel_added = false;
    loop {
        while let Some(node) = frontier.pop() {
            if !seen.insert(node.clone()) {
                continue;
            }
            for t in graph.incoming(&node) {
                let label = t.relation.label();
                if PRODUCER_RELATIONS.contains(&label) || EQUIPMENT_RELATIONS.contains(&label) {
                    needs_fuel |= matches!(label, "smelts_to" | "cooked_to");
                    frontier.push(t.head.clone());
                    facts.insert(t);
                }
            }
        }
        if !needs_fuel || fuel_added {
            break;
        }
        fuel_added = true;
        for f in graph.triples().filter(|t| t.relation.label() == "fuels") {
            frontier.push(f.head.clone());
            facts.insert(f);
        }
    }
    facts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Difficulty, Goal};
    use crate::kg::{Direction, RelationCategory};

    fn edge(g: &mut KnowledgeGraph, h: &str, r: &str, t: &str, hk: NodeKind) {
        let c = match r {
            "depends_on" => RelationCategory::TaskDependency,
            "produces" | "uses" => RelationCategory::ActionElementRelation,
            _ => RelationCategory::CausalTransition,
        };
        g.insert_triple(&Triple::parse(h, r, c, t).unwrap(), hk, NodeKind::Element).unwrap();
    }

    fn kitchen() -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new("v");
        edge(&mut g, "serve salad", "depends_on", "chopped tomato", NodeKind::Task);
        edge(&mut g, "serve soup", "depends_on", "tomato sauce", NodeKind::Task);
        edge(&mut g, "tomato", "chopped_to", "chopped tomato", NodeKind::Element);
        edge(&mut g, "chopped tomato", "cooked_to", "tomato sauce", NodeKind::Element);
        edge(&mut g, "chopping", "uses", "chopping board", NodeKind::Action);
        edge(&mut g, "chopping", "produces", "chopped tomato", NodeKind::Action);
        g
    }

    fn task(name: &str) -> TaskSpec {
        TaskSpec {
            id: name.replace(' ', "_"),
            name: name.into(),
            difficulty: Difficulty::Tier1,
            goal: Goal::Serve(name.into()),
            key_components: vec![],
            walkthrough: vec![],
        }
    }

    #[test]
    fn selection_ranks_and_grows_with_hops() {
        let g = kitchen();
        let tasks = [task("Serve Soup"), task("Serve Salad")];
        let start = [NodeId::from_static("tomato")];
        let mut prev = 0;
        for k in 1..=4 {
            let impact = infer_impact(&g, &start, &TraversalPolicy::new(k, Direction::Both).unwrap());
            let picked = select_tasks(&g, &tasks, &impact, &BTreeSet::new());
            assert!(picked.len() >= prev);
            prev = picked.len();
            if k == 1 {
                assert_eq!(picked.len(), 1);
                assert_eq!(picked[0].0.name, "Serve Salad");
            }
        }
        assert_eq!(prev, 2);
    }

    #[test]
    fn ties_prefer_focused_dependencies() {
        let g = kitchen();
        let tasks = [task("Serve Soup"), task("Serve Salad")];
        let impact = ImpactMap::from([
            (NodeId::from_static("chopped tomato"), 1),
            (NodeId::from_static("tomato sauce"), 1),
        ]);
        let first = |focus: &[&str]| {
            let focus: BTreeSet<NodeId> = focus.iter().map(|f| NodeId::from_static(f)).collect();
            select_tasks(&g, &tasks, &impact, &focus)[0].0.name.clone()
        };
        assert_eq!(first(&[]), "Serve Salad");
        assert_eq!(first(&["tomato sauce"]), "Serve Soup");
    }

    #[test]
    fn station_knowledge_reaches_inputs() {
        let g = kitchen();
        let facts = prerequisite_knowledge(&g, &[NodeId::from_static("chopping board")]);
        let labels: BTreeSet<String> = facts.iter().map(|t| t.to_string()).collect();
        assert!(labels.contains("(tomato, chopped_to, chopped tomato)"));
        assert!(labels.contains("(chopping, uses, chopping board)"));
        assert!(!labels.contains("(chopped tomato, cooked_to, tomato sauce)"));
    }
}
