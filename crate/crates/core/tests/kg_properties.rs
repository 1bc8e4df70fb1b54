//! Property tests for the knowledge graph, checked against a brute-force
//! path enumeration that shares no code with the traversal.

use std::collections::BTreeSet;

use klpeg::kg::{Direction, KnowledgeGraph, NodeId, NodeKind, RelationCategory, Triple, TraversalPolicy};
use proptest::prelude::*;

const LABELS: [&str; 3] = ["r0", "r1", "r2"];

/// Raw edge list (head index, label index, tail index).
type Edges = Vec<(usize, usize, usize)>;

fn build(n: usize, edges: &Edges) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new("prop");
    for i in 0..n {
        g.ensure_node(&node(i), NodeKind::Element).unwrap();
    }
    for &(h, r, t) in edges {
        let tr = Triple::parse(&format!("n{h}"), LABELS[r], RelationCategory::CausalTransition, &format!("n{t}"))
            .unwrap();
        g.insert_existing(&tr).unwrap();
    }
    g
}

fn node(i: usize) -> NodeId {
    NodeId::new(&format!("n{i}")).unwrap()
}

/// Enumerates every walk of length 1..=k from `start` by explicit recursion
/// over the raw edge list and returns the set of walk endpoints (minus start).
fn brute_force(
    edges: &Edges,
    start: usize,
    k: usize,
    dir: Direction,
    filter: &BTreeSet<usize>,
) -> BTreeSet<usize> {
    fn walk(
        edges: &Edges,
        at: usize,
        remaining: usize,
        dir: Direction,
        filter: &BTreeSet<usize>,
        out: &mut BTreeSet<usize>,
    ) {
        if remaining == 0 {
            return;
        }
        for &(h, r, t) in edges {
            if !filter.is_empty() && !filter.contains(&r) {
                continue;
            }
            let mut steps = Vec::new();
            if matches!(dir, Direction::Forward | Direction::Both) && h == at {
                steps.push(t);
            }
            if matches!(dir, Direction::Reverse | Direction::Both) && t == at {
                steps.push(h);
            }
            for next in steps {
                out.insert(next);
                walk(edges, next, remaining - 1, dir, filter, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(edges, start, k, dir, filter, &mut out);
    out.remove(&start);
    out
}

fn graph_strategy() -> impl Strategy<Value = (usize, Edges)> {
    (2usize..=12).prop_flat_map(|n| {
        let edge = (0..n, 0..LABELS.len(), 0..n);
        (Just(n), prop::collection::vec(edge, 0..=24))
    })
}

fn direction_strategy() -> impl Strategy<Value = Direction> {
    prop_oneof![Just(Direction::Forward), Just(Direction::Reverse), Just(Direction::Both)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn impact_set_equals_path_enumeration(
        (n, edges) in graph_strategy(),
        k in 1usize..=4,
        dir in direction_strategy(),
        filter in prop::collection::btree_set(0..LABELS.len(), 0..=2),
        start_seed in any::<usize>(),
    ) {
        let g = build(n, &edges);
        let start = start_seed % n;
        let policy = TraversalPolicy::new(k, dir).unwrap()
            .with_relations(filter.iter().map(|i| LABELS[*i]));
        let got: BTreeSet<NodeId> = g.impact_set(&node(start), &policy).unwrap();
        let want: BTreeSet<NodeId> = brute_force(&edges, start, k, dir, &filter)
            .into_iter().map(node).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn traversal_is_monotone_in_k(
        (n, edges) in graph_strategy(),
        k in 1usize..=4,
        dir in direction_strategy(),
        start_seed in any::<usize>(),
    ) {
        let g = build(n, &edges);
        let s = node(start_seed % n);
        let small = g.impact_set(&s, &TraversalPolicy::new(k, dir).unwrap()).unwrap();
        let big = g.impact_set(&s, &TraversalPolicy::new(k + 1, dir).unwrap()).unwrap();
        prop_assert!(small.is_subset(&big));
    }

    #[test]
    fn forward_reverse_duality(
        (n, edges) in graph_strategy(),
        k in 1usize..=4,
        a in any::<usize>(),
        b in any::<usize>(),
    ) {
        let g = build(n, &edges);
        let (u, v) = (node(a % n), node(b % n));
        let fwd = TraversalPolicy::new(k, Direction::Forward).unwrap();
        let rev = TraversalPolicy::new(k, Direction::Reverse).unwrap();
        prop_assert_eq!(
            g.impact_set(&u, &fwd).unwrap().contains(&v),
            g.impact_set(&v, &rev).unwrap().contains(&u)
        );
    }

    #[test]
    fn indexes_stay_coherent_and_remove_inverts_insert(
        (n, edges) in graph_strategy(),
        ops in prop::collection::vec((any::<bool>(), 0usize..12, 0..LABELS.len(), 0usize..12), 0..40),
    ) {
        let mut g = build(n, &edges);
        prop_assert!(g.indexes_coherent());
        for (insert, h, r, t) in ops {
            let tr = Triple::parse(&format!("n{}", h % n), LABELS[r], RelationCategory::CausalTransition, &format!("n{}", t % n)).unwrap();
            if insert {
                let before = g.clone();
                if g.insert_existing(&tr).unwrap() {
                    let mut undone = g.clone();
                    prop_assert!(undone.remove_triple(&tr));
                    prop_assert_eq!(undone, before);
                }
            } else {
                g.remove_triple(&tr);
            }
            prop_assert!(g.indexes_coherent());
        }
    }

    #[test]
    fn document_round_trip((n, edges) in graph_strategy()) {
        let g = build(n, &edges);
        let back = KnowledgeGraph::from_json_str(&g.to_json_string()).unwrap();
        prop_assert_eq!(back, g);
    }
}
