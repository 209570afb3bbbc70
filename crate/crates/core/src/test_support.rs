//! Deterministic random instances for oracle tests and harness checks.
//!
//! Everything here is seeded: the same seed always yields the same graph or
//! policy, so suites built on these generators are reproducible.

use crate::connectivity::{ConnectivityPolicy, MessageRule};
use crate::kg::{Edge, KnowledgeGraph, NodeRecord, NodeTypeId, Polarity, RelationId, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// A random small typed graph: 2–4 node types, 1–3 relations, up to 40
/// signed edges with consistent endpoint types.
pub fn random_graph(seed: u64) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut schema = Schema::new();
    let type_count = rng.random_range(2..5usize);
    let types: Vec<NodeTypeId> = (0..type_count)
        .map(|t| schema.intern_node_type(&format!("t{t}")))
        .collect();
    let relation_count = rng.random_range(1..4usize);
    for r in 0..relation_count {
        let s = types[rng.random_range(0..types.len())];
        let o = types[rng.random_range(0..types.len())];
        schema.intern_relation(&format!("r{r}"), s, o).unwrap();
    }

    let node_count = rng.random_range(3..15usize);
    let nodes: Vec<NodeRecord> = (0..node_count)
        .map(|i| NodeRecord {
            name: format!("n{i}"),
            node_type: types[rng.random_range(0..types.len())],
        })
        .collect();

    let kg = KnowledgeGraph::from_raw_parts(schema.clone(), nodes, Vec::new());
    let mut edges = Vec::new();
    let mut tried = BTreeSet::new();
    for _ in 0..rng.random_range(0..40usize) {
        let relation = RelationId(rng.random_range(0..relation_count) as u32);
        let def = schema.relation(relation).clone();
        let subjects: Vec<_> = kg.nodes_of_type(def.subject_type).collect();
        let objects: Vec<_> = kg.nodes_of_type(def.object_type).collect();
        if subjects.is_empty() || objects.is_empty() {
            continue;
        }
        let subject = subjects[rng.random_range(0..subjects.len())];
        let object = objects[rng.random_range(0..objects.len())];
        if !tried.insert((subject, relation, object)) {
            continue;
        }
        edges.push(Edge {
            subject,
            relation,
            object,
            polarity: if rng.random::<f64>() < 0.75 {
                Polarity::Positive
            } else {
                Polarity::Negative
            },
        });
    }
    KnowledgeGraph::from_raw_parts(schema, kg.nodes().to_vec(), edges)
}

/// A random duplicate-free rule set over `schema`: each relation's forward
/// and reverse rule is included with probability 0.6.
pub fn random_policy(schema: &Schema, seed: u64) -> ConnectivityPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut rules = Vec::new();
    for r in 0..schema.relation_count() {
        let relation = RelationId(r as u32);
        if rng.random::<f64>() < 0.6 {
            rules.push(MessageRule::forward(schema, relation));
        }
        if rng.random::<f64>() < 0.6 {
            rules.push(MessageRule::reverse(schema, relation));
        }
    }
    ConnectivityPolicy::new(format!("random-{seed}"), rules, schema).unwrap()
}
