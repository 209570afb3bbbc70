//! Negative-edge synthesis and patient-level train/test splitting.

use super::{
    ClinicalVocab, Edge, KgError, KnowledgeGraph, NodeId, NodeRecord, Polarity, RelationId,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, HashSet};

impl KnowledgeGraph {
    /// Adds, for every encounter, a negative care-action edge to each care
    /// action it has no positive edge to. Returns the number of edges added.
    ///
    /// The data only records the one care action an encounter is connected
    /// to; because the relation is one-of-five, the remaining four pairs are
    /// known non-links and become explicit negative edges. Idempotent: a
    /// second call adds nothing.
    pub fn synthesize_negative_careaction_edges(&mut self) -> Result<usize, KgError> {
        // Vacuous on graphs without the clinical schema or without encounters.
        let Some(vocab) = ClinicalVocab::try_resolve(self) else {
            return Ok(0);
        };
        if self.nodes_of_type(vocab.encounter_type).next().is_none() {
            return Ok(0);
        }
        let candidates = vocab.care_action_nodes(self)?;
        self.synthesize_negative_one_of_n(vocab.careaction_relation, &candidates)
    }

    /// Generalized one-of-N negative synthesis over `relation`.
    ///
    /// Every subject with a positive `relation` edge must have exactly one;
    /// negatives are added toward every candidate object lacking an edge of
    /// either polarity.
    pub fn synthesize_negative_one_of_n(
        &mut self,
        relation: RelationId,
        candidates: &[NodeId],
    ) -> Result<usize, KgError> {
        let def = self.schema().relation(relation).clone();
        let mut positives: HashMap<NodeId, usize> = HashMap::new();
        for edge in self.edges() {
            if edge.relation == relation && edge.polarity.is_positive() {
                *positives.entry(edge.subject).or_insert(0) += 1;
            }
        }
        let subjects: Vec<NodeId> = self.nodes_of_type(def.subject_type).collect();
        for &subject in &subjects {
            let count = positives.get(&subject).copied().unwrap_or(0);
            if count != 1 {
                return Err(KgError::CareActionCardinality {
                    encounter: self.node_name(subject).to_string(),
                    count,
                });
            }
        }
        let mut added = 0;
        for subject in subjects {
            for &object in candidates {
                let edge = Edge {
                    subject,
                    relation,
                    object,
                    polarity: Polarity::Negative,
                };
                if self.add_edge_if_absent(edge)? {
                    added += 1;
                }
            }
        }
        Ok(added)
    }
}

/// Splits a clinical graph into train/test graphs by patient.
///
/// Patients are sampled uniformly at random without replacement using a
/// seeded generator. Each output keeps the selected patients, their
/// encounters, every edge incident to those encounters, and the full shared
/// observation/condition/care-action vocabulary (so embeddings learned on
/// the train side address the same nodes on the test side).
pub fn split_by_patients(
    kg: &KnowledgeGraph,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(KnowledgeGraph, KnowledgeGraph), KgError> {
    let vocab = ClinicalVocab::resolve(kg)?;
    let patients: Vec<NodeId> = kg.nodes_of_type(vocab.patient_type).collect();
    if patients.len() < n_train + n_test {
        return Err(KgError::InsufficientPatients {
            required: n_train + n_test,
            available: patients.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = patients;
    shuffled.shuffle(&mut rng);
    let train_patients: HashSet<NodeId> = shuffled[..n_train].iter().copied().collect();
    let test_patients: HashSet<NodeId> = shuffled[n_train..n_train + n_test].iter().copied().collect();

    let train = project_patients(kg, &vocab, &train_patients);
    let test = project_patients(kg, &vocab, &test_patients);
    Ok((train, test))
}

/// The sub-graph induced by `patients`: their encounters, incident edges,
/// and every shared-vocabulary node. Node ids are re-assigned densely in
/// the original id order.
fn project_patients(
    kg: &KnowledgeGraph,
    vocab: &ClinicalVocab,
    patients: &HashSet<NodeId>,
) -> KnowledgeGraph {
    let mut encounters: HashSet<NodeId> = HashSet::new();
    for edge in kg.edges() {
        if edge.relation == vocab.patient_encounter_relation
            && edge.polarity.is_positive()
            && patients.contains(&edge.subject)
        {
            encounters.insert(edge.object);
        }
    }

    let keep = |id: NodeId| -> bool {
        let ty = kg.node_type(id);
        ty == vocab.observation_type
            || ty == vocab.condition_type
            || ty == vocab.careaction_type
            || patients.contains(&id)
            || encounters.contains(&id)
    };

    let mut remap: HashMap<NodeId, NodeId> = HashMap::new();
    let mut nodes = Vec::new();
    for i in 0..kg.node_count() {
        let id = NodeId(i as u32);
        if keep(id) {
            remap.insert(id, NodeId(nodes.len() as u32));
            nodes.push(NodeRecord {
                name: kg.node_name(id).to_string(),
                node_type: kg.node_type(id),
            });
        }
    }

    let mut edges = Vec::new();
    for edge in kg.edges() {
        if let (Some(&subject), Some(&object)) = (remap.get(&edge.subject), remap.get(&edge.object))
        {
            edges.push(Edge {
                subject,
                relation: edge.relation,
                object,
                polarity: edge.polarity,
            });
        }
    }

    KnowledgeGraph::from_raw_parts(kg.schema().clone(), nodes, edges)
}
