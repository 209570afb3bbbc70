//! Names and lookups for the clinical triage schema.

use super::{KgError, KnowledgeGraph, NodeId, NodeTypeId, RelationId};

/// The five care-action classes, in canonical order. Class order fixes score
/// column order in prediction reports and the prior order in the generator.
pub const CARE_ACTION_CLASSES: [&str; 5] =
    ["wellness", "inpatient", "outpatient", "ambulatory", "emergency"];

/// Node type names of the clinical schema.
pub const CLINICAL_NODE_TYPES: [&str; 5] =
    ["patient", "encounter", "observation", "condition", "careaction"];

/// Relations of the clinical schema as (name, subject type, object type).
pub const CLINICAL_RELATIONS: [(&str, &str, &str); 4] = [
    ("patient-encounter", "patient", "encounter"),
    ("encounter-observation", "encounter", "observation"),
    ("encounter-condition", "encounter", "condition"),
    ("encounter-careaction", "encounter", "careaction"),
];

/// Resolved ids of the clinical types and relations within one graph's schema.
#[derive(Debug, Clone, Copy)]
pub struct ClinicalVocab {
    pub patient_type: NodeTypeId,
    pub encounter_type: NodeTypeId,
    pub observation_type: NodeTypeId,
    pub condition_type: NodeTypeId,
    pub careaction_type: NodeTypeId,
    pub patient_encounter_relation: RelationId,
    pub observation_relation: Option<RelationId>,
    pub condition_relation: Option<RelationId>,
    pub careaction_relation: RelationId,
}

impl ClinicalVocab {
    /// Resolves the clinical vocabulary, or `None` when the schema lacks the
    /// core clinical types/relations (non-clinical graph).
    ///
    /// The observation and condition relations are optional so that tiny
    /// graphs exercising only part of the schema still resolve.
    pub fn try_resolve(kg: &KnowledgeGraph) -> Option<Self> {
        let schema = kg.schema();
        Some(ClinicalVocab {
            patient_type: schema.node_type_id("patient")?,
            encounter_type: schema.node_type_id("encounter")?,
            observation_type: schema.node_type_id("observation")?,
            condition_type: schema.node_type_id("condition")?,
            careaction_type: schema.node_type_id("careaction")?,
            patient_encounter_relation: schema.relation_id("patient-encounter")?,
            observation_relation: schema.relation_id("encounter-observation"),
            condition_relation: schema.relation_id("encounter-condition"),
            careaction_relation: schema.relation_id("encounter-careaction")?,
        })
    }

    pub fn resolve(kg: &KnowledgeGraph) -> Result<Self, KgError> {
        Self::try_resolve(kg).ok_or(KgError::NotClinical("patient/encounter/careaction"))
    }

    /// The five care-action node ids in canonical class order.
    ///
    /// Errors when any class node is missing from the graph.
    pub fn care_action_nodes(&self, kg: &KnowledgeGraph) -> Result<[NodeId; 5], KgError> {
        let mut out = [NodeId(0); 5];
        for (slot, class) in out.iter_mut().zip(CARE_ACTION_CLASSES) {
            let id = kg.node_id(class).ok_or_else(|| KgError::MissingCareAction {
                class: class.to_string(),
            })?;
            if kg.node_type(id) != self.careaction_type {
                return Err(KgError::MissingCareAction {
                    class: class.to_string(),
                });
            }
            *slot = id;
        }
        Ok(out)
    }
}
