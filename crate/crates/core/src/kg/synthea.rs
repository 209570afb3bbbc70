//! Adapter from Synthea-style CSV exports to the clinical knowledge graph.
//!
//! Reads the standard export layout (patients.csv, encounters.csv,
//! conditions.csv, observations.csv), keeping only the columns the graph
//! needs and ignoring the rest. Patient and encounter nodes are named by
//! their export ids; observation and condition nodes are named by their
//! description strings, so repeated descriptions collapse into one node.

use super::{CARE_ACTION_CLASSES, Edge, KgError, KnowledgeGraph, Polarity, Schema};
use std::collections::HashMap;
use std::io::Read;

/// The four input streams of a Synthea export.
pub struct SyntheaStreams<P, E, C, O> {
    pub patients: P,
    pub encounters: E,
    pub conditions: C,
    pub observations: O,
}

struct Columns {
    indices: HashMap<String, usize>,
    file: &'static str,
}

impl Columns {
    fn from_headers(headers: &csv::StringRecord, file: &'static str) -> Self {
        let indices = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_ascii_lowercase(), i))
            .collect();
        Columns { indices, file }
    }

    fn required(&self, name: &str) -> Result<usize, KgError> {
        self.indices
            .get(name)
            .copied()
            .ok_or_else(|| KgError::MissingColumn {
                column: name.to_string(),
                file: self.file,
            })
    }
}

fn read_rows<R: Read>(
    reader: R,
    file: &'static str,
    wanted: &[&str],
) -> Result<Vec<Vec<String>>, KgError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let columns = Columns::from_headers(csv_reader.headers()?, file);
    let indices: Vec<usize> = wanted
        .iter()
        .map(|name| columns.required(name))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for record in csv_reader.records() {
        let record = record?;
        rows.push(
            indices
                .iter()
                .map(|&i| record.get(i).unwrap_or("").trim().to_string())
                .collect(),
        );
    }
    Ok(rows)
}

/// Builds the clinical knowledge graph from a Synthea CSV export.
///
/// Emits positive patient-encounter, encounter-careaction,
/// encounter-observation, and encounter-condition edges. An encounter class
/// outside the five care actions, or a condition/observation referencing an
/// unknown encounter, is an error naming the offending row.
pub fn ingest_clinical_csv<P: Read, E: Read, C: Read, O: Read>(
    streams: SyntheaStreams<P, E, C, O>,
) -> Result<KnowledgeGraph, KgError> {
    let mut kg = KnowledgeGraph::new(Schema::clinical());
    let schema = kg.schema().clone();
    let patient_ty = schema.node_type_id("patient").expect("clinical schema");
    let encounter_ty = schema.node_type_id("encounter").expect("clinical schema");
    let observation_ty = schema.node_type_id("observation").expect("clinical schema");
    let condition_ty = schema.node_type_id("condition").expect("clinical schema");
    let careaction_ty = schema.node_type_id("careaction").expect("clinical schema");
    let rel_patient_enc = schema.relation_id("patient-encounter").expect("clinical schema");
    let rel_careaction = schema.relation_id("encounter-careaction").expect("clinical schema");
    let rel_observation = schema
        .relation_id("encounter-observation")
        .expect("clinical schema");
    let rel_condition = schema.relation_id("encounter-condition").expect("clinical schema");

    for row in read_rows(streams.patients, "patients.csv", &["id"])? {
        kg.intern_node(&row[0], patient_ty)?;
    }

    for (i, row) in read_rows(streams.encounters, "encounters.csv", &["id", "patient", "encounterclass"])?
        .into_iter()
        .enumerate()
    {
        let row_no = i + 1;
        let (encounter_name, patient_name, class) = (&row[0], &row[1], row[2].to_ascii_lowercase());
        if !CARE_ACTION_CLASSES.contains(&class.as_str()) {
            return Err(KgError::UnknownEncounterClass {
                row: row_no,
                class: class.clone(),
            });
        }
        let patient = match kg.node_id(patient_name) {
            Some(id) if kg.node_type(id) == patient_ty => id,
            _ => {
                return Err(KgError::UnknownPatient {
                    row: row_no,
                    encounter: encounter_name.clone(),
                    patient: patient_name.clone(),
                })
            }
        };
        let encounter = kg.intern_node(encounter_name, encounter_ty)?;
        let care_action = kg.intern_node(&class, careaction_ty)?;
        kg.add_edge_if_absent(Edge {
            subject: patient,
            relation: rel_patient_enc,
            object: encounter,
            polarity: Polarity::Positive,
        })?;
        kg.add_edge_if_absent(Edge {
            subject: encounter,
            relation: rel_careaction,
            object: care_action,
            polarity: Polarity::Positive,
        })?;
    }

    for (i, row) in read_rows(streams.conditions, "conditions.csv", &["encounter", "description"])?
        .into_iter()
        .enumerate()
    {
        let row_no = i + 1;
        let (encounter_name, description) = (&row[0], &row[1]);
        let encounter = match kg.node_id(encounter_name) {
            Some(id) if kg.node_type(id) == encounter_ty => id,
            _ => {
                return Err(KgError::UnknownEncounter {
                    row: row_no,
                    kind: "condition",
                    encounter: encounter_name.clone(),
                })
            }
        };
        let condition = kg.intern_node(description, condition_ty)?;
        kg.add_edge_if_absent(Edge {
            subject: encounter,
            relation: rel_condition,
            object: condition,
            polarity: Polarity::Positive,
        })?;
    }

    for (i, row) in read_rows(
        streams.observations,
        "observations.csv",
        &["encounter", "description"],
    )?
    .into_iter()
    .enumerate()
    {
        let row_no = i + 1;
        let (encounter_name, description) = (&row[0], &row[1]);
        let encounter = match kg.node_id(encounter_name) {
            Some(id) if kg.node_type(id) == encounter_ty => id,
            _ => {
                return Err(KgError::UnknownEncounter {
                    row: row_no,
                    kind: "observation",
                    encounter: encounter_name.clone(),
                })
            }
        };
        let observation = kg.intern_node(description, observation_ty)?;
        kg.add_edge_if_absent(Edge {
            subject: encounter,
            relation: rel_observation,
            object: observation,
            polarity: Polarity::Positive,
        })?;
    }

    Ok(kg)
}
