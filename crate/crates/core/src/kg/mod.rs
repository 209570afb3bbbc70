//! Data model for signed multi-relational knowledge graphs.
//!
//! A [`KnowledgeGraph`] holds typed, interned nodes and directed, typed,
//! signed edges. Node and relation identifiers are dense integers assigned
//! in first-appearance order, so a graph loaded twice from the same source
//! gets identical ids. Edges carry a [`Polarity`]: positive edges assert a
//! relation holds, negative edges assert it does not. Both kinds are kept in
//! the same edge list; only consumers that care (message-graph construction,
//! loss filtering) distinguish them.

mod clinical;
mod ops;
mod synthea;
mod table;
#[cfg(test)]
pub(crate) mod tests;

pub use clinical::{ClinicalVocab, CARE_ACTION_CLASSES, CLINICAL_NODE_TYPES, CLINICAL_RELATIONS};
pub use ops::split_by_patients;
pub use synthea::{ingest_clinical_csv, SyntheaStreams};
pub use table::{load_triple_table, write_triple_table};

use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;

/// Dense node identifier, contiguous from 0 within one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

/// Dense relation identifier, contiguous from 0 within one schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId(pub u32);

/// Dense node-type identifier into [`Schema::node_types`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeTypeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl NodeTypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Whether an edge asserts the relation holds (positive) or does not (negative).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn is_positive(self) -> bool {
        matches!(self, Polarity::Positive)
    }

    /// The 0/1 training label for this edge.
    pub fn label(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => 0.0,
        }
    }

    /// Parses the triple-table literal (`True` / `False`).
    pub fn from_table_literal(s: &str) -> Option<Self> {
        match s {
            "True" => Some(Polarity::Positive),
            "False" => Some(Polarity::Negative),
            _ => None,
        }
    }

    /// The triple-table literal for this polarity.
    pub fn table_literal(self) -> &'static str {
        match self {
            Polarity::Positive => "True",
            Polarity::Negative => "False",
        }
    }
}

/// A directed, typed, signed edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub subject: NodeId,
    pub relation: RelationId,
    pub object: NodeId,
    pub polarity: Polarity,
}

impl Edge {
    pub fn triple(&self) -> (NodeId, RelationId, NodeId) {
        (self.subject, self.relation, self.object)
    }
}

/// A relation declaration: name plus the node types of its endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDef {
    pub name: String,
    pub subject_type: NodeTypeId,
    pub object_type: NodeTypeId,
}

/// Node-type and relation vocabulary shared by all nodes and edges of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Schema {
    node_types: Vec<String>,
    relations: Vec<RelationDef>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    /// The clinical triage schema: five node types, four relations.
    pub fn clinical() -> Self {
        let mut schema = Schema::new();
        for ty in CLINICAL_NODE_TYPES {
            schema.intern_node_type(ty);
        }
        for (name, subject, object) in CLINICAL_RELATIONS {
            let s = schema.node_type_id(subject).expect("declared above");
            let o = schema.node_type_id(object).expect("declared above");
            schema
                .intern_relation(name, s, o)
                .expect("clinical relations are consistent");
        }
        schema
    }

    /// Returns the id for `name`, interning it if unseen.
    pub fn intern_node_type(&mut self, name: &str) -> NodeTypeId {
        if let Some(id) = self.node_type_id(name) {
            return id;
        }
        let id = NodeTypeId(self.node_types.len() as u32);
        self.node_types.push(name.to_string());
        id
    }

    /// Returns the id for relation `name`, interning it if unseen.
    ///
    /// A relation name must always be used with the same endpoint types.
    pub fn intern_relation(
        &mut self,
        name: &str,
        subject_type: NodeTypeId,
        object_type: NodeTypeId,
    ) -> Result<RelationId, KgError> {
        if subject_type.index() >= self.node_types.len()
            || object_type.index() >= self.node_types.len()
        {
            return Err(KgError::UnknownNodeType {
                name: format!("type id {}", subject_type.index().max(object_type.index())),
            });
        }
        if let Some(id) = self.relation_id(name) {
            let def = &self.relations[id.index()];
            if def.subject_type != subject_type || def.object_type != object_type {
                return Err(KgError::InconsistentRelationTypes {
                    relation: name.to_string(),
                    expected: (
                        self.node_types[def.subject_type.index()].clone(),
                        self.node_types[def.object_type.index()].clone(),
                    ),
                    found: (
                        self.node_types[subject_type.index()].clone(),
                        self.node_types[object_type.index()].clone(),
                    ),
                });
            }
            return Ok(id);
        }
        let id = RelationId(self.relations.len() as u32);
        self.relations.push(RelationDef {
            name: name.to_string(),
            subject_type,
            object_type,
        });
        Ok(id)
    }

    pub fn node_type_id(&self, name: &str) -> Option<NodeTypeId> {
        self.node_types
            .iter()
            .position(|t| t == name)
            .map(|i| NodeTypeId(i as u32))
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations
            .iter()
            .position(|r| r.name == name)
            .map(|i| RelationId(i as u32))
    }

    pub fn node_type_name(&self, id: NodeTypeId) -> &str {
        &self.node_types[id.index()]
    }

    pub fn relation(&self, id: RelationId) -> &RelationDef {
        &self.relations[id.index()]
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        &self.relations[id.index()].name
    }

    pub fn node_types(&self) -> &[String] {
        &self.node_types
    }

    pub fn relations(&self) -> &[RelationDef] {
        &self.relations
    }

    pub fn node_type_count(&self) -> usize {
        self.node_types.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }
}

/// One interned node: globally unique name plus its type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub name: String,
    pub node_type: NodeTypeId,
}

/// Errors from graph construction and ingestion.
#[derive(Debug, thiserror::Error)]
pub enum KgError {
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("node `{name}` used with type `{found}` but previously interned as `{expected}`")]
    NodeTypeConflict {
        name: String,
        expected: String,
        found: String,
    },
    #[error("duplicate triple ({subject}, {relation}, {object})")]
    DuplicateTriple {
        subject: String,
        relation: String,
        object: String,
    },
    #[error("relation `{relation}` declared with endpoint types ({}, {}) but used with ({}, {})", expected.0, expected.1, found.0, found.1)]
    InconsistentRelationTypes {
        relation: String,
        expected: (String, String),
        found: (String, String),
    },
    #[error("edge endpoint type does not match relation `{relation}` signature: {detail}")]
    EdgeTypeMismatch { relation: String, detail: String },
    #[error("unknown node type `{name}`")]
    UnknownNodeType { name: String },
    #[error("unknown relation `{name}`")]
    UnknownRelation { name: String },
    #[error("unknown node id {0} (graph has {1} nodes)")]
    UnknownNodeId(u32, usize),
    #[error("row {row}: encounter class `{class}` is not one of the five care actions")]
    UnknownEncounterClass { row: usize, class: String },
    #[error("row {row}: {kind} references unknown encounter `{encounter}`")]
    UnknownEncounter {
        row: usize,
        kind: &'static str,
        encounter: String,
    },
    #[error("row {row}: encounter `{encounter}` references unknown patient `{patient}`")]
    UnknownPatient {
        row: usize,
        encounter: String,
        patient: String,
    },
    #[error("missing column `{column}` in {file}")]
    MissingColumn { column: String, file: &'static str },
    #[error("encounter `{encounter}` has {count} positive care-action edges (expected exactly 1)")]
    CareActionCardinality { encounter: String, count: usize },
    #[error("care-action node `{class}` is missing from the graph")]
    MissingCareAction { class: String },
    #[error("need {required} patients but the graph has {available}")]
    InsufficientPatients { required: usize, available: usize },
    #[error("graph has no `{0}` node type; clinical operations require the clinical schema")]
    NotClinical(&'static str),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// A signed multi-relational knowledge graph.
///
/// Immutable once construction finishes; cheap to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    schema: Schema,
    nodes: Vec<NodeRecord>,
    #[serde(skip)]
    name_index: HashMap<String, NodeId>,
    edges: Vec<Edge>,
    #[serde(skip)]
    triple_index: HashSet<(NodeId, RelationId, NodeId)>,
}

impl KnowledgeGraph {
    pub fn new(schema: Schema) -> Self {
        KnowledgeGraph {
            schema,
            nodes: Vec::new(),
            name_index: HashMap::new(),
            edges: Vec::new(),
            triple_index: HashSet::new(),
        }
    }

    /// Assembles a graph from raw parts without checking any invariant.
    ///
    /// Loaders maintain the invariants incrementally; this constructor is for
    /// callers that already hold validated parts (or deliberately want an
    /// invalid graph to feed through [`validate_kg`]).
    pub fn from_raw_parts(schema: Schema, nodes: Vec<NodeRecord>, edges: Vec<Edge>) -> Self {
        let name_index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), NodeId(i as u32)))
            .collect();
        let triple_index = edges.iter().map(|e| e.triple()).collect();
        KnowledgeGraph {
            schema,
            nodes,
            name_index,
            edges,
            triple_index,
        }
    }

    /// Number of nodes `n`.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of edges `m`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].name
    }

    pub fn node_type(&self, id: NodeId) -> NodeTypeId {
        self.nodes[id.index()].node_type
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.name_index.get(name).copied()
    }

    pub fn contains_triple(&self, subject: NodeId, relation: RelationId, object: NodeId) -> bool {
        self.triple_index.contains(&(subject, relation, object))
    }

    /// Node ids of the given type, in id order.
    pub fn nodes_of_type(&self, ty: NodeTypeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(_, n)| n.node_type == ty)
            .map(|(i, _)| NodeId(i as u32))
    }

    /// Interns a node type into this graph's schema.
    pub fn intern_node_type(&mut self, name: &str) -> NodeTypeId {
        self.schema.intern_node_type(name)
    }

    /// Interns a relation into this graph's schema.
    pub fn intern_relation(
        &mut self,
        name: &str,
        subject_type: NodeTypeId,
        object_type: NodeTypeId,
    ) -> Result<RelationId, KgError> {
        self.schema.intern_relation(name, subject_type, object_type)
    }

    /// Returns the id for node `name` of type `ty`, interning it if unseen.
    ///
    /// Re-interning an existing name with a different type is an error: node
    /// names are globally unique, so a name pins its type.
    pub fn intern_node(&mut self, name: &str, ty: NodeTypeId) -> Result<NodeId, KgError> {
        if let Some(&id) = self.name_index.get(name) {
            let existing = self.nodes[id.index()].node_type;
            if existing != ty {
                return Err(KgError::NodeTypeConflict {
                    name: name.to_string(),
                    expected: self.schema.node_type_name(existing).to_string(),
                    found: self.schema.node_type_name(ty).to_string(),
                });
            }
            return Ok(id);
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(NodeRecord {
            name: name.to_string(),
            node_type: ty,
        });
        self.name_index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Appends an edge, enforcing endpoint typing and triple uniqueness.
    pub fn add_edge(&mut self, edge: Edge) -> Result<(), KgError> {
        let n = self.nodes.len();
        if edge.subject.index() >= n {
            return Err(KgError::UnknownNodeId(edge.subject.0, n));
        }
        if edge.object.index() >= n {
            return Err(KgError::UnknownNodeId(edge.object.0, n));
        }
        if edge.relation.index() >= self.schema.relation_count() {
            return Err(KgError::UnknownRelation {
                name: format!("relation id {}", edge.relation.0),
            });
        }
        let def = self.schema.relation(edge.relation);
        let s_ty = self.node_type(edge.subject);
        let o_ty = self.node_type(edge.object);
        if s_ty != def.subject_type || o_ty != def.object_type {
            return Err(KgError::EdgeTypeMismatch {
                relation: def.name.clone(),
                detail: format!(
                    "({}: {}, {}: {})",
                    self.node_name(edge.subject),
                    self.schema.node_type_name(s_ty),
                    self.node_name(edge.object),
                    self.schema.node_type_name(o_ty),
                ),
            });
        }
        if !self.triple_index.insert(edge.triple()) {
            return Err(KgError::DuplicateTriple {
                subject: self.node_name(edge.subject).to_string(),
                relation: def.name.clone(),
                object: self.node_name(edge.object).to_string(),
            });
        }
        self.edges.push(edge);
        Ok(())
    }

    /// Like [`add_edge`](Self::add_edge) but silently skips triples already present.
    ///
    /// Returns true when the edge was added.
    pub fn add_edge_if_absent(&mut self, edge: Edge) -> Result<bool, KgError> {
        if self.triple_index.contains(&edge.triple()) {
            return Ok(false);
        }
        self.add_edge(edge)?;
        Ok(true)
    }
}

/// One problem found by [`validate_kg`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidationFinding {
    /// An edge endpoint id is out of range.
    DanglingNode { edge_index: usize, node_id: u32 },
    /// An edge relation id is out of range.
    DanglingRelation { edge_index: usize, relation_id: u32 },
    /// A node's type id is out of range.
    DanglingNodeType { node_id: u32, type_id: u32 },
    /// Edge endpoint types do not match the relation signature.
    TypeMismatch { edge_index: usize, relation: String },
    /// The same (subject, relation, object) triple appears more than once.
    DuplicateTriple {
        subject: u32,
        relation: u32,
        object: u32,
        count: usize,
    },
    /// Two nodes share a name.
    DuplicateNodeName { name: String },
    /// An encounter has a number of positive care-action edges other than one.
    CareActionCardinality { encounter: u32, positives: usize },
}

impl fmt::Display for ValidationFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationFinding::DanglingNode { edge_index, node_id } => {
                write!(f, "edge {edge_index}: node id {node_id} out of range")
            }
            ValidationFinding::DanglingRelation {
                edge_index,
                relation_id,
            } => write!(f, "edge {edge_index}: relation id {relation_id} out of range"),
            ValidationFinding::DanglingNodeType { node_id, type_id } => {
                write!(f, "node {node_id}: type id {type_id} out of range")
            }
            ValidationFinding::TypeMismatch {
                edge_index,
                relation,
            } => write!(f, "edge {edge_index}: endpoint types violate `{relation}`"),
            ValidationFinding::DuplicateTriple {
                subject,
                relation,
                object,
                count,
            } => write!(f, "triple ({subject}, {relation}, {object}) appears {count} times"),
            ValidationFinding::DuplicateNodeName { name } => {
                write!(f, "node name `{name}` is not unique")
            }
            ValidationFinding::CareActionCardinality {
                encounter,
                positives,
            } => write!(f, "encounter {encounter} has {positives} positive care-action edges"),
        }
    }
}

/// Result of [`validate_kg`]: empty iff every invariant holds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<ValidationFinding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Checks every structural invariant and reports violations.
///
/// Problems are report entries, never errors: this is the diagnostic path for
/// graphs built from untrusted parts.
pub fn validate_kg(kg: &KnowledgeGraph) -> ValidationReport {
    let mut findings = Vec::new();
    let n = kg.nodes.len();
    let type_count = kg.schema.node_type_count();
    let relation_count = kg.schema.relation_count();

    for (i, node) in kg.nodes.iter().enumerate() {
        if node.node_type.index() >= type_count {
            findings.push(ValidationFinding::DanglingNodeType {
                node_id: i as u32,
                type_id: node.node_type.0,
            });
        }
    }

    let mut seen_names: HashMap<&str, usize> = HashMap::new();
    for node in &kg.nodes {
        *seen_names.entry(node.name.as_str()).or_insert(0) += 1;
    }
    let mut dup_names: Vec<&str> = seen_names
        .iter()
        .filter(|(_, &c)| c > 1)
        .map(|(&name, _)| name)
        .collect();
    dup_names.sort_unstable();
    for name in dup_names {
        findings.push(ValidationFinding::DuplicateNodeName {
            name: name.to_string(),
        });
    }

    let mut triple_counts: HashMap<(NodeId, RelationId, NodeId), usize> = HashMap::new();
    for (i, edge) in kg.edges.iter().enumerate() {
        let mut dangling = false;
        if edge.subject.index() >= n {
            findings.push(ValidationFinding::DanglingNode {
                edge_index: i,
                node_id: edge.subject.0,
            });
            dangling = true;
        }
        if edge.object.index() >= n {
            findings.push(ValidationFinding::DanglingNode {
                edge_index: i,
                node_id: edge.object.0,
            });
            dangling = true;
        }
        if edge.relation.index() >= relation_count {
            findings.push(ValidationFinding::DanglingRelation {
                edge_index: i,
                relation_id: edge.relation.0,
            });
            dangling = true;
        }
        if dangling {
            continue;
        }
        *triple_counts.entry(edge.triple()).or_insert(0) += 1;
        let def = kg.schema.relation(edge.relation);
        let s_ty = kg.nodes[edge.subject.index()].node_type;
        let o_ty = kg.nodes[edge.object.index()].node_type;
        if s_ty != def.subject_type || o_ty != def.object_type {
            findings.push(ValidationFinding::TypeMismatch {
                edge_index: i,
                relation: def.name.clone(),
            });
        }
    }

    let mut dups: Vec<_> = triple_counts
        .into_iter()
        .filter(|(_, count)| *count > 1)
        .collect();
    dups.sort_unstable_by_key(|(t, _)| *t);
    for ((s, r, o), count) in dups {
        findings.push(ValidationFinding::DuplicateTriple {
            subject: s.0,
            relation: r.0,
            object: o.0,
            count,
        });
    }

    // The one-positive-care-action rule applies only to clinical graphs.
    if let Some(vocab) = ClinicalVocab::try_resolve(kg) {
        for encounter in kg.nodes_of_type(vocab.encounter_type) {
            let positives = kg
                .edges
                .iter()
                .filter(|e| {
                    e.relation == vocab.careaction_relation
                        && e.subject == encounter
                        && e.polarity.is_positive()
                        && e.object.index() < n
                })
                .count();
            if positives != 1 {
                findings.push(ValidationFinding::CareActionCardinality {
                    encounter: encounter.0,
                    positives,
                });
            }
        }
    }

    ValidationReport { findings }
}
