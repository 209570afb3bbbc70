//! Message-passing connectivity as a schema-level policy.
//!
//! Which KG edges carry embedding messages, and in which direction, is not a
//! property of the data: it is a [`ConnectivityPolicy`] — a set of typed,
//! directed [`MessageRule`]s applied to the positive edges of a graph. The
//! result is a [`MessageGraph`]: the concrete directed edge list the encoder
//! aggregates over, with its own message-relation vocabulary (a reverse rule
//! gets a relation id distinct from its forward twin) and per-target
//! per-relation in-degrees used for mean normalization.

use crate::kg::{KnowledgeGraph, NodeId, NodeTypeId, RelationId, Schema};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;


/// Identifier in the message-relation vocabulary of size `2 * R`:
/// forward rules keep the KG relation id, reverse rules get `R + r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MessageRelationId(pub u32);

impl MessageRelationId {
    pub fn forward(relation: RelationId) -> Self {
        MessageRelationId(relation.0)
    }

    pub fn reverse(relation: RelationId, kg_relation_count: usize) -> Self {
        MessageRelationId(kg_relation_count as u32 + relation.0)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The size of the message-relation vocabulary for a schema with `R` relations.
pub fn message_relation_count(schema: &Schema) -> usize {
    2 * schema.relation_count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Reverse,
}

/// One typed flow: embeddings of `source_type` nodes reach `target_type`
/// nodes across positive edges of `relation`, either along the edge
/// (forward) or against it (reverse).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MessageRule {
    pub source_type: NodeTypeId,
    pub relation: RelationId,
    pub target_type: NodeTypeId,
    pub direction: Direction,
}

impl MessageRule {
    /// The forward rule of `relation`: subject type → object type.
    pub fn forward(schema: &Schema, relation: RelationId) -> Self {
        let def = schema.relation(relation);
        MessageRule {
            source_type: def.subject_type,
            relation,
            target_type: def.object_type,
            direction: Direction::Forward,
        }
    }

    /// The reverse rule of `relation`: object type → subject type.
    pub fn reverse(schema: &Schema, relation: RelationId) -> Self {
        let def = schema.relation(relation);
        MessageRule {
            source_type: def.object_type,
            relation,
            target_type: def.subject_type,
            direction: Direction::Reverse,
        }
    }

    /// The message-relation id this rule emits under.
    pub fn message_relation(&self, schema: &Schema) -> MessageRelationId {
        match self.direction {
            Direction::Forward => MessageRelationId::forward(self.relation),
            Direction::Reverse => MessageRelationId::reverse(self.relation, schema.relation_count()),
        }
    }

    fn matches_signature(&self, schema: &Schema) -> bool {
        let def = schema.relation(self.relation);
        match self.direction {
            Direction::Forward => {
                self.source_type == def.subject_type && self.target_type == def.object_type
            }
            Direction::Reverse => {
                self.source_type == def.object_type && self.target_type == def.subject_type
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("unknown connectivity preset `{0}` (expected C1, C2, C3, or C4)")]
    UnknownPreset(String),
    #[error("schema is missing `{0}`, required by the preset")]
    SchemaMissing(String),
    #[error("rule for `{relation}` does not match the relation's type signature")]
    RuleSignatureMismatch { relation: String },
    #[error("duplicate rule for relation `{relation}`")]
    DuplicateRule { relation: String },
    #[error("policy line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// A named, duplicate-free set of message rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityPolicy {
    name: String,
    rules: Vec<MessageRule>,
}

impl ConnectivityPolicy {
    /// Builds a policy, rejecting duplicate rules and rules whose endpoint
    /// types contradict the schema.
    pub fn new(
        name: impl Into<String>,
        rules: Vec<MessageRule>,
        schema: &Schema,
    ) -> Result<Self, PolicyError> {
        let mut seen = HashSet::new();
        for rule in &rules {
            if rule.relation.index() >= schema.relation_count() {
                return Err(PolicyError::SchemaMissing(format!(
                    "relation id {}",
                    rule.relation.0
                )));
            }
            if !rule.matches_signature(schema) {
                return Err(PolicyError::RuleSignatureMismatch {
                    relation: schema.relation_name(rule.relation).to_string(),
                });
            }
            if !seen.insert((rule.relation, rule.direction)) {
                return Err(PolicyError::DuplicateRule {
                    relation: schema.relation_name(rule.relation).to_string(),
                });
            }
        }
        Ok(ConnectivityPolicy {
            name: name.into(),
            rules,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rules(&self) -> &[MessageRule] {
        &self.rules
    }
}

/// The built-in presets for the clinical schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    /// Forward rules only: message flow mirrors the positive KG edges.
    C1,
    /// C1 plus every reverse rule: flow in any direction.
    C2,
    /// C2 without the care-action → encounter rule.
    C3,
    /// Only observation → encounter and condition → encounter.
    C4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::C1, Preset::C2, Preset::C3, Preset::C4];

    pub fn parse(name: &str) -> Result<Self, PolicyError> {
        match name.to_ascii_uppercase().as_str() {
            "C1" => Ok(Preset::C1),
            "C2" => Ok(Preset::C2),
            "C3" => Ok(Preset::C3),
            "C4" => Ok(Preset::C4),
            other => Err(PolicyError::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::C1 => write!(f, "C1"),
            Preset::C2 => write!(f, "C2"),
            Preset::C3 => write!(f, "C3"),
            Preset::C4 => write!(f, "C4"),
        }
    }
}

/// Instantiates a preset against a clinical schema.
///
/// Presets are specific to the clinical schema; other schemas must supply
/// custom rules.
pub fn preset_policy(preset: Preset, schema: &Schema) -> Result<ConnectivityPolicy, PolicyError> {
    let relation = |name: &str| {
        schema
            .relation_id(name)
            .ok_or_else(|| PolicyError::SchemaMissing(format!("relation `{name}`")))
    };
    for ty in ["encounter", "observation", "condition", "careaction", "patient"] {
        if schema.node_type_id(ty).is_none() {
            return Err(PolicyError::SchemaMissing(format!("node type `{ty}`")));
        }
    }
    let careaction = relation("encounter-careaction")?;
    let observation = relation("encounter-observation")?;
    let condition = relation("encounter-condition")?;
    relation("patient-encounter")?;

    let all_relations = || (0..schema.relation_count()).map(|i| RelationId(i as u32));
    let rules = match preset {
        Preset::C1 => all_relations()
            .map(|r| MessageRule::forward(schema, r))
            .collect(),
        Preset::C2 => all_relations()
            .map(|r| MessageRule::forward(schema, r))
            .chain(all_relations().map(|r| MessageRule::reverse(schema, r)))
            .collect(),
        Preset::C3 => all_relations()
            .map(|r| MessageRule::forward(schema, r))
            .chain(
                all_relations()
                    .filter(|&r| r != careaction)
                    .map(|r| MessageRule::reverse(schema, r)),
            )
            .collect(),
        Preset::C4 => vec![
            MessageRule::reverse(schema, observation),
            MessageRule::reverse(schema, condition),
        ],
    };
    ConnectivityPolicy::new(preset.to_string(), rules, schema)
}

/// A directed message edge: `source`'s embedding reaches `target` under
/// message relation `relation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MessageEdge {
    pub source: NodeId,
    pub relation: MessageRelationId,
    pub target: NodeId,
}

/// The concrete aggregation structure induced by a policy over a graph.
///
/// Edges are kept sorted by (target, relation, source) so aggregation order —
/// and therefore every floating-point sum — is reproducible bit for bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageGraph {
    node_count: usize,
    message_relation_count: usize,
    edges: Vec<MessageEdge>,
    in_degree: Vec<u32>,
}

impl MessageGraph {
    fn from_edges(node_count: usize, message_relation_count: usize, mut edges: Vec<MessageEdge>) -> Self {
        edges.sort_unstable_by_key(|e| (e.target, e.relation, e.source));
        let mut in_degree = vec![0u32; node_count * message_relation_count];
        for edge in &edges {
            in_degree[edge.target.index() * message_relation_count + edge.relation.index()] += 1;
        }
        MessageGraph {
            node_count,
            message_relation_count,
            edges,
            in_degree,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn message_relation_count(&self) -> usize {
        self.message_relation_count
    }

    pub fn edges(&self) -> &[MessageEdge] {
        &self.edges
    }

    /// Count of message edges into `target` with relation `relation`.
    pub fn in_degree(&self, target: NodeId, relation: MessageRelationId) -> u32 {
        self.in_degree[target.index() * self.message_relation_count + relation.index()]
    }
}

/// Applies every rule of `policy` to every positive edge of `kg`.
///
/// Negative edges never emit messages, whatever the policy says.
pub fn build_message_graph(kg: &KnowledgeGraph, policy: &ConnectivityPolicy) -> MessageGraph {
    let schema = kg.schema();
    let mut edges = Vec::new();
    for edge in kg.edges() {
        if !edge.polarity.is_positive() {
            continue;
        }
        for rule in policy.rules() {
            if rule.relation != edge.relation {
                continue;
            }
            let (source, target) = match rule.direction {
                Direction::Forward => (edge.subject, edge.object),
                Direction::Reverse => (edge.object, edge.subject),
            };
            edges.push(MessageEdge {
                source,
                relation: rule.message_relation(schema),
                target,
            });
        }
    }
    MessageGraph::from_edges(kg.node_count(), message_relation_count(schema), edges)
}

/// Drops every message edge from an unseen source into a seen target, so
/// new nodes can read seen embeddings without perturbing them.
pub fn apply_inference_mask(mg: &MessageGraph, seen: &HashSet<NodeId>) -> MessageGraph {
    let edges = mg
        .edges
        .iter()
        .filter(|e| !(!seen.contains(&e.source) && seen.contains(&e.target)))
        .copied()
        .collect();
    MessageGraph::from_edges(mg.node_count, mg.message_relation_count, edges)
}

/// A rule in portable text form, resolvable against any schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub source_type: String,
    pub relation: String,
    pub target_type: String,
    pub reverse: bool,
}

impl RuleSpec {
    pub fn resolve(&self, schema: &Schema) -> Result<MessageRule, PolicyError> {
        let relation = schema
            .relation_id(&self.relation)
            .ok_or_else(|| PolicyError::SchemaMissing(format!("relation `{}`", self.relation)))?;
        let source_type = schema
            .node_type_id(&self.source_type)
            .ok_or_else(|| PolicyError::SchemaMissing(format!("node type `{}`", self.source_type)))?;
        let target_type = schema
            .node_type_id(&self.target_type)
            .ok_or_else(|| PolicyError::SchemaMissing(format!("node type `{}`", self.target_type)))?;
        let rule = MessageRule {
            source_type,
            relation,
            target_type,
            direction: if self.reverse {
                Direction::Reverse
            } else {
                Direction::Forward
            },
        };
        if !rule.matches_signature(schema) {
            return Err(PolicyError::RuleSignatureMismatch {
                relation: self.relation.clone(),
            });
        }
        Ok(rule)
    }
}

/// Parses a policy file.
///
/// One rule per line, `source_type <relation> target_type [reverse]` (the
/// angle brackets around the relation name are optional). A line of the form
/// `preset C3` expands a named preset; `name my-policy` names the policy.
/// `#` starts a comment.
pub fn parse_policy(text: &str, schema: &Schema) -> Result<ConnectivityPolicy, PolicyError> {
    let mut name = String::from("custom");
    let mut rules: Vec<MessageRule> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["name", rest @ ..] if !rest.is_empty() => {
                name = rest.join(" ");
            }
            ["preset", preset_name] => {
                let preset = Preset::parse(preset_name)?;
                let expanded = preset_policy(preset, schema)?;
                rules.extend(expanded.rules().iter().copied());
                if name == "custom" {
                    name = preset.to_string();
                }
            }
            [source, relation, target] | [source, relation, target, "reverse"] => {
                let spec = RuleSpec {
                    source_type: source.to_string(),
                    relation: relation.trim_matches(['<', '>']).to_string(),
                    target_type: target.to_string(),
                    reverse: tokens.len() == 4,
                };
                rules.push(spec.resolve(schema)?);
            }
            _ => {
                return Err(PolicyError::Parse {
                    line: line_no,
                    reason: format!("cannot parse `{line}`"),
                })
            }
        }
    }
    ConnectivityPolicy::new(name, rules, schema)
}
