//! End-to-end training and inductive care-action prediction.
//!
//! Training builds the message graph from the configured policy over the
//! training graph's positive edges and runs full-batch epochs of loss /
//! gradient / Adam. Prediction merges the test nodes into the graph under
//! fresh ids, rebuilds the message graph with every test encounter-careaction
//! edge excluded (those links are the unknowns), applies the inference mask
//! so unseen nodes cannot reach seen embeddings, runs one forward pass, and
//! ranks the five care actions per test encounter.

use crate::connectivity::{
    apply_inference_mask, build_message_graph, message_relation_count, parse_policy,
    preset_policy, ConnectivityPolicy, Preset, PolicyError, RuleSpec,
};
use crate::kg::{
    ClinicalVocab, Edge, KgError, KnowledgeGraph, NodeId, NodeRecord, NodeTypeId, RelationId,
    CARE_ACTION_CLASSES,
};
use crate::nn::{
    adam_step, encoder_forward, loss_and_gradients, score_edge, AdamState, LrSchedule,
    ModelParams, NnError,
};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("loss-edge filter selected zero edges")]
    EmptyLossFilter,
    #[error("epochs ({epochs}) exceed the learning-rate schedule (ends at {max})")]
    ScheduleTooShort { epochs: usize, max: usize },
    #[error("unknown relation `{0}` in loss filter")]
    UnknownLossRelation(String),
    #[error("test node `{name}` is typed `{test_type}` here but `{train_type}` in training")]
    MergedTypeConflict {
        name: String,
        train_type: String,
        test_type: String,
    },
}

/// Which edges the loss is evaluated on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossEdgeFilter {
    /// Edges of the named relations, both polarities. The default covers
    /// only `encounter-careaction`: the prediction targets, and the only
    /// relation carrying negatives.
    Relations(Vec<String>),
    /// Every edge of the graph.
    All,
}

impl Default for LossEdgeFilter {
    fn default() -> Self {
        LossEdgeFilter::Relations(vec!["encounter-careaction".to_string()])
    }
}

/// How the connectivity is specified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyChoice {
    Preset(Preset),
    /// Custom rules in portable text form.
    Custom(Vec<RuleSpec>),
    /// Policy-file text (parsed against the graph's schema at use).
    File(String),
}

impl PolicyChoice {
    pub fn resolve(&self, schema: &crate::kg::Schema) -> Result<ConnectivityPolicy, PolicyError> {
        match self {
            PolicyChoice::Preset(preset) => preset_policy(*preset, schema),
            PolicyChoice::Custom(specs) => {
                let rules = specs
                    .iter()
                    .map(|s| s.resolve(schema))
                    .collect::<Result<Vec<_>, _>>()?;
                ConnectivityPolicy::new("custom", rules, schema)
            }
            PolicyChoice::File(text) => parse_policy(text, schema),
        }
    }
}

/// Training recipe. The defaults are the fixed recipe the experiments use:
/// d = 5, two layers, 1000 epochs under the staged learning rate, weight
/// decay 5e-4, frozen encounter/patient embeddings, threshold 0.9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub embedding_dim: usize,
    pub layers: usize,
    pub epochs: usize,
    pub lr_schedule: LrSchedule,
    pub weight_decay: f64,
    pub policy: PolicyChoice,
    pub loss_filter: LossEdgeFilter,
    pub frozen_types: Vec<String>,
    pub confidence_threshold: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embedding_dim: 5,
            layers: 2,
            epochs: 1000,
            lr_schedule: LrSchedule::default(),
            weight_decay: 0.0005,
            policy: PolicyChoice::Preset(Preset::C4),
            loss_filter: LossEdgeFilter::default(),
            frozen_types: vec!["encounter".to_string(), "patient".to_string()],
            confidence_threshold: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// FNV-1a fingerprint of the serialized config.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let mut hash: u64 = 0xcbf29ce484222325;
        for byte in bytes {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
        format!("{hash:016x}")
    }
}

/// Per-run record: one loss per epoch, wall time, and a checksum of the
/// final parameters.
#[derive(Debug, Clone)]
pub struct TrainHistory {
    pub epoch_losses: Vec<f64>,
    pub wall: Duration,
    pub final_checksum: u64,
}

fn select_loss_edges(kg: &KnowledgeGraph, filter: &LossEdgeFilter) -> Result<Vec<Edge>, TrainError> {
    let edges = match filter {
        LossEdgeFilter::All => kg.edges().to_vec(),
        LossEdgeFilter::Relations(names) => {
            let mut ids = Vec::new();
            for name in names {
                let id = kg
                    .schema()
                    .relation_id(name)
                    .ok_or_else(|| TrainError::UnknownLossRelation(name.clone()))?;
                ids.push(id);
            }
            kg.edges()
                .iter()
                .filter(|e| ids.contains(&e.relation))
                .copied()
                .collect()
        }
    };
    if edges.is_empty() {
        return Err(TrainError::EmptyLossFilter);
    }
    Ok(edges)
}

/// Trains a model on `train_kg`. Deterministic for a fixed seed.
pub fn train(
    train_kg: &KnowledgeGraph,
    config: &TrainConfig,
) -> Result<(ModelParams, TrainHistory), TrainError> {
    if config.epochs > config.lr_schedule.max_epoch() {
        return Err(TrainError::ScheduleTooShort {
            epochs: config.epochs,
            max: config.lr_schedule.max_epoch(),
        });
    }
    let start = Instant::now();
    let policy = config.policy.resolve(train_kg.schema())?;
    let mg = build_message_graph(train_kg, &policy);
    let loss_edges = select_loss_edges(train_kg, &config.loss_filter)?;

    let mut params = ModelParams::init(
        train_kg,
        config.embedding_dim,
        config.layers,
        message_relation_count(train_kg.schema()),
        &config.frozen_types,
        config.seed,
    )?;
    let mut state = AdamState::new(&params, config.weight_decay, config.lr_schedule.clone());

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let (loss, grads) = loss_and_gradients(&params, &mg, &loss_edges)?;
        adam_step(&mut params, &grads, &mut state, epoch)?;
        epoch_losses.push(loss);
    }

    let history = TrainHistory {
        epoch_losses,
        wall: start.elapsed(),
        final_checksum: params.checksum(),
    };
    Ok((params, history))
}

/// One care-action call for a test encounter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub encounter: String,
    pub predicted: String,
    /// Ground-truth class from the test graph's positive edge, when present.
    pub truth: Option<String>,
    /// Scores in canonical class order (wellness … emergency).
    pub scores: [f64; 5],
    /// True when the encounter had no observation/condition evidence and
    /// was assigned the most frequent training class instead.
    pub no_evidence: bool,
}

/// Prediction output for a whole test graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub predictions: Vec<Prediction>,
}

/// Node-id translation from a merged union graph back to its parts.
struct MergedGraph {
    union: KnowledgeGraph,
    /// union id of each test-graph node.
    test_to_union: Vec<NodeId>,
    /// Number of nodes shared with (and id-identical to) the training graph.
    seen_count: usize,
}

/// Merges test nodes into the training graph. Training ids are preserved;
/// test-only nodes get fresh ids appended in test-graph order. Test
/// encounter-careaction edges of either polarity are left out — they are
/// the unknowns being predicted.
fn merge_for_inference(
    train_kg: &KnowledgeGraph,
    test_kg: &KnowledgeGraph,
) -> Result<MergedGraph, TrainError> {
    let schema = train_kg.schema();
    // The graphs may order their schemas differently; remap test ids by name.
    let type_map: Vec<NodeTypeId> = test_kg
        .schema()
        .node_types()
        .iter()
        .map(|name| {
            schema
                .node_type_id(name)
                .ok_or_else(|| KgError::UnknownNodeType { name: name.clone() })
        })
        .collect::<Result<_, _>>()?;
    let relation_map: Vec<RelationId> = test_kg
        .schema()
        .relations()
        .iter()
        .map(|def| {
            schema
                .relation_id(&def.name)
                .ok_or_else(|| KgError::UnknownRelation {
                    name: def.name.clone(),
                })
        })
        .collect::<Result<_, _>>()?;
    let test_careaction_relation = test_kg
        .schema()
        .relation_id("encounter-careaction")
        .ok_or(KgError::NotClinical("encounter-careaction"))?;

    let mut nodes: Vec<NodeRecord> = train_kg.nodes().to_vec();
    let mut edges: Vec<Edge> = train_kg.edges().to_vec();
    let seen_count = nodes.len();

    let mut test_to_union = Vec::with_capacity(test_kg.node_count());
    let mut union_index: HashMap<String, NodeId> = train_kg
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| (n.name.clone(), NodeId(i as u32)))
        .collect();

    for record in test_kg.nodes() {
        let mapped_type = type_map[record.node_type.index()];
        if let Some(&id) = union_index.get(&record.name) {
            let train_ty = nodes[id.index()].node_type;
            if train_ty != mapped_type {
                return Err(TrainError::MergedTypeConflict {
                    name: record.name.clone(),
                    train_type: schema.node_type_name(train_ty).to_string(),
                    test_type: test_kg.schema().node_type_name(record.node_type).to_string(),
                });
            }
            test_to_union.push(id);
        } else {
            let id = NodeId(nodes.len() as u32);
            nodes.push(NodeRecord {
                name: record.name.clone(),
                node_type: mapped_type,
            });
            union_index.insert(record.name.clone(), id);
            test_to_union.push(id);
        }
    }

    let mut union_triples: HashSet<(NodeId, RelationId, NodeId)> =
        edges.iter().map(|e| e.triple()).collect();
    for edge in test_kg.edges() {
        if edge.relation == test_careaction_relation {
            continue;
        }
        let mapped = Edge {
            subject: test_to_union[edge.subject.index()],
            relation: relation_map[edge.relation.index()],
            object: test_to_union[edge.object.index()],
            polarity: edge.polarity,
        };
        if union_triples.insert(mapped.triple()) {
            edges.push(mapped);
        }
    }

    Ok(MergedGraph {
        union: KnowledgeGraph::from_raw_parts(schema.clone(), nodes, edges),
        test_to_union,
        seen_count,
    })
}

/// Extends trained parameters to the union graph: new nodes get zero rows.
/// New patient/encounter nodes are frozen-zero by design; a shared-type node
/// unseen in training also stays zero, so it contributes nothing.
fn extend_params(params: &ModelParams, union: &KnowledgeGraph) -> ModelParams {
    let mut extended = params.clone();
    let n_new = union.node_count();
    let d = params.dims.embedding;
    let mut embeddings = crate::nn::Mat::zeros(n_new, d);
    for i in 0..params.dims.nodes {
        embeddings.row_mut(i).copy_from_slice(params.values.embeddings.row(i));
    }
    let schema = union.schema();
    let frozen_nodes: Vec<bool> = (0..n_new)
        .map(|i| {
            let ty = schema.node_type_name(union.node_type(NodeId(i as u32)));
            params.frozen_types.iter().any(|f| f == ty)
        })
        .collect();
    extended.dims.nodes = n_new;
    extended.values.embeddings = embeddings;
    extended.frozen_nodes = frozen_nodes;
    extended
}

/// Predicts the care action of every test encounter.
///
/// Pure function of its inputs: repeated calls agree exactly. Seen-node
/// embeddings are bit-identical to a forward pass over the training graph
/// alone, because the inference mask removes every unseen→seen message.
pub fn predict_care_action(
    params: &ModelParams,
    train_kg: &KnowledgeGraph,
    test_kg: &KnowledgeGraph,
    config: &TrainConfig,
) -> Result<PredictionSet, TrainError> {
    let vocab = ClinicalVocab::resolve(train_kg)?;
    let test_vocab = ClinicalVocab::resolve(test_kg)?;
    let care_actions = vocab.care_action_nodes(train_kg)?;
    let merged = merge_for_inference(train_kg, test_kg)?;
    let union = &merged.union;

    let policy = config.policy.resolve(union.schema())?;
    let mg = build_message_graph(union, &policy);
    let seen: HashSet<NodeId> = (0..merged.seen_count).map(|i| NodeId(i as u32)).collect();
    let masked = apply_inference_mask(&mg, &seen);

    let extended = extend_params(params, union);
    let activations = encoder_forward(&extended, &masked)?;

    // Fallback class for evidence-free encounters: the most frequent
    // training care action (ties to the lowest id).
    let fallback_class = {
        let mut counts = [0usize; 5];
        for edge in train_kg.edges() {
            if edge.relation == vocab.careaction_relation && edge.polarity.is_positive() {
                if let Some(k) = care_actions.iter().position(|&ca| ca == edge.object) {
                    counts[k] += 1;
                }
            }
        }
        let mut best = 0;
        for k in 1..5 {
            if counts[k] > counts[best] {
                best = k;
            }
        }
        best
    };

    let has_evidence: HashSet<NodeId> = test_kg
        .edges()
        .iter()
        .filter(|e| {
            Some(e.relation) == test_vocab.observation_relation
                || Some(e.relation) == test_vocab.condition_relation
        })
        .map(|e| e.subject)
        .collect();

    let truth_by_encounter: HashMap<NodeId, String> = test_kg
        .edges()
        .iter()
        .filter(|e| e.relation == test_vocab.careaction_relation && e.polarity.is_positive())
        .map(|e| (e.subject, test_kg.node_name(e.object).to_string()))
        .collect();

    let mut predictions = Vec::new();
    for encounter in test_kg.nodes_of_type(test_vocab.encounter_type) {
        let union_id = merged.test_to_union[encounter.index()];
        let mut scores = [0.0f64; 5];
        for (k, &ca) in care_actions.iter().enumerate() {
            scores[k] = score_edge(
                &extended,
                &activations,
                union_id,
                vocab.careaction_relation,
                ca,
            )
            .score;
        }
        let no_evidence = !has_evidence.contains(&encounter);
        let best = if no_evidence {
            fallback_class
        } else {
            // Argmax over the five scores; ties go to the lowest care-action id.
            let mut order: Vec<usize> = (0..5).collect();
            order.sort_by(|&a, &b| {
                scores[b]
                    .partial_cmp(&scores[a])
                    .unwrap()
                    .then(care_actions[a].cmp(&care_actions[b]))
            });
            order[0]
        };
        predictions.push(Prediction {
            encounter: test_kg.node_name(encounter).to_string(),
            predicted: CARE_ACTION_CLASSES[best].to_string(),
            truth: truth_by_encounter.get(&encounter).cloned(),
            scores,
            no_evidence,
        });
    }

    Ok(PredictionSet { predictions })
}

/// Writes predictions as CSV:
/// `encounter,predicted,truth,score_wellness,…,score_emergency`.
pub fn write_predictions<W: std::io::Write>(
    set: &PredictionSet,
    writer: W,
) -> Result<(), KgError> {
    let mut csv_writer = csv::WriterBuilder::new().from_writer(writer);
    let mut header = vec![
        "encounter".to_string(),
        "predicted".to_string(),
        "truth".to_string(),
    ];
    header.extend(CARE_ACTION_CLASSES.iter().map(|c| format!("score_{c}")));
    csv_writer.write_record(&header)?;
    for p in &set.predictions {
        let mut row = vec![
            p.encounter.clone(),
            p.predicted.clone(),
            p.truth.clone().unwrap_or_default(),
        ];
        row.extend(p.scores.iter().map(|s| format!("{s}")));
        csv_writer.write_record(&row)?;
    }
    csv_writer.flush().map_err(KgError::from)?;
    Ok(())
}
