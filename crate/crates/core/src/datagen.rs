//! Desk-scale synthetic clinical records.
//!
//! Each patient gets a Poisson-distributed number of encounters. An
//! encounter samples a care action from a skewed prior, then draws its
//! observation/condition items from a mixture: with probability `p_sig` an
//! item comes from the care action's signature set, otherwise from the
//! background vocabulary (the items belonging to no signature). `p_sig`
//! therefore tunes task difficulty continuously between chance (0.0) and
//! perfectly separable (1.0).

use crate::kg::{
    Edge, KgError, KnowledgeGraph, Polarity, Schema, CARE_ACTION_CLASSES,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Kg(#[from] KgError),
}

/// Generator configuration. Defaults produce, at 50 patients, a graph on
/// the order of 1.6k encounters over a vocabulary of 153 observations, 107
/// conditions, and the 5 care actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub patients: usize,
    pub mean_encounters_per_patient: f64,
    pub observation_vocab: usize,
    pub condition_vocab: usize,
    /// Observations reserved per care action as its signature.
    pub signature_observations: usize,
    /// Conditions reserved per care action as its signature.
    pub signature_conditions: usize,
    /// Probability an item is drawn from the encounter's signature set.
    pub p_sig: f64,
    pub min_items_per_encounter: usize,
    pub max_items_per_encounter: usize,
    /// Care-action prior in canonical class order
    /// (wellness, inpatient, outpatient, ambulatory, emergency).
    pub care_action_prior: [f64; 5],
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            patients: 50,
            mean_encounters_per_patient: 32.0,
            observation_vocab: 153,
            condition_vocab: 107,
            signature_observations: 20,
            signature_conditions: 14,
            p_sig: 0.7,
            min_items_per_encounter: 3,
            max_items_per_encounter: 8,
            care_action_prior: [0.45, 0.10, 0.15, 0.25, 0.05],
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let err = |msg: String| Err(GenError::InvalidConfig(msg));
        if self.patients == 0 {
            return err("patients must be positive".into());
        }
        if self.mean_encounters_per_patient <= 0.0 {
            return err("mean encounters per patient must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p_sig) {
            return err(format!("p_sig {} outside [0, 1]", self.p_sig));
        }
        let prior_sum: f64 = self.care_action_prior.iter().sum();
        if (prior_sum - 1.0).abs() > 1e-9 || self.care_action_prior.iter().any(|&p| p < 0.0) {
            return err(format!(
                "care-action prior must be nonnegative and sum to 1 (sum {prior_sum})"
            ));
        }
        if self.min_items_per_encounter == 0 || self.max_items_per_encounter < self.min_items_per_encounter {
            return err(format!(
                "items-per-encounter range {}..={} is invalid",
                self.min_items_per_encounter, self.max_items_per_encounter
            ));
        }
        if 5 * self.signature_observations > self.observation_vocab {
            return err("signature observations exceed the observation vocabulary".into());
        }
        if 5 * self.signature_conditions > self.condition_vocab {
            return err("signature conditions exceed the condition vocabulary".into());
        }
        if self.p_sig > 0.0 && self.signature_observations + self.signature_conditions == 0 {
            return err("p_sig > 0 requires nonempty signature sets".into());
        }
        let background = (self.observation_vocab - 5 * self.signature_observations)
            + (self.condition_vocab - 5 * self.signature_conditions);
        if self.p_sig < 1.0 && background == 0 {
            return err("p_sig < 1 requires a nonempty background vocabulary".into());
        }
        Ok(())
    }
}

/// An item is an observation or condition index in the combined vocabulary:
/// 0..observation_vocab are observations, the rest conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Item(usize);

struct Vocabulary {
    observation_vocab: usize,
    /// Signature items per care action, disjoint by construction.
    signatures: [Vec<Item>; 5],
    /// Items outside every signature.
    background: Vec<Item>,
}

impl Vocabulary {
    fn build(config: &GenConfig) -> Self {
        let mut signatures: [Vec<Item>; 5] = Default::default();
        let mut in_signature =
            vec![false; config.observation_vocab + config.condition_vocab];
        for (action, signature) in signatures.iter_mut().enumerate() {
            let obs_start = action * config.signature_observations;
            for k in 0..config.signature_observations {
                let item = Item(obs_start + k);
                signature.push(item);
                in_signature[item.0] = true;
            }
            let cond_start = config.observation_vocab + action * config.signature_conditions;
            for k in 0..config.signature_conditions {
                let item = Item(cond_start + k);
                signature.push(item);
                in_signature[item.0] = true;
            }
        }
        let background = in_signature
            .iter()
            .enumerate()
            .filter(|(_, &used)| !used)
            .map(|(i, _)| Item(i))
            .collect();
        Vocabulary {
            observation_vocab: config.observation_vocab,
            signatures,
            background,
        }
    }

    fn is_observation(&self, item: Item) -> bool {
        item.0 < self.observation_vocab
    }

    fn item_name(&self, item: Item) -> String {
        if self.is_observation(item) {
            format!("obs{:03}", item.0)
        } else {
            format!("cond{:03}", item.0 - self.observation_vocab)
        }
    }
}

fn sample_poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    // Knuth's product method; fine for desk-scale means.
    let limit = (-mean).exp();
    let mut k = 0usize;
    let mut p = 1.0;
    loop {
        p *= rng.random::<f64>();
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

fn sample_class(rng: &mut ChaCha8Rng, prior: &[f64; 5]) -> usize {
    let roll: f64 = rng.random();
    let mut cumulative = 0.0;
    for (class, &p) in prior.iter().enumerate() {
        cumulative += p;
        if roll < cumulative {
            return class;
        }
    }
    4
}

/// Generates a clinical knowledge graph. Deterministic for a fixed config.
///
/// Positive edges only; run negative synthesis afterwards to add the
/// one-of-five negatives.
pub fn generate_kg(config: &GenConfig) -> Result<KnowledgeGraph, GenError> {
    config.validate()?;
    let vocab = Vocabulary::build(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut kg = KnowledgeGraph::new(Schema::clinical());
    let schema = kg.schema().clone();
    let patient_ty = schema.node_type_id("patient").expect("clinical");
    let encounter_ty = schema.node_type_id("encounter").expect("clinical");
    let observation_ty = schema.node_type_id("observation").expect("clinical");
    let condition_ty = schema.node_type_id("condition").expect("clinical");
    let careaction_ty = schema.node_type_id("careaction").expect("clinical");
    let rel_patient_enc = schema.relation_id("patient-encounter").expect("clinical");
    let rel_observation = schema.relation_id("encounter-observation").expect("clinical");
    let rel_condition = schema.relation_id("encounter-condition").expect("clinical");
    let rel_careaction = schema.relation_id("encounter-careaction").expect("clinical");

    let mut encounter_counter = 0usize;
    for p in 0..config.patients {
        let patient = kg.intern_node(&format!("p{p:04}"), patient_ty)?;
        let encounters = sample_poisson(&mut rng, config.mean_encounters_per_patient).max(1);
        for _ in 0..encounters {
            let encounter = kg.intern_node(&format!("e{encounter_counter:06}"), encounter_ty)?;
            encounter_counter += 1;
            kg.add_edge(Edge {
                subject: patient,
                relation: rel_patient_enc,
                object: encounter,
                polarity: Polarity::Positive,
            })?;

            let class = sample_class(&mut rng, &config.care_action_prior);
            let care_action = kg.intern_node(CARE_ACTION_CLASSES[class], careaction_ty)?;
            kg.add_edge(Edge {
                subject: encounter,
                relation: rel_careaction,
                object: care_action,
                polarity: Polarity::Positive,
            })?;

            let items = rng
                .random_range(config.min_items_per_encounter..=config.max_items_per_encounter);
            for _ in 0..items {
                let item = if rng.random::<f64>() < config.p_sig {
                    let signature = &vocab.signatures[class];
                    signature[rng.random_range(0..signature.len())]
                } else {
                    vocab.background[rng.random_range(0..vocab.background.len())]
                };
                let (ty, relation) = if vocab.is_observation(item) {
                    (observation_ty, rel_observation)
                } else {
                    (condition_ty, rel_condition)
                };
                let node = kg.intern_node(&vocab.item_name(item), ty)?;
                // The same item may be drawn twice for one encounter.
                kg.add_edge_if_absent(Edge {
                    subject: encounter,
                    relation,
                    object: node,
                    polarity: Polarity::Positive,
                })?;
            }
        }
    }
    Ok(kg)
}

/// Generates a dataset and writes it in the triple-table format.
pub fn generate_dataset<W: std::io::Write>(config: &GenConfig, writer: W) -> Result<(), GenError> {
    let kg = generate_kg(config)?;
    crate::kg::write_triple_table(&kg, writer)?;
    Ok(())
}
