//! Versioned JSON checkpoints.
//!
//! A checkpoint carries the model dimensions, the node/relation vocabularies
//! it was trained against, and flat little-endian-ordered arrays for every
//! parameter block. f64 values are written in shortest round-trip decimal
//! form, so save → load → save reproduces the file byte for byte.

use super::matrix::Mat;
use super::params::{Dims, LayerWeights, ModelParams, ParamSet};
use super::NnError;
use crate::kg::KnowledgeGraph;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub nodes: usize,
    pub embedding_dim: usize,
    pub layers: usize,
    pub message_relations: usize,
    pub kg_relations: usize,
    pub frozen_types: Vec<String>,
    pub node_names: Vec<String>,
    pub node_type_names: Vec<String>,
    pub relation_names: Vec<String>,
    pub initial_embeddings: Vec<f64>,
    pub layer_self_loop: Vec<Vec<f64>>,
    pub layer_relation_weights: Vec<Vec<Vec<f64>>>,
    pub decoder: Vec<Vec<f64>>,
}

impl Checkpoint {
    pub fn from_params(params: &ModelParams, kg: &KnowledgeGraph) -> Self {
        let schema = kg.schema();
        Checkpoint {
            version: CHECKPOINT_VERSION,
            nodes: params.dims.nodes,
            embedding_dim: params.dims.embedding,
            layers: params.dims.layers,
            message_relations: params.dims.message_relations,
            kg_relations: params.dims.kg_relations,
            frozen_types: params.frozen_types.clone(),
            node_names: kg.nodes().iter().map(|n| n.name.clone()).collect(),
            node_type_names: kg
                .nodes()
                .iter()
                .map(|n| schema.node_type_name(n.node_type).to_string())
                .collect(),
            relation_names: schema.relations().iter().map(|r| r.name.clone()).collect(),
            initial_embeddings: params.values.embeddings.data().to_vec(),
            layer_self_loop: params
                .values
                .layers
                .iter()
                .map(|l| l.self_loop.data().to_vec())
                .collect(),
            layer_relation_weights: params
                .values
                .layers
                .iter()
                .map(|l| l.per_relation.iter().map(|w| w.data().to_vec()).collect())
                .collect(),
            decoder: (0..params.dims.kg_relations)
                .map(|r| params.values.decoder.row(r).to_vec())
                .collect(),
        }
    }

    /// Rebuilds the parameters. The frozen-node flags are re-derived from
    /// the stored vocabularies.
    pub fn into_params(self) -> Result<ModelParams, NnError> {
        let dims = Dims {
            nodes: self.nodes,
            embedding: self.embedding_dim,
            layers: self.layers,
            message_relations: self.message_relations,
            kg_relations: self.kg_relations,
        };
        let expect = |name: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(NnError::BadDimensions {
                    detail: format!("checkpoint {name}: got {got} values, expected {want}"),
                })
            }
        };
        expect(
            "initial_embeddings",
            self.initial_embeddings.len(),
            dims.nodes * dims.embedding,
        )?;
        expect("layer_self_loop", self.layer_self_loop.len(), dims.layers)?;
        expect(
            "layer_relation_weights",
            self.layer_relation_weights.len(),
            dims.layers,
        )?;
        expect("decoder", self.decoder.len(), dims.kg_relations)?;
        expect("node_names", self.node_names.len(), dims.nodes)?;
        expect("node_type_names", self.node_type_names.len(), dims.nodes)?;

        let mut layers = Vec::with_capacity(dims.layers);
        for (self_loop, relations) in self
            .layer_self_loop
            .into_iter()
            .zip(self.layer_relation_weights)
        {
            expect("self-loop block", self_loop.len(), dims.embedding * dims.embedding)?;
            expect("relation blocks", relations.len(), dims.message_relations)?;
            let mut per_relation = Vec::with_capacity(dims.message_relations);
            for block in relations {
                expect("relation block", block.len(), dims.embedding * dims.embedding)?;
                per_relation.push(Mat::from_vec(dims.embedding, dims.embedding, block));
            }
            layers.push(LayerWeights {
                self_loop: Mat::from_vec(dims.embedding, dims.embedding, self_loop),
                per_relation,
            });
        }
        let mut decoder = Mat::zeros(dims.kg_relations, dims.embedding);
        for (r, row) in self.decoder.iter().enumerate() {
            expect("decoder row", row.len(), dims.embedding)?;
            decoder.row_mut(r).copy_from_slice(row);
        }

        let frozen_nodes: Vec<bool> = self
            .node_type_names
            .iter()
            .map(|ty| self.frozen_types.contains(ty))
            .collect();

        Ok(ModelParams {
            dims,
            frozen_types: self.frozen_types,
            frozen_nodes,
            values: ParamSet {
                embeddings: Mat::from_vec(dims.nodes, dims.embedding, self.initial_embeddings),
                layers,
                decoder,
            },
        })
    }
}

pub fn save_checkpoint<W: Write>(
    params: &ModelParams,
    kg: &KnowledgeGraph,
    mut writer: W,
) -> Result<(), NnError> {
    let checkpoint = Checkpoint::from_params(params, kg);
    let bytes = serde_json::to_vec(&checkpoint)?;
    writer.write_all(&bytes)?;
    Ok(())
}

pub fn load_checkpoint<R: Read>(mut reader: R) -> Result<Checkpoint, NnError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let checkpoint: Checkpoint = serde_json::from_slice(&bytes)?;
    if checkpoint.version != CHECKPOINT_VERSION {
        return Err(NnError::CheckpointVersion {
            found: checkpoint.version,
            supported: CHECKPOINT_VERSION,
        });
    }
    Ok(checkpoint)
}
