//! Model parameters: initial embeddings, per-layer relational weights, and
//! the bilinear decoder vectors.

use super::matrix::Mat;
use super::NnError;
use crate::kg::KnowledgeGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Weights of one encoder layer: a self-loop transform plus one transform
/// per message relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub self_loop: Mat,
    pub per_relation: Vec<Mat>,
}

/// The raw numeric content of a model (or of a gradient, which has the same
/// shape). Blocks are ordered: embeddings, then each layer (self-loop
/// first, then relation transforms in id order), then the decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    /// n×d initial embedding table e⁽⁰⁾.
    pub embeddings: Mat,
    /// One entry per encoder layer.
    pub layers: Vec<LayerWeights>,
    /// R×d decoder table; row r is the diagonal of the bilinear form for
    /// KG relation r.
    pub decoder: Mat,
}

impl ParamSet {
    pub fn zeros_like(other: &ParamSet) -> Self {
        let mut out = other.clone();
        out.embeddings.fill(0.0);
        for layer in &mut out.layers {
            layer.self_loop.fill(0.0);
            for w in &mut layer.per_relation {
                w.fill(0.0);
            }
        }
        out.decoder.fill(0.0);
        out
    }

    pub fn zeros(n: usize, d: usize, layers: usize, message_relations: usize, kg_relations: usize) -> Self {
        ParamSet {
            embeddings: Mat::zeros(n, d),
            layers: (0..layers)
                .map(|_| LayerWeights {
                    self_loop: Mat::zeros(d, d),
                    per_relation: (0..message_relations).map(|_| Mat::zeros(d, d)).collect(),
                })
                .collect(),
            decoder: Mat::zeros(kg_relations, d),
        }
    }

    /// Flat scalar blocks in canonical order, with human-readable labels.
    pub fn block_labels(&self) -> Vec<String> {
        let mut labels = vec!["embeddings".to_string()];
        for (l, layer) in self.layers.iter().enumerate() {
            labels.push(format!("layer {} self-loop", l + 1));
            for rho in 0..layer.per_relation.len() {
                labels.push(format!("layer {} relation {}", l + 1, rho));
            }
        }
        labels.push("decoder".to_string());
        labels
    }

    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut blocks = vec![self.embeddings.data()];
        for layer in &self.layers {
            blocks.push(layer.self_loop.data());
            for w in &layer.per_relation {
                blocks.push(w.data());
            }
        }
        blocks.push(self.decoder.data());
        blocks
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut blocks: Vec<&mut [f64]> = vec![self.embeddings.data_mut()];
        for layer in &mut self.layers {
            blocks.push(layer.self_loop.data_mut());
            for w in &mut layer.per_relation {
                blocks.push(w.data_mut());
            }
        }
        blocks.push(self.decoder.data_mut());
        blocks
    }

    pub fn flat_len(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn get_flat(&self, index: usize) -> f64 {
        let (block, offset) = self.locate(index);
        self.blocks()[block][offset]
    }

    pub fn add_flat(&mut self, index: usize, delta: f64) {
        let (block, offset) = self.locate(index);
        self.blocks_mut()[block][offset] += delta;
    }

    fn locate(&self, mut index: usize) -> (usize, usize) {
        for (b, block) in self.blocks().iter().enumerate() {
            if index < block.len() {
                return (b, index);
            }
            index -= block.len();
        }
        panic!("flat index out of range");
    }

    /// Human-readable identity of a flat slot, for diagnostics.
    pub fn describe_flat(&self, index: usize) -> String {
        let (block, offset) = self.locate(index);
        let label = &self.block_labels()[block];
        let cols = if block == 0 {
            self.embeddings.cols()
        } else if block == self.blocks().len() - 1 {
            self.decoder.cols()
        } else {
            self.layers[0].self_loop.cols()
        };
        format!("{label}[{}][{}]", offset / cols, offset % cols)
    }
}

/// Dimensions shared by params, gradients, and optimizer state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub nodes: usize,
    pub embedding: usize,
    pub layers: usize,
    pub message_relations: usize,
    pub kg_relations: usize,
}

/// Trainable model state plus the frozen-row bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dims: Dims,
    /// Node types whose initial embeddings are pinned to zero.
    pub frozen_types: Vec<String>,
    /// Per-node flag derived from `frozen_types`.
    pub frozen_nodes: Vec<bool>,
    pub values: ParamSet,
}

impl ModelParams {
    /// Initializes a model for `kg` with every weight drawn i.i.d. uniform
    /// on [−a, a), a = 1/√d. Rows of frozen node types stay exactly zero.
    /// Deterministic for a fixed seed.
    pub fn init(
        kg: &KnowledgeGraph,
        embedding_dim: usize,
        layers: usize,
        message_relations: usize,
        frozen_types: &[String],
        seed: u64,
    ) -> Result<Self, NnError> {
        if embedding_dim == 0 || layers == 0 {
            return Err(NnError::BadDimensions {
                detail: format!("d={embedding_dim}, L={layers}; both must be at least 1"),
            });
        }
        let schema = kg.schema();
        let mut frozen_type_ids = Vec::new();
        for name in frozen_types {
            let id = schema
                .node_type_id(name)
                .ok_or_else(|| NnError::UnknownNodeType { name: name.clone() })?;
            frozen_type_ids.push(id);
        }
        let frozen_nodes: Vec<bool> = (0..kg.node_count())
            .map(|i| frozen_type_ids.contains(&kg.node_type(crate::kg::NodeId(i as u32))))
            .collect();

        let dims = Dims {
            nodes: kg.node_count(),
            embedding: embedding_dim,
            layers,
            message_relations,
            kg_relations: schema.relation_count(),
        };
        let mut values = ParamSet::zeros(
            dims.nodes,
            dims.embedding,
            dims.layers,
            dims.message_relations,
            dims.kg_relations,
        );

        let bound = 1.0 / (embedding_dim as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = move |slot: &mut f64| {
            *slot = bound * (2.0 * rng.random::<f64>() - 1.0);
        };

        for (node, frozen) in frozen_nodes.iter().enumerate() {
            if *frozen {
                continue;
            }
            for slot in values.embeddings.row_mut(node) {
                draw(slot);
            }
        }
        for layer in &mut values.layers {
            for slot in layer.self_loop.data_mut() {
                draw(slot);
            }
            for w in &mut layer.per_relation {
                for slot in w.data_mut() {
                    draw(slot);
                }
            }
        }
        for slot in values.decoder.data_mut() {
            draw(slot);
        }

        Ok(ModelParams {
            dims,
            frozen_types: frozen_types.to_vec(),
            frozen_nodes,
            values,
        })
    }

    /// Whether a flat slot belongs to a frozen embedding row.
    pub fn is_frozen_slot(&self, flat_index: usize) -> bool {
        let embedding_len = self.dims.nodes * self.dims.embedding;
        flat_index < embedding_len && self.frozen_nodes[flat_index / self.dims.embedding]
    }

    /// FNV-1a over every parameter's bit pattern, in block order.
    pub fn checksum(&self) -> u64 {
        let mut hash: u64 = 0xcbf29ce484222325;
        for block in self.values.blocks() {
            for v in block.iter() {
                for byte in v.to_le_bytes() {
                    hash ^= byte as u64;
                    hash = hash.wrapping_mul(0x100000001b3);
                }
            }
        }
        hash
    }
}
