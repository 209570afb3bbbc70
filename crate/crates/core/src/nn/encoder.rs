//! Relational graph-convolution forward pass.
//!
//! Layer update, for each node i:
//!
//! ```text
//! pre_i = W0 · e_i  +  Σ_{(j→i, ρ)}  (1 / c[i,ρ]) · W_ρ · e_j
//! ```
//!
//! with a leaky rectifier between layers and no activation after the last
//! one, so final embeddings can carry sign. The leak matters: without
//! biases, a node whose class signal rides on a single embedding row can
//! otherwise get pinned at exactly zero and never receive gradient again.
//! LeakyReLU(0) = 0, so frozen zero rows still stay exactly zero through
//! any depth. Message edges are aggregated in the message graph's canonical
//! (target, relation, source) order, which makes the floating-point sums,
//! and therefore the whole forward pass, reproducible bit for bit.

/// Negative-side slope of the inter-layer rectifier.
pub const LEAKY_SLOPE: f64 = 0.01;

use super::matrix::Mat;
use super::params::ModelParams;
use super::NnError;
use crate::connectivity::MessageGraph;

/// Per-layer embedding matrices e⁽⁰⁾ … e⁽ᴸ⁾, kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivations {
    layers: Vec<Mat>,
}

impl LayerActivations {
    pub fn layer(&self, l: usize) -> &Mat {
        &self.layers[l]
    }

    /// The encoder output e⁽ᴸ⁾ used by the decoder.
    pub fn final_layer(&self) -> &Mat {
        self.layers.last().expect("at least e(0)")
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }
}

pub fn encoder_forward(
    params: &ModelParams,
    mg: &MessageGraph,
) -> Result<LayerActivations, NnError> {
    let n = params.dims.nodes;
    let d = params.dims.embedding;
    let total_layers = params.dims.layers;
    if mg.node_count() != n {
        return Err(NnError::BadDimensions {
            detail: format!(
                "message graph has {} nodes, params have {}",
                mg.node_count(),
                n
            ),
        });
    }
    if mg.message_relation_count() != params.dims.message_relations {
        return Err(NnError::BadDimensions {
            detail: format!(
                "message graph has {} message relations, params have {}",
                mg.message_relation_count(),
                params.dims.message_relations
            ),
        });
    }

    let mut layers = Vec::with_capacity(total_layers + 1);
    layers.push(params.values.embeddings.clone());

    for l in 1..=total_layers {
        let weights = &params.values.layers[l - 1];
        let prev = &layers[l - 1];
        let mut next = Mat::zeros(n, d);

        for i in 0..n {
            weights.self_loop.matvec_acc(prev.row(i), 1.0, next.row_mut(i));
        }
        for edge in mg.edges() {
            let c = mg.in_degree(edge.target, edge.relation) as f64;
            let w = &weights.per_relation[edge.relation.index()];
            w.matvec_acc(
                prev.row(edge.source.index()),
                1.0 / c,
                next.row_mut(edge.target.index()),
            );
        }
        if l < total_layers {
            for v in next.data_mut() {
                if *v < 0.0 {
                    *v *= LEAKY_SLOPE;
                }
            }
        }
        layers.push(next);
    }

    Ok(LayerActivations { layers })
}
