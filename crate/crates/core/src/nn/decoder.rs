//! Bilinear-diagonal edge scoring.
//!
//! The logit of edge (i, r, j) is `z = Σ_k e_i[k] · w_r[k] · e_j[k]` over the
//! final-layer embeddings; the score is the logistic sigmoid of z.

use super::encoder::LayerActivations;
use super::params::ModelParams;
use crate::kg::{NodeId, RelationId};

/// Numerically safe logistic sigmoid.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Score of one candidate edge: the raw logit plus the (0,1) probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeScore {
    pub logit: f64,
    pub score: f64,
}

impl EdgeScore {
    /// The thresholded existence decision: does the model call this a link?
    pub fn exists(&self, threshold: f64) -> bool {
        self.score > threshold
    }
}

/// Raw logit of (subject, relation, object) under the final embeddings.
pub fn edge_logit(
    params: &ModelParams,
    activations: &LayerActivations,
    subject: NodeId,
    relation: RelationId,
    object: NodeId,
) -> f64 {
    let embeddings = activations.final_layer();
    let s = embeddings.row(subject.index());
    let o = embeddings.row(object.index());
    let w = params.values.decoder.row(relation.index());
    let mut z = 0.0;
    for k in 0..w.len() {
        z += s[k] * w[k] * o[k];
    }
    z
}

pub fn score_edge(
    params: &ModelParams,
    activations: &LayerActivations,
    subject: NodeId,
    relation: RelationId,
    object: NodeId,
) -> EdgeScore {
    let logit = edge_logit(params, activations, subject, relation, object);
    EdgeScore {
        logit,
        score: sigmoid(logit),
    }
}
