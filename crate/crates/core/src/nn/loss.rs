//! Binary cross-entropy over selected edges, with exact reverse-mode
//! gradients through the decoder and every encoder layer.
//!
//! The loss over a batch of labeled edges is the mean of
//! `−[y·log σ(z) + (1−y)·log(1−σ(z))]`, evaluated in the logit form
//! `max(z,0) − y·z + log(1 + exp(−|z|))` so large logits cannot overflow.
//! Mean (not sum) reduction keeps learning-rate settings comparable across
//! dataset sizes.

use super::decoder::sigmoid;
use super::encoder::{encoder_forward, LayerActivations};
use super::matrix::Mat;
use super::params::{ModelParams, ParamSet};
use super::NnError;
use crate::connectivity::MessageGraph;
use crate::kg::Edge;

/// Stable binary cross-entropy of a logit against a 0/1 label.
pub fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

/// Loss alone, skipping the backward pass.
pub fn loss_only(
    params: &ModelParams,
    mg: &MessageGraph,
    loss_edges: &[Edge],
) -> Result<f64, NnError> {
    if loss_edges.is_empty() {
        return Err(NnError::EmptyLossEdges);
    }
    let activations = encoder_forward(params, mg)?;
    let final_embeddings = activations.final_layer();
    let d = params.dims.embedding;
    let mut loss_sum = 0.0;
    for edge in loss_edges {
        let e_s = final_embeddings.row(edge.subject.index());
        let e_o = final_embeddings.row(edge.object.index());
        let w = params.values.decoder.row(edge.relation.index());
        let mut z = 0.0;
        for k in 0..d {
            z += e_s[k] * w[k] * e_o[k];
        }
        loss_sum += bce_from_logit(z, edge.polarity.label());
    }
    Ok(loss_sum / loss_edges.len() as f64)
}

/// Full-batch loss and exact gradients over `loss_edges`.
///
/// Gradients are returned shaped like the parameters; frozen embedding rows
/// receive zero gradient. Accumulation follows the message graph's canonical
/// edge order, so repeated calls are bit-identical.
pub fn loss_and_gradients(
    params: &ModelParams,
    mg: &MessageGraph,
    loss_edges: &[Edge],
) -> Result<(f64, ParamSet), NnError> {
    let activations = encoder_forward(params, mg)?;
    loss_and_gradients_with_activations(params, mg, loss_edges, &activations)
}

pub(crate) fn loss_and_gradients_with_activations(
    params: &ModelParams,
    mg: &MessageGraph,
    loss_edges: &[Edge],
    activations: &LayerActivations,
) -> Result<(f64, ParamSet), NnError> {
    if loss_edges.is_empty() {
        return Err(NnError::EmptyLossEdges);
    }
    let n = params.dims.nodes;
    let d = params.dims.embedding;
    let total_layers = params.dims.layers;
    let batch = loss_edges.len() as f64;

    let mut grads = ParamSet::zeros_like(&params.values);
    let final_embeddings = activations.final_layer();

    // Decoder pass: loss, ∂L/∂w_r, and ∂L/∂e(L).
    let mut grad_output = Mat::zeros(n, d);
    let mut loss_sum = 0.0;
    for edge in loss_edges {
        if edge.subject.index() >= n || edge.object.index() >= n {
            return Err(NnError::BadDimensions {
                detail: format!("loss edge references node {} outside model", edge.subject.0.max(edge.object.0)),
            });
        }
        if edge.relation.index() >= params.dims.kg_relations {
            return Err(NnError::BadDimensions {
                detail: format!("loss edge references relation {} outside model", edge.relation.0),
            });
        }
        let s = edge.subject.index();
        let o = edge.object.index();
        let r = edge.relation.index();
        let y = edge.polarity.label();

        let e_s = final_embeddings.row(s);
        let e_o = final_embeddings.row(o);
        let w = params.values.decoder.row(r);
        let mut z = 0.0;
        for k in 0..d {
            z += e_s[k] * w[k] * e_o[k];
        }
        loss_sum += bce_from_logit(z, y);

        let g = (sigmoid(z) - y) / batch;
        for k in 0..d {
            grads.decoder.row_mut(r)[k] += g * e_s[k] * e_o[k];
        }
        for k in 0..d {
            grad_output.row_mut(s)[k] += g * w[k] * e_o[k];
        }
        for k in 0..d {
            grad_output.row_mut(o)[k] += g * w[k] * e_s[k];
        }
    }
    let loss = loss_sum / batch;

    // Layer passes, last to first.
    for l in (1..=total_layers).rev() {
        let weights = &params.values.layers[l - 1];
        let weight_grads = &mut grads.layers[l - 1];
        let prev = activations.layer(l - 1);

        // ∂L/∂pre: rectifier slope except on the final layer. The leaky
        // rectifier preserves sign, so the stored output recovers the mask.
        let mut pre_grad = grad_output;
        if l < total_layers {
            let out = activations.layer(l);
            for (slot, &value) in pre_grad.data_mut().iter_mut().zip(out.data()) {
                if value <= 0.0 {
                    *slot *= super::encoder::LEAKY_SLOPE;
                }
            }
        }

        let mut grad_prev = Mat::zeros(n, d);
        for i in 0..n {
            let p = pre_grad.row(i);
            weight_grads.self_loop.add_outer(p, prev.row(i), 1.0);
            weights
                .self_loop
                .matvec_transpose_acc(p, 1.0, grad_prev.row_mut(i));
        }
        for edge in mg.edges() {
            let c = mg.in_degree(edge.target, edge.relation) as f64;
            let alpha = 1.0 / c;
            let rho = edge.relation.index();
            let p = pre_grad.row(edge.target.index());
            weight_grads.per_relation[rho].add_outer(p, prev.row(edge.source.index()), alpha);
            weights.per_relation[rho].matvec_transpose_acc(
                p,
                alpha,
                grad_prev.row_mut(edge.source.index()),
            );
        }
        grad_output = grad_prev;
    }

    grads.embeddings = grad_output;
    for (node, frozen) in params.frozen_nodes.iter().enumerate() {
        if *frozen {
            grads.embeddings.row_mut(node).fill(0.0);
        }
    }

    Ok((loss, grads))
}
