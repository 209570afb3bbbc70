//! The differentiable numeric core: relational graph-convolution encoder,
//! bilinear-diagonal decoder, stable cross-entropy with exact reverse-mode
//! gradients, a finite-difference checker, and Adam with a staged learning
//! rate.

mod adam;
mod checkpoint;
mod decoder;
mod encoder;
mod gradcheck;
mod loss;
mod matrix;
mod params;

pub use adam::{adam_step, lr_at_epoch, AdamState, LrSchedule};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use decoder::{edge_logit, score_edge, sigmoid, EdgeScore};
pub use encoder::{encoder_forward, LayerActivations, LEAKY_SLOPE};
pub use gradcheck::{finite_difference_check, finite_difference_check_against, GradCheckReport};
pub use loss::{bce_from_logit, loss_and_gradients, loss_only};
pub use matrix::Mat;
pub use params::{Dims, LayerWeights, ModelParams, ParamSet};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("dimension mismatch: {detail}")]
    BadDimensions { detail: String },
    #[error("loss requires at least one edge")]
    EmptyLossEdges,
    #[error("epoch {epoch} outside the schedule (valid range 1..={max})")]
    EpochOutOfRange { epoch: usize, max: usize },
    #[error("frozen type `{name}` is not in the schema")]
    UnknownNodeType { name: String },
    #[error("checkpoint version {found} unsupported (this build reads {supported})")]
    CheckpointVersion { found: u32, supported: u32 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint encoding: {0}")]
    Json(#[from] serde_json::Error),
}
