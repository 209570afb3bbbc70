//! Adam with L2 weight decay folded into the gradient, plus the staged
//! learning-rate schedule used by the default training recipe.

use super::params::{ModelParams, ParamSet};
use super::NnError;
use serde::{Deserialize, Serialize};

/// Piecewise-constant learning rate: each stage applies up to and including
/// its boundary epoch. Epochs are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    stages: Vec<(usize, f64)>,
}

impl LrSchedule {
    pub fn new(stages: Vec<(usize, f64)>) -> Self {
        LrSchedule { stages }
    }

    pub fn stages(&self) -> &[(usize, f64)] {
        &self.stages
    }

    /// Last epoch the schedule covers.
    pub fn max_epoch(&self) -> usize {
        self.stages.last().map(|&(e, _)| e).unwrap_or(0)
    }

    pub fn lr_at_epoch(&self, epoch: usize) -> Result<f64, NnError> {
        if epoch == 0 {
            return Err(NnError::EpochOutOfRange {
                epoch,
                max: self.max_epoch(),
            });
        }
        for &(boundary, lr) in &self.stages {
            if epoch <= boundary {
                return Ok(lr);
            }
        }
        Err(NnError::EpochOutOfRange {
            epoch,
            max: self.max_epoch(),
        })
    }
}

impl Default for LrSchedule {
    /// 0.1 for epochs 1–100, 0.01 for 101–700, 0.001 for 701–1000.
    fn default() -> Self {
        LrSchedule::new(vec![(100, 0.1), (700, 0.01), (1000, 0.001)])
    }
}

/// Learning rate of the default schedule at `epoch`.
pub fn lr_at_epoch(epoch: usize) -> Result<f64, NnError> {
    LrSchedule::default().lr_at_epoch(epoch)
}

/// Optimizer state: first/second moment accumulators shaped like the
/// parameters, the step counter, and the hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: ParamSet,
    pub second_moment: ParamSet,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub schedule: LrSchedule,
}

impl AdamState {
    pub fn new(params: &ModelParams, weight_decay: f64, schedule: LrSchedule) -> Self {
        AdamState {
            first_moment: ParamSet::zeros_like(&params.values),
            second_moment: ParamSet::zeros_like(&params.values),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
            schedule,
        }
    }
}

/// One full-batch Adam step at `epoch` (1-based).
///
/// Weight decay enters as `g ← g + λθ`; moments are bias-corrected; frozen
/// embedding rows are never touched.
pub fn adam_step(
    params: &mut ModelParams,
    gradients: &ParamSet,
    state: &mut AdamState,
    epoch: usize,
) -> Result<(), NnError> {
    let lr = state.schedule.lr_at_epoch(epoch)?;
    if gradients.flat_len() != params.values.flat_len() {
        return Err(NnError::BadDimensions {
            detail: format!(
                "gradient has {} scalars, params have {}",
                gradients.flat_len(),
                params.values.flat_len()
            ),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - state.beta1.powi(t);
    let bias2 = 1.0 - state.beta2.powi(t);
    let embedding_cols = params.dims.embedding;
    let frozen = params.frozen_nodes.clone();

    let mut theta_blocks = params.values.blocks_mut();
    let grad_blocks = gradients.blocks();
    let mut m_blocks = state.first_moment.blocks_mut();
    let mut v_blocks = state.second_moment.blocks_mut();

    for b in 0..theta_blocks.len() {
        let theta = &mut theta_blocks[b];
        let grad = grad_blocks[b];
        let m = &mut m_blocks[b];
        let v = &mut v_blocks[b];
        for i in 0..theta.len() {
            if b == 0 && frozen[i / embedding_cols] {
                continue;
            }
            let g = grad[i] + state.weight_decay * theta[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}
