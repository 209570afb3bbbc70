//! Central finite-difference verification of the analytic gradients.

use super::loss::{loss_and_gradients, loss_only};
use super::params::{ModelParams, ParamSet};
use super::NnError;
use crate::connectivity::MessageGraph;
use crate::kg::Edge;

/// Outcome of a gradient check: the worst relative disagreement and where
/// it occurred.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Identity of the worst-disagreeing parameter, e.g. `layer 1 self-loop[2][0]`.
    pub worst_parameter: String,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub parameters_checked: usize,
}

/// Perturbs every non-frozen scalar by ±h and compares the centered
/// difference quotient against the analytic gradient.
///
/// Relative error uses the denominator `max(|analytic|, |numeric|, 1e-8)`.
pub fn finite_difference_check(
    params: &ModelParams,
    mg: &MessageGraph,
    loss_edges: &[Edge],
    h: f64,
) -> Result<GradCheckReport, NnError> {
    let (_, analytic) = loss_and_gradients(params, mg, loss_edges)?;
    finite_difference_check_against(params, mg, loss_edges, h, &analytic)
}

/// Same check, against an externally supplied analytic gradient.
pub fn finite_difference_check_against(
    params: &ModelParams,
    mg: &MessageGraph,
    loss_edges: &[Edge],
    h: f64,
    analytic: &ParamSet,
) -> Result<GradCheckReport, NnError> {
    assert!(h > 0.0, "step size must be positive");
    let mut work = params.clone();
    let flat_len = params.values.flat_len();

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_parameter: String::from("none"),
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        parameters_checked: 0,
    };

    for index in 0..flat_len {
        if params.is_frozen_slot(index) {
            continue;
        }
        work.values.add_flat(index, h);
        let loss_plus = loss_only(&work, mg, loss_edges)?;
        work.values.add_flat(index, -2.0 * h);
        let loss_minus = loss_only(&work, mg, loss_edges)?;
        work.values.add_flat(index, h);

        let numeric = (loss_plus - loss_minus) / (2.0 * h);
        let analytic_value = analytic.get_flat(index);
        let denom = analytic_value.abs().max(numeric.abs()).max(1e-8);
        let relative = (analytic_value - numeric).abs() / denom;
        report.parameters_checked += 1;
        if relative > report.max_relative_error {
            report.max_relative_error = relative;
            report.worst_parameter = params.values.describe_flat(index);
            report.worst_analytic = analytic_value;
            report.worst_numeric = numeric;
        }
    }
    Ok(report)
}
