//! Dense tensors, a reverse-mode tape, Adam and the pairwise objective.

mod adam;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use tape::{two_way_softmax, Gradients, Tape, Var};
pub use tensor::Tensor;

use crate::error::{Error, Result};

/// Probabilities are clamped to `[LOG_CLAMP, 1 - LOG_CLAMP]` before the log.
pub const LOG_CLAMP: f64 = 1e-7;

/// Binary cross-entropy over gold-forward edge probabilities, recorded on the tape.
///
/// Each pair contributes only `-ln p_ij` for its gold-forward edge: the reverse
/// edge carries `p_ji = 1 - p_ij`, so its term `-ln(1 - p_ji)` is the same value.
pub fn bce_pairwise_loss(tape: &mut Tape, gold_forward: Var, eps: f64) -> Result<Var> {
    tape.neg_log_mean(gold_forward, eps)
}

/// Same objective evaluated directly on plain values.
pub fn bce_pairwise_value(gold_forward: &[f64], eps: f64) -> Result<f64> {
    if gold_forward.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    let total: f64 = gold_forward
        .iter()
        .map(|&p| -p.clamp(eps, 1.0 - eps).ln())
        .sum();
    Ok(total / gold_forward.len() as f64)
}
