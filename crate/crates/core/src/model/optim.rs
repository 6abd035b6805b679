use super::TrainConfig;
use crate::{FerError, Result};

/// Multi-step decay: `lr0 · γ^k` with `k` the number of milestones at or
/// before `epoch`. Computed as `lr0 / (1/γ)^k` so a decade schedule returns
/// 1e-4, 1e-5, ... exactly.
pub fn lr_schedule(epoch: usize, config: &TrainConfig) -> Result<f64> {
    if epoch >= config.epochs {
        return Err(FerError::invalid(format!(
            "epoch {epoch} outside 0..{}",
            config.epochs
        )));
    }
    let passed = config.milestones.iter().filter(|&&m| m <= epoch).count();
    Ok(config.lr0 / config.gamma.recip().powi(passed as i32))
}

/// Heavy-ball update in place: `v ← μ·v + g`, `p ← p − lr·v`.
pub fn sgd_momentum_step(params: &mut [f64], grads: &[f64], velocity: &mut [f64], lr: f64, momentum: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != velocity.len() {
        return Err(FerError::invalid(format!(
            "parameter/gradient/velocity lengths differ: {} {} {}",
            params.len(),
            grads.len(),
            velocity.len()
        )));
    }
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v + g;
        *p -= lr * *v;
    }
    Ok(())
}
