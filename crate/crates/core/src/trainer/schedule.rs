//! Constraint-weight annealing and learning-rate warmup.

use std::f64::consts::PI;

/// Cyclical cosine annealing: within each of `cycles` equal cycles the weight
/// rises from 0 at the cycle start towards `w_max` at its end.
pub fn anneal_weight(step: usize, total_steps: usize, w_max: f64, cycles: usize) -> f64 {
    if total_steps == 0 || cycles == 0 {
        return w_max;
    }
    let position = step as f64 * cycles as f64 / total_steps as f64;
    let tau = position - position.floor();
    w_max * (1.0 - (PI * tau).cos()) / 2.0
}

/// Linear ramp from 0 to `base_lr` over the first `⌈fraction·total_steps⌉`
/// steps, constant afterwards.
pub fn warmup_lr(step: usize, total_steps: usize, base_lr: f64, fraction: f64) -> f64 {
    let warm = (fraction * total_steps as f64).ceil() as usize;
    if warm == 0 || step >= warm {
        base_lr
    } else {
        base_lr * step as f64 / warm as f64
    }
}
