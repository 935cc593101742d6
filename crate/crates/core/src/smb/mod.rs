//! The Slowly Moving Bandit learner.
//!
//! Each round the learner plays an arm drawn lazily from its current
//! distribution, conditioned on the subtree chosen in the previous round,
//! then rebalances a random level of the tree so that all subtree marginals
//! at or above that level stay fixed under the multiplicative update. The
//! result is Exp3-like regret with an expected movement cost of
//! `O((T/k) log k)` under the tree metric.

pub mod estimator;
mod learner;
pub mod weights;

pub use estimator::{
    assemble_estimator, balancing_vector, balancing_vectors, base_estimate, detect_bad_event,
    draw_round_randomness, rebalance_level, sample_action, BalancingVector, Estimator,
    RoundRandomness, SubtreeMass,
};
pub use learner::{default_eta, RoundTrace, Smb, SmbState, SparseSmbState, TraceLine};
pub use weights::{DenseWeights, SumTreeWeights, Weights};

/// Dense reference multiplicative update `p(i) e^{-η ℓ(i)} / Z`, in log space.
pub fn apply_update(p: &[f64], losses: &[f64], eta: f64) -> crate::Result<Vec<f64>> {
    let log_w: Vec<f64> = p
        .iter()
        .zip(losses)
        .map(|(p, l)| p.ln() - eta * l)
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm = max + log_w.iter().map(|w| (w - max).exp()).sum::<f64>().ln();
    log_w
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let v = (w - norm).exp();
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(crate::Error::NumericalUnderflow { arm: i + 1 })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_update_examples() {
        let p = vec![0.1, 0.2, 0.3, 0.4];
        let same = apply_update(&p, &[0.0; 4], 0.3).unwrap();
        assert!(same.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-15));
        let shifted = apply_update(&p, &[2.5; 4], 0.3).unwrap();
        assert!(shifted.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-15));
    }
}
