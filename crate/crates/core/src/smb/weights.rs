//! Storage backends for the learner's distribution.
//!
//! [`DenseWeights`] keeps log-weights and re-exponentiates every arm after
//! each update; it is the reference path. [`SumTreeWeights`] keeps a
//! heap-shaped tree of subtree totals and touches only the support of the
//! estimator, `A_{d_t}(i_t)`, plus its ancestors.

use serde::{Deserialize, Serialize};

use super::estimator::{pairwise_sum, Estimator, SubtreeMass};
use crate::error::{Error, Result};
use crate::metric_tree::lca_level0;

pub trait Weights: SubtreeMass {
    fn uniform(k: usize) -> Self;

    fn probabilities(&self) -> Vec<f64>;

    /// Multiplicative update `p(i) ← p(i) e^{-η ℓ̃(i)} / Z`. Returns the
    /// number of arms whose stored weight changed.
    fn apply(&mut self, estimator: &Estimator, eta: f64) -> Result<usize>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseWeights {
    log_w: Vec<f64>,
    p: Vec<f64>,
}

impl DenseWeights {
    pub fn from_probabilities(p: &[f64]) -> Self {
        Self {
            log_w: p.iter().map(|x| x.ln()).collect(),
            p: p.to_vec(),
        }
    }
}

impl SubtreeMass for DenseWeights {
    fn arm_count(&self) -> usize {
        self.p.len()
    }

    fn mass(&self, level: u32, block: usize) -> f64 {
        self.p.as_slice().mass(level, block)
    }

    fn prob(&self, arm0: usize) -> f64 {
        self.p[arm0]
    }
}

impl Weights for DenseWeights {
    fn uniform(k: usize) -> Self {
        Self {
            log_w: vec![-(k as f64).ln(); k],
            p: vec![1.0 / k as f64; k],
        }
    }

    fn probabilities(&self) -> Vec<f64> {
        self.p.clone()
    }

    fn apply(&mut self, estimator: &Estimator, eta: f64) -> Result<usize> {
        if estimator.is_zero() {
            return Ok(0);
        }
        let mut touched = 0;
        for (arm0, lw) in self.log_w.iter_mut().enumerate() {
            let v = estimator.at0(arm0);
            if v != 0.0 {
                touched += 1;
            }
            *lw -= eta * v;
        }
        let max = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: Vec<f64> = self.log_w.iter().map(|lw| (lw - max).exp()).collect();
        let log_norm = max + pairwise_sum(&z).ln();
        for (arm0, (lw, p)) in self.log_w.iter_mut().zip(self.p.iter_mut()).enumerate() {
            *lw -= log_norm;
            *p = lw.exp();
            if !(*p > 0.0 && p.is_finite()) {
                return Err(Error::NumericalUnderflow { arm: arm0 + 1 });
            }
        }
        Ok(touched)
    }
}

/// Weights at the leaves of a heap-ordered binary tree whose internal nodes
/// hold subtree totals. Node 1 is the root, leaves are nodes `k..2k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumTreeWeights {
    k: usize,
    nodes: Vec<f64>,
}

impl SumTreeWeights {
    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    fn rebuild(&mut self) {
        for node in (1..self.k).rev() {
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
    }

    fn renormalize(&mut self) {
        let total = self.total();
        for w in &mut self.nodes[self.k..] {
            *w /= total;
        }
        self.rebuild();
    }
}

impl SubtreeMass for SumTreeWeights {
    fn arm_count(&self) -> usize {
        self.k
    }

    fn mass(&self, level: u32, block: usize) -> f64 {
        self.nodes[(self.k >> level) + block] / self.nodes[1]
    }
}

impl Weights for SumTreeWeights {
    fn uniform(k: usize) -> Self {
        let mut tree = Self {
            k,
            nodes: vec![0.0; 2 * k],
        };
        tree.nodes[k..].fill(1.0 / k as f64);
        tree.rebuild();
        tree
    }

    fn probabilities(&self) -> Vec<f64> {
        let total = self.total();
        self.nodes[self.k..].iter().map(|w| w / total).collect()
    }

    fn apply(&mut self, estimator: &Estimator, eta: f64) -> Result<usize> {
        if estimator.is_zero() {
            return Ok(0);
        }
        let level = estimator.level;
        let lo = (estimator.arm0 >> level) << level;
        let hi = lo + (1 << level);
        let mut touched = 0;
        for arm0 in lo..hi {
            let h = lca_level0(arm0, estimator.arm0) as usize;
            let v = estimator.rings[h];
            if v == 0.0 {
                continue;
            }
            let w = &mut self.nodes[self.k + arm0];
            *w *= (-eta * v).exp();
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Error::NumericalUnderflow { arm: arm0 + 1 });
            }
            touched += 1;
        }
        // refresh the totals inside the block, then the path to the root
        let (mut node_lo, mut node_hi) = ((self.k + lo) / 2, (self.k + hi - 1) / 2);
        while node_lo >= 1 {
            for node in node_lo..=node_hi {
                self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
            }
            node_lo /= 2;
            node_hi /= 2;
        }
        // the update preserves the total mass; only rounding drifts it
        if (self.total() - 1.0).abs() > 1e-9 {
            self.renormalize();
        }
        Ok(touched)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smb::estimator::{assemble_estimator, balancing_vectors};

    #[test]
    fn sum_tree_masses_match_dense() {
        let k = 16;
        let mut dense = DenseWeights::uniform(k);
        let mut tree = SumTreeWeights::uniform(k);
        let signs = [1i8, 1, -1, 1];
        for (step, arm0) in [3usize, 9, 3, 15, 0].into_iter().enumerate() {
            let bal =
                balancing_vectors(&dense, 4, 0.01, arm0, 0.3 + 0.1 * step as f64, &signs).unwrap();
            let est = assemble_estimator(&signs, 2, &bal, false);
            dense.apply(&est, 0.01).unwrap();
            tree.apply(&est, 0.01).unwrap();
        }
        for level in 0..=4 {
            for block in 0..(k >> level) {
                assert!((dense.mass(level, block) - tree.mass(level, block)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_estimator_leaves_weights_alone() {
        let mut dense = DenseWeights::uniform(8);
        let mut tree = SumTreeWeights::uniform(8);
        let est = Estimator::zero(3);
        assert_eq!(dense.apply(&est, 0.5).unwrap(), 0);
        assert_eq!(tree.apply(&est, 0.5).unwrap(), 0);
        assert_eq!(dense.probabilities(), vec![0.125; 8]);
        assert_eq!(tree.probabilities(), vec![0.125; 8]);
    }

    #[test]
    fn underflow_is_reported() {
        let mut dense = DenseWeights::from_probabilities(&[0.5, 0.5]);
        let est = Estimator {
            arm0: 0,
            level: 1,
            rings: vec![1e308, 0.0],
        };
        assert!(matches!(
            dense.apply(&est, 10.0),
            Err(Error::NumericalUnderflow { .. })
        ));
    }
}
