//! Per-round pieces of the SMB learner: lazy action sampling, the sign
//! draws, the recursive balancing vectors, the bad-event gate and the
//! assembled loss estimator.
//!
//! Everything here is a pure function of a probability distribution
//! (seen through [`SubtreeMass`]) and the round's random inputs. Balancing
//! vectors are never materialized densely: level `d` is a single constant on
//! the block `A_d(i_t)` and zero elsewhere.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_tree::{lca_level0, ArmRange, MetricTree};

/// Read access to a normalized distribution over the leaves, by subtree.
pub trait SubtreeMass {
    fn arm_count(&self) -> usize;

    /// Probability of the level-`level` block with index `block`.
    fn mass(&self, level: u32, block: usize) -> f64;

    /// Probability of a single 0-based arm.
    fn prob(&self, arm0: usize) -> f64 {
        self.mass(0, arm0)
    }
}

impl SubtreeMass for [f64] {
    fn arm_count(&self) -> usize {
        self.len()
    }

    fn mass(&self, level: u32, block: usize) -> f64 {
        let lo = block << level;
        pairwise_sum(&self[lo..lo + (1 << level)])
    }

    fn prob(&self, arm0: usize) -> f64 {
        self[arm0]
    }
}

impl SubtreeMass for Vec<f64> {
    fn arm_count(&self) -> usize {
        self.len()
    }

    fn mass(&self, level: u32, block: usize) -> f64 {
        self.as_slice().mass(level, block)
    }

    fn prob(&self, arm0: usize) -> f64 {
        self[arm0]
    }
}

/// Sum in the association order of a heap-shaped binary tree, so a dense
/// slice and a sum tree over the same leaves agree bit for bit.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

pub fn check_loss(loss: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&loss) {
        Ok(loss)
    } else {
        Err(Error::LossOutOfRange(loss))
    }
}

/// Draws an arm from `dist` conditioned on the level-`prev_level` block
/// containing `prev_arm0`, using the single uniform `u` in `[0, 1)`.
///
/// Walks down from the block, choosing the left child when the remaining
/// target falls below its mass. With `prev_level == 0` the previous arm is
/// returned; with `prev_level == D` this is plain sampling from `dist`.
pub fn sample_action<M: SubtreeMass + ?Sized>(
    dist: &M,
    prev_arm0: usize,
    prev_level: u32,
    u: f64,
) -> Result<usize> {
    let mut level = prev_level;
    let mut block = prev_arm0 >> level;
    let total = dist.mass(level, block);
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegenerateMass {
            arm: prev_arm0 + 1,
            level,
        });
    }
    let mut target = u * total;
    while level > 0 {
        level -= 1;
        let left = dist.mass(level, 2 * block);
        if target < left {
            block *= 2;
        } else {
            target -= left;
            block = 2 * block + 1;
        }
    }
    Ok(block)
}

/// Signs `σ_{t,0..D-1}` and the rebalance level they induce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRandomness {
    pub signs: Vec<i8>,
    pub level: u32,
}

/// Index of the first negative sign, with an implicit `σ_D = -1`.
pub fn rebalance_level(signs: &[i8]) -> u32 {
    signs.iter().position(|&s| s < 0).unwrap_or(signs.len()) as u32
}

/// Draws `depth` fair signs from `rng`, one `bool` per level, in level order.
pub fn draw_round_randomness<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> RoundRandomness {
    let signs: Vec<i8> = (0..depth)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    let level = rebalance_level(&signs);
    RoundRandomness { signs, level }
}

/// A level-`level` balancing vector: `value` on the block `block`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalancingVector {
    pub level: u32,
    pub block: usize,
    pub value: f64,
}

impl BalancingVector {
    /// Value at a 1-based arm.
    pub fn at(&self, arm: usize) -> f64 {
        self.at0(arm - 1)
    }

    pub(crate) fn at0(&self, arm0: usize) -> f64 {
        if arm0 >> self.level == self.block {
            self.value
        } else {
            0.0
        }
    }

    pub fn support(&self, tree: &MetricTree) -> ArmRange {
        tree.block_range(self.level, self.block)
    }

    pub fn to_dense(&self, k: usize) -> Vec<f64> {
        (0..k).map(|a| self.at0(a)).collect()
    }
}

/// Importance-weighted level-0 vector: `loss / p(i_t)` at the played arm.
pub fn base_estimate<M: SubtreeMass + ?Sized>(
    dist: &M,
    arm0: usize,
    loss: f64,
) -> Result<BalancingVector> {
    let loss = check_loss(loss)?;
    Ok(BalancingVector {
        level: 0,
        block: arm0,
        value: loss / dist.prob(arm0),
    })
}

/// Level `prev.level + 1` balancing vector built from the level below.
///
/// Inside the parent block the previous vector is `c` on a child holding a
/// fraction `q` of the parent's mass and zero on its sibling, so the
/// log-average collapses to `-(1/η) ln(1 - q + q e^{-η(1+σ)c})`.
pub fn balancing_vector<M: SubtreeMass + ?Sized>(
    dist: &M,
    eta: f64,
    prev: &BalancingVector,
    sigma_prev: i8,
) -> BalancingVector {
    let level = prev.level + 1;
    let block = prev.block >> 1;
    let exponent = eta * (1.0 + sigma_prev as f64) * prev.value;
    let value = if exponent == 0.0 {
        0.0
    } else {
        let q = dist.mass(prev.level, prev.block) / dist.mass(level, block);
        let v = -(q * (-exponent).exp_m1()).ln_1p() / eta;
        // clamp the rounding residue of ln_1p near zero
        v.max(0.0)
    };
    BalancingVector {
        level,
        block,
        value,
    }
}

/// All balancing vectors `ℓ̄_{t,0..D-1}` of a round.
pub fn balancing_vectors<M: SubtreeMass + ?Sized>(
    dist: &M,
    depth: u32,
    eta: f64,
    arm0: usize,
    loss: f64,
    signs: &[i8],
) -> Result<Vec<BalancingVector>> {
    let mut out = Vec::with_capacity(depth as usize);
    out.push(base_estimate(dist, arm0, loss)?);
    for d in 1..depth as usize {
        let next = balancing_vector(dist, eta, &out[d - 1], signs[d - 1]);
        out.push(next);
    }
    Ok(out)
}

/// `true` iff `p(A_d(i_t)) < 2^d η` for some level `d < D`.
pub fn detect_bad_event<M: SubtreeMass + ?Sized>(
    dist: &M,
    depth: u32,
    arm0: usize,
    eta: f64,
) -> bool {
    (0..depth).any(|d| dist.mass(d, arm0 >> d) < (1u64 << d) as f64 * eta)
}

/// The loss estimator `ℓ̃_t`, stored as one value per ring around the played
/// arm: ring 0 is the arm itself, ring `h >= 1` is `A_h(i_t) \ A_{h-1}(i_t)`.
/// Arms outside `A_{d_t}(i_t)` get zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub(crate) arm0: usize,
    pub(crate) level: u32,
    /// Empty when the estimator was zeroed by the bad event.
    pub(crate) rings: Vec<f64>,
}

impl Estimator {
    pub fn zero(arm0: usize) -> Self {
        Self {
            arm0,
            level: 0,
            rings: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rings.iter().all(|&v| v == 0.0)
    }

    /// Level of the block the estimator is supported on.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn rings(&self) -> &[f64] {
        &self.rings
    }

    /// Value at a 1-based arm.
    pub fn at(&self, arm: usize) -> f64 {
        self.at0(arm - 1)
    }

    #[inline]
    pub(crate) fn at0(&self, arm0: usize) -> f64 {
        let h = lca_level0(arm0, self.arm0) as usize;
        self.rings.get(h).copied().unwrap_or(0.0)
    }

    pub fn to_dense(&self, k: usize) -> Vec<f64> {
        (0..k).map(|a| self.at0(a)).collect()
    }

    pub fn min_value(&self) -> f64 {
        self.rings.iter().copied().fold(0.0, f64::min)
    }

    /// `Σ_i p(i) ℓ̃(i)^2`, computed ring by ring.
    pub fn second_moment<M: SubtreeMass + ?Sized>(&self, dist: &M) -> f64 {
        let mut inner = 0.0;
        let mut acc = 0.0;
        for (h, &v) in self.rings.iter().enumerate() {
            let m = dist.mass(h as u32, self.arm0 >> h);
            acc += v * v * (m - inner).max(0.0);
            inner = m;
        }
        acc
    }
}

/// `ℓ̃_t = ℓ̄_{t,0} + Σ_d σ_{t,d} ℓ̄_{t,d}`, or zero on the bad event.
pub fn assemble_estimator(
    signs: &[i8],
    level: u32,
    balancing: &[BalancingVector],
    bad_event: bool,
) -> Estimator {
    let arm0 = balancing[0].block;
    if bad_event {
        return Estimator::zero(arm0);
    }
    // ring h sees every ℓ̄_{t,d} with d >= h; those above d_t vanish
    let mut rings = vec![0.0; level as usize + 1];
    let mut tail = 0.0;
    for d in (0..balancing.len()).rev() {
        tail += signs[d] as f64 * balancing[d].value;
        if d <= level as usize {
            rings[d] = tail;
        }
    }
    rings[0] += balancing[0].value;
    Estimator { arm0, level, rings }
}
