//! Complete binary tree over the arm set.
//!
//! Arms are the leaves `1..=k`, in order. Levels count up from the leaves
//! (level 0) to the root (level `D = log2 k`). The movement cost between two
//! arms is `2^d / k` where `d` is the level of their least common ancestor.
//!
//! Internally arms are 0-based and a level-`d` subtree is addressed by its
//! block index `arm0 >> d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricTree {
    k: usize,
    depth: u32,
}

/// An aligned block of `2^level` consecutive arms (1-based, inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArmRange {
    pub level: u32,
    pub lo: usize,
    pub hi: usize,
}

impl ArmRange {
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, arm: usize) -> bool {
        (self.lo..=self.hi).contains(&arm)
    }

    pub fn arms(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

impl MetricTree {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 || !k.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(k));
        }
        Ok(Self {
            k,
            depth: k.trailing_zeros(),
        })
    }

    pub fn arms(&self) -> usize {
        self.k
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm == 0 || arm > self.k {
            Err(Error::ArmOutOfRange { arm, k: self.k })
        } else {
            Ok(())
        }
    }

    fn check_level(&self, level: u32) -> Result<()> {
        if level > self.depth {
            Err(Error::LevelOutOfRange {
                level,
                depth: self.depth,
            })
        } else {
            Ok(())
        }
    }

    /// Level of the least common ancestor of arms `i` and `j` (1-based).
    pub fn lca_level(&self, i: usize, j: usize) -> Result<u32> {
        self.check_arm(i)?;
        self.check_arm(j)?;
        Ok(lca_level0(i - 1, j - 1))
    }

    /// Tree distance `2^lca / k`. Note that `movement_cost(i, i) == 1/k`;
    /// callers that account movement charge nothing when the arm is unchanged.
    pub fn movement_cost(&self, i: usize, j: usize) -> Result<f64> {
        let level = self.lca_level(i, j)?;
        Ok(self.cost_at_level(level))
    }

    /// Cost actually charged for moving from `prev` to `next` (0-based arms):
    /// zero when the arm is unchanged.
    pub fn switch_cost0(&self, prev: usize, next: usize) -> f64 {
        if prev == next {
            0.0
        } else {
            self.cost_at_level(lca_level0(prev, next))
        }
    }

    pub fn cost_at_level(&self, level: u32) -> f64 {
        (1u64 << level) as f64 / self.k as f64
    }

    pub fn subtree(&self, i: usize, level: u32) -> Result<ArmRange> {
        self.check_arm(i)?;
        self.check_level(level)?;
        Ok(self.block_range(level, (i - 1) >> level))
    }

    /// The block with index `block` at `level` as a 1-based arm range.
    pub fn block_range(&self, level: u32, block: usize) -> ArmRange {
        let lo = block << level;
        ArmRange {
            level,
            lo: lo + 1,
            hi: lo + (1 << level),
        }
    }

    /// Number of blocks at `level`, i.e. `|A_d| = k / 2^d`.
    pub fn blocks_at(&self, level: u32) -> usize {
        self.k >> level
    }

    /// All blocks of a level, in order; they tile `1..=k`.
    pub fn partition(&self, level: u32) -> Result<Vec<ArmRange>> {
        self.check_level(level)?;
        Ok((0..self.blocks_at(level))
            .map(|b| self.block_range(level, b))
            .collect())
    }
}

/// LCA level of two 0-based leaves: position of the highest differing bit plus one.
#[inline]
pub fn lca_level0(a: usize, b: usize) -> u32 {
    usize::BITS - (a ^ b).leading_zeros()
}

/// Result of fitting an arbitrary action count onto a complete binary tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaddedArms {
    /// Number of leaves of the padded tree (a power of two).
    pub leaves: usize,
    /// `leaf_map[l - 1]` is the original arm (1-based) played at leaf `l`.
    pub leaf_map: Vec<usize>,
}

impl PaddedArms {
    pub fn original_arm(&self, leaf: usize) -> usize {
        self.leaf_map[leaf - 1]
    }
}

/// Fits `k` actions onto a complete binary tree for horizon `horizon`.
///
/// When `k^3 >= horizon` the tree is the next power of two and trailing
/// leaves replay the last real arm. Otherwise every original leaf is grown
/// into a balanced subtree so the tree has the smallest power of two
/// `>= horizon^(1/3)` leaves, and leaf `l` plays arm `ceil(l * k / leaves)`.
pub fn pad_action_count(k: usize, horizon: usize) -> PaddedArms {
    let k = k.max(1);
    let horizon = horizon.max(1) as u128;
    let cube = (k as u128).pow(3);
    if cube >= horizon {
        let leaves = k.next_power_of_two().max(2);
        let leaf_map = (1..=leaves).map(|l| l.min(k)).collect();
        PaddedArms { leaves, leaf_map }
    } else {
        let mut leaves = 2usize;
        while (leaves as u128).pow(3) < horizon {
            leaves *= 2;
        }
        let leaf_map = (1..=leaves).map(|l| (l * k).div_ceil(leaves)).collect();
        PaddedArms { leaves, leaf_map }
    }
}
