use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::estimator::{
    assemble_estimator, balancing_vectors, check_loss, detect_bad_event, draw_round_randomness,
    sample_action, BalancingVector, Estimator,
};
use super::weights::{DenseWeights, SumTreeWeights, Weights};
use crate::error::{Error, Result};
use crate::metric_tree::MetricTree;

/// The reference learner: dense log-space weights.
pub type SmbState = Smb<DenseWeights>;
/// Same learner backed by a sum tree; per-round work is `O(2^{d_t} + D)`.
pub type SparseSmbState = Smb<SumTreeWeights>;

/// `1/√(kT)`, the step size that balances the two terms of the regret bound.
pub fn default_eta(k: usize, horizon: usize) -> f64 {
    1.0 / ((k as f64) * (horizon as f64)).sqrt()
}

/// Everything that happened in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: u64,
    /// Played arm, 1-based.
    pub action: usize,
    pub loss: f64,
    pub signs: Vec<i8>,
    pub rebalance_level: u32,
    /// `ℓ̄_{t,0..D-1}`.
    pub balancing: Vec<BalancingVector>,
    pub bad_event: bool,
    pub estimator: Estimator,
    /// Tree distance to the previous action; zero on the first round and
    /// when the arm did not change.
    pub movement: f64,
    /// `Σ_i p_t(i) ℓ̃_t(i)^2`.
    pub second_moment: f64,
    /// Arms whose stored weight was modified by the update.
    pub touched: usize,
}

/// One row of the optional JSON-lines trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub t: u64,
    pub action: usize,
    pub loss: f64,
    pub d_t: u32,
    pub bad_event: bool,
    pub movement: f64,
    /// Masses of the two top-level subtrees after the update.
    pub p_top_marginal: [f64; 2],
}

/// Slowly Moving Bandit learner over the leaves of a [`MetricTree`].
///
/// Randomness is consumed in a fixed order each round: one `f64` for the
/// action draw (even when the draw is forced), then `D` sign bits. Two
/// learners with the same seed therefore see the same random stream no
/// matter which weight backend they use.
#[derive(Debug, Clone)]
pub struct Smb<W> {
    tree: MetricTree,
    eta: f64,
    weights: W,
    prev_action: usize,
    prev_level: u32,
    last_played: Option<usize>,
    pending: Option<usize>,
    round: u64,
    rng: ChaCha8Rng,
}

impl<W: Weights> Smb<W> {
    pub fn new(tree: MetricTree, eta: f64, seed: u64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidEta(eta));
        }
        Ok(Self {
            tree,
            eta,
            weights: W::uniform(tree.arms()),
            prev_action: 0,
            prev_level: tree.depth(),
            last_played: None,
            pending: None,
            round: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn tree(&self) -> &MetricTree {
        &self.tree
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Number of completed rounds.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.weights.probabilities()
    }

    pub fn weights(&self) -> &W {
        &self.weights
    }

    /// Previous action (1-based) and rebalance level, which define the block
    /// the next action is drawn from.
    pub fn conditioning(&self) -> (usize, u32) {
        (self.prev_action + 1, self.prev_level)
    }

    pub fn pending_action(&self) -> Option<usize> {
        self.pending.map(|a| a + 1)
    }

    /// Draws this round's action from `p_t` restricted to `A_{d_{t-1}}(i_{t-1})`.
    /// Calling it again before [`finish_round`](Self::finish_round) returns the
    /// same action without consuming randomness.
    pub fn begin_round(&mut self) -> Result<usize> {
        if let Some(a) = self.pending {
            return Ok(a + 1);
        }
        let u: f64 = self.rng.random();
        let arm0 = sample_action(&self.weights, self.prev_action, self.prev_level, u)?;
        self.pending = Some(arm0);
        Ok(arm0 + 1)
    }

    /// Feeds back the loss of the pending action and performs steps 2-5:
    /// sign draws, balancing vectors, bad-event gate and the update.
    pub fn finish_round(&mut self, loss: f64) -> Result<RoundTrace> {
        let arm0 = match self.pending {
            Some(a) => a,
            None => self.begin_round()? - 1,
        };
        let loss = check_loss(loss)?;
        let depth = self.tree.depth();
        let randomness = draw_round_randomness(&mut self.rng, depth);
        let balancing = balancing_vectors(
            &self.weights,
            depth,
            self.eta,
            arm0,
            loss,
            &randomness.signs,
        )?;
        let bad_event = detect_bad_event(&self.weights, depth, arm0, self.eta);
        let estimator =
            assemble_estimator(&randomness.signs, randomness.level, &balancing, bad_event);
        let second_moment = estimator.second_moment(&self.weights);
        let touched = self.weights.apply(&estimator, self.eta)?;

        let movement = match self.last_played {
            Some(prev) => self.tree.switch_cost0(prev, arm0),
            None => 0.0,
        };
        self.pending = None;
        self.last_played = Some(arm0);
        self.prev_action = arm0;
        self.prev_level = randomness.level;
        self.round += 1;
        Ok(RoundTrace {
            round: self.round,
            action: arm0 + 1,
            loss,
            signs: randomness.signs,
            rebalance_level: randomness.level,
            balancing,
            bad_event,
            estimator,
            movement,
            second_moment,
            touched,
        })
    }

    /// One full round under bandit feedback: the oracle is queried exactly
    /// once, at the played arm.
    pub fn step(&mut self, loss_oracle: impl FnOnce(usize) -> f64) -> Result<RoundTrace> {
        let action = self.begin_round()?;
        self.finish_round(loss_oracle(action))
    }

    pub fn trace_line(&self, trace: &RoundTrace) -> TraceLine {
        let top = self.tree.depth() - 1;
        TraceLine {
            t: trace.round,
            action: trace.action,
            loss: trace.loss,
            d_t: trace.rebalance_level,
            bad_event: trace.bad_event,
            movement: trace.movement,
            p_top_marginal: [self.weights.mass(top, 0), self.weights.mass(top, 1)],
        }
    }
}
