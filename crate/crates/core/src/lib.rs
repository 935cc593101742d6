//! Bandits with tree-metric movement costs.
//!
//! * [`metric_tree`]: the complete binary tree over arms and its distance.
//! * [`smb`]: the Slowly Moving Bandit learner, dense and sum-tree backed.
//! * [`baselines`]: Exp3 and a checker for the second-order
//!   multiplicative-weights regret bound.
//! * [`continuum`]: Lipschitz losses on `[0, 1]` via a discretized grid.
//! * [`pricing`]: posted prices against patient buyers.
//! * [`bench`]: loss/buyer generators, seeded experiments and invariant checks.

pub mod baselines;
pub mod bench;
pub mod continuum;
pub mod error;
pub mod metric_tree;
pub mod pricing;
pub mod smb;

pub use error::{Error, Result};
pub use metric_tree::{pad_action_count, ArmRange, MetricTree, PaddedArms};
