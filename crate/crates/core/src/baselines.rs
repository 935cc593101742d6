//! Exp3 without exploration mixing, and a checker for the second-order
//! regret bound of multiplicative weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smb::estimator::check_loss;

/// Exponential weights on importance-weighted losses; actions are drawn
/// directly from `p_t`, with no laziness.
#[derive(Debug, Clone)]
pub struct Exp3State {
    log_w: Vec<f64>,
    p: Vec<f64>,
    eta: f64,
    rng: ChaCha8Rng,
}

impl Exp3State {
    pub fn new(k: usize, eta: f64, seed: u64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidEta(eta));
        }
        if k == 0 {
            return Err(Error::Config("Exp3 needs at least one arm".into()));
        }
        Ok(Self {
            log_w: vec![0.0; k],
            p: vec![1.0 / k as f64; k],
            eta,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Draws `i_t ~ p_t` (1-based).
    pub fn sample(&mut self) -> usize {
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for (i, p) in self.p.iter().enumerate() {
            acc += p;
            if u < acc {
                return i + 1;
            }
        }
        self.p.len()
    }

    /// `p_{t+1}(i) ∝ p_t(i) exp(-η 1{i = action} loss / p_t(action))`.
    pub fn update(&mut self, action: usize, loss: f64) -> Result<()> {
        let loss = check_loss(loss)?;
        let i = action - 1;
        if loss == 0.0 {
            return Ok(());
        }
        self.log_w[i] -= self.eta * loss / self.p[i];
        let max = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = self.log_w.iter().map(|w| (w - max).exp()).sum();
        for (w, p) in self.log_w.iter().zip(self.p.iter_mut()) {
            *p = (w - max).exp() / z;
        }
        // keep the log weights centered
        let shift = max + z.ln();
        for w in &mut self.log_w {
            *w -= shift;
        }
        if let Some(i) = self.p.iter().position(|p| p.is_nan() || *p <= 0.0) {
            return Err(Error::NumericalUnderflow { arm: i + 1 });
        }
        Ok(())
    }

    pub fn step(&mut self, loss_oracle: impl FnOnce(usize) -> f64) -> Result<(usize, f64)> {
        let action = self.sample();
        let loss = loss_oracle(action);
        self.update(action, loss)?;
        Ok((action, loss))
    }
}

/// Outcome of checking `max_i* Σ q_t·c_t − Σ c_t(i*) ≤ ln(k)/η + η Σ q_t·c_t²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Distributions `q_1..q_T` produced by multiplicative weights from the
/// uniform start on the cost vectors `costs`.
pub fn mw_trajectory(costs: &[Vec<f64>], eta: f64) -> Vec<Vec<f64>> {
    let Some(first) = costs.first() else {
        return Vec::new();
    };
    let k = first.len();
    let mut log_w = vec![0.0f64; k];
    let mut out = Vec::with_capacity(costs.len());
    for c in costs {
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = log_w.iter().map(|w| (w - max).exp()).sum();
        out.push(log_w.iter().map(|w| (w - max).exp() / z).collect());
        for (w, ci) in log_w.iter_mut().zip(c) {
            *w -= eta * ci;
        }
    }
    out
}

/// Evaluates both sides of the second-order bound on a given trajectory.
/// A violation is reported through `holds`, never as an error.
pub fn verify_second_order_bound(
    distributions: &[Vec<f64>],
    costs: &[Vec<f64>],
    eta: f64,
) -> SecondOrderCheck {
    let k = costs.first().map_or(1, Vec::len);
    let mut learner = 0.0;
    let mut second = 0.0;
    let mut totals = vec![0.0; k];
    for (q, c) in distributions.iter().zip(costs) {
        for i in 0..k {
            learner += q[i] * c[i];
            second += q[i] * c[i] * c[i];
            totals[i] += c[i];
        }
    }
    let best = totals.iter().copied().fold(f64::INFINITY, f64::min);
    let lhs = if costs.is_empty() {
        0.0
    } else {
        learner - best
    };
    let rhs = (k as f64).ln() / eta + eta * second;
    SecondOrderCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    }
}
