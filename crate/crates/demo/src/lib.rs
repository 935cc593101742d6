//! Browser bindings: each call returns a JSON string for `www/index.html`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use smb::bench::experiment::{run_bandit_seed, run_pricing_seed, BanditSetup, LearnerKind};
use smb::bench::generators::{generate_buyers, PatienceDist, ValueDist};
use smb::bench::LossSpec;
use smb::pricing::{LearnerHorizon, PricingInstance};
use smb::smb::{default_eta, SmbState};
use smb::MetricTree;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsValue> {
    serde_json::to_string(value).map_err(js_err)
}

#[derive(Serialize)]
struct Curve {
    learner: String,
    t: Vec<usize>,
    regret: Vec<f64>,
    movement: Vec<f64>,
    switches_by_level: Vec<u64>,
}

/// Cumulative regret and movement of SMB and Exp3 on one stochastic-gap stream.
#[wasm_bindgen]
pub fn bandit_curves(k: usize, horizon: usize, gap: f64, seed: u64) -> Result<String, JsValue> {
    if k < 2 || horizon == 0 {
        return Err(js_err("need k >= 2 and T >= 1"));
    }
    let setup = BanditSetup {
        k,
        horizon,
        eta: default_eta(k, horizon),
        spec: LossSpec::StochasticGap {
            best_mean: 0.4,
            gap: gap.clamp(0.0, 0.6),
        },
        record_every: horizon.div_ceil(200).max(1),
        trace: false,
    };
    let curves = [LearnerKind::Smb, LearnerKind::Exp3]
        .into_iter()
        .map(|learner| {
            let run = run_bandit_seed(&setup, learner, seed).map_err(js_err)?;
            Ok(Curve {
                learner: learner.to_string(),
                t: run.records.iter().map(|r| r.t).collect(),
                regret: run.records.iter().map(|r| r.cum_regret).collect(),
                movement: run.records.iter().map(|r| r.cum_movement).collect(),
                switches_by_level: run.totals.switches_by_level,
            })
        })
        .collect::<Result<Vec<_>, JsValue>>()?;
    to_json(&curves)
}

#[derive(Serialize)]
struct Snapshot {
    round: u64,
    probabilities: Vec<f64>,
    /// `masses[d][b]`: mass of block `b` at level `d`.
    masses: Vec<Vec<f64>>,
    actions: Vec<usize>,
    levels: Vec<u32>,
}

/// A learner the page can advance a few rounds at a time. Arm `best`
/// has mean loss 0.3 and every other arm 0.7.
#[wasm_bindgen]
pub struct Session {
    learner: SmbState,
    best: usize,
    env: u64,
    actions: Vec<usize>,
    levels: Vec<u32>,
}

#[wasm_bindgen]
impl Session {
    #[wasm_bindgen(constructor)]
    pub fn new(k: usize, eta: f64, best: usize, seed: u64) -> Result<Session, JsValue> {
        let tree = MetricTree::new(k).map_err(js_err)?;
        Ok(Session {
            learner: SmbState::new(tree, eta, seed).map_err(js_err)?,
            best: best.clamp(1, k),
            env: seed ^ 0x9e37_79b9_7f4a_7c15,
            actions: Vec::new(),
            levels: Vec::new(),
        })
    }

    /// Plays `rounds` rounds and returns the new state.
    pub fn step(&mut self, rounds: usize) -> Result<String, JsValue> {
        for _ in 0..rounds {
            // splitmix64 for the Bernoulli losses; no need for a full RNG here
            self.env = self.env.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = self.env;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            let u = ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64;
            let best = self.best;
            let tr = self
                .learner
                .step(|a| {
                    let mean = if a == best { 0.3 } else { 0.7 };
                    if u < mean {
                        1.0
                    } else {
                        0.0
                    }
                })
                .map_err(js_err)?;
            self.actions.push(tr.action);
            self.levels.push(tr.rebalance_level);
        }
        self.state()
    }

    pub fn state(&self) -> Result<String, JsValue> {
        let p = self.learner.probabilities();
        let depth = self.learner.tree().depth();
        let masses = (0..=depth)
            .map(|d| p.chunks(1 << d).map(|c| c.iter().sum()).collect())
            .collect();
        let keep = self.actions.len().saturating_sub(400);
        to_json(&Snapshot {
            round: self.learner.round(),
            probabilities: p,
            masses,
            actions: self.actions[keep..].to_vec(),
            levels: self.levels[keep..].to_vec(),
        })
    }
}

#[derive(Serialize)]
struct PricePath {
    k: usize,
    block_prices: Vec<f64>,
    switched: Vec<bool>,
    updated: Vec<bool>,
    t: Vec<usize>,
    regret: Vec<f64>,
}

/// Posted prices over time against uniform-value buyers.
#[wasm_bindgen]
pub fn pricing_path(horizon: usize, tau_bar: usize, seed: u64) -> Result<String, JsValue> {
    let buyers = generate_buyers(
        horizon,
        tau_bar,
        ValueDist::Uniform { lo: 0.0, hi: 1.0 },
        PatienceDist::Uniform,
        seed,
    );
    let instance = PricingInstance::padded(buyers, tau_bar).map_err(js_err)?;
    let every = instance.blocks().div_ceil(200).max(1);
    let run =
        run_pricing_seed(&instance, LearnerHorizon::HalfBlocks, every, seed).map_err(js_err)?;
    let seller = run.seller.expect("pricing runs carry the seller");
    to_json(&PricePath {
        k: seller.k,
        block_prices: seller.block_prices,
        switched: seller.switched,
        updated: seller.updated,
        t: run.records.iter().map(|r| r.t).collect(),
        regret: run.records.iter().map(|r| r.cum_regret).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandit_curves_end_at_horizon() {
        let json = bandit_curves(8, 1000, 0.2, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 2);
        assert_eq!(v[0]["learner"], "smb");
        assert_eq!(v[0]["t"].as_array().unwrap().last().unwrap(), 1000);
        assert_eq!(v[1]["switches_by_level"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn session_masses_are_consistent() {
        let mut s = Session::new(16, 0.05, 3, 7).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.step(250).unwrap()).unwrap();
        assert_eq!(v["round"], 250);
        let masses = v["masses"].as_array().unwrap();
        assert_eq!(masses.len(), 5);
        let root = masses[4][0].as_f64().unwrap();
        assert!((root - 1.0).abs() < 1e-9);
        assert_eq!(v["actions"].as_array().unwrap().len(), 250);
    }

    #[test]
    fn pricing_path_has_one_price_per_block() {
        let v: serde_json::Value = serde_json::from_str(&pricing_path(400, 2, 3).unwrap()).unwrap();
        assert_eq!(v["block_prices"].as_array().unwrap().len(), 201);
        assert_eq!(v["switched"].as_array().unwrap().len(), 200);
    }
}
