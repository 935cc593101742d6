//! Invariant suites with measured margins. Failures are reported in the
//! returned [`VerifyReport`], never raised.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{mw_trajectory, verify_second_order_bound};
use crate::error::{Error, Result};
use crate::metric_tree::MetricTree;
use crate::pricing::{best_fixed_price, draw_coins, fixture, pricing_regret, simulate_seller};
use crate::pricing::{PricingInstance, ScriptedLearner};
use crate::smb::{
    assemble_estimator, balancing_vectors, rebalance_level, SmbState, SparseSmbState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyScope {
    Smb,
    Mw,
    Pricing,
    All,
}

impl fmt::Display for VerifyScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyScope::Smb => "smb",
            VerifyScope::Mw => "mw",
            VerifyScope::Pricing => "pricing",
            VerifyScope::All => "all",
        })
    }
}

impl FromStr for VerifyScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "smb" => Ok(VerifyScope::Smb),
            "mw" => Ok(VerifyScope::Mw),
            "pricing" => Ok(VerifyScope::Pricing),
            "all" => Ok(VerifyScope::All),
            other => Err(Error::Config(format!("unknown verify scope `{other}`"))),
        }
    }
}

/// One invariant: `measured` is compared against `threshold` (`measured <= threshold`
/// unless stated otherwise in `detail`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl InvariantCheck {
    fn at_most(suite: &str, name: &str, measured: f64, threshold: f64, detail: String) -> Self {
        Self {
            suite: suite.into(),
            name: name.into(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub scope: VerifyScope,
    pub budget: usize,
    pub checks: Vec<InvariantCheck>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InvariantCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s
    }
}

/// `budget` is the number of learner rounds for the SMB suite and the
/// number of random sequences for the MW suite (at least 100).
pub fn verify_invariants(scope: VerifyScope, budget: usize) -> VerifyReport {
    let mut checks = Vec::new();
    if matches!(scope, VerifyScope::Smb | VerifyScope::All) {
        checks.extend(smb_suite(budget.max(1)));
    }
    if matches!(scope, VerifyScope::Mw | VerifyScope::All) {
        checks.extend(mw_suite(budget.clamp(100, 1000)));
    }
    if matches!(scope, VerifyScope::Pricing | VerifyScope::All) {
        checks.extend(pricing_suite());
    }
    VerifyReport {
        scope,
        budget,
        checks,
    }
}

fn block_mass(p: &[f64], level: u32, block: usize) -> f64 {
    let w = 1 << level;
    p[block * w..(block + 1) * w].iter().sum()
}

fn random_distribution(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k)
        .map(|_| -rng.random::<f64>().max(1e-12).ln())
        .collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

fn smb_suite(rounds: usize) -> Vec<InvariantCheck> {
    const SUITE: &str = "smb";
    let configs = [
        (4usize, 0.01),
        (4, 0.1),
        (16, 0.01),
        (16, 0.1),
        (64, 0.01),
        (64, 0.1),
    ];
    let per = rounds.div_ceil(configs.len());
    let mut drift: f64 = 0.0;
    let mut bound_excess: f64 = f64::NEG_INFINITY;
    let mut floor_excess: f64 = f64::NEG_INFINITY;
    let mut norm_err: f64 = 0.0;
    let mut played = 0usize;
    let mut errors = 0usize;
    for (c, &(k, eta)) in configs.iter().enumerate() {
        let tree = MetricTree::new(k).expect("power of two");
        let mut smb = SmbState::new(tree, eta, c as u64).expect("valid eta");
        let mut env = ChaCha8Rng::seed_from_u64(1000 + c as u64);
        for _ in 0..per {
            let before = smb.probabilities();
            let losses: Vec<f64> = (0..k).map(|_| env.random()).collect();
            let Ok(tr) = smb.step(|a| losses[a - 1]) else {
                errors += 1;
                break;
            };
            played += 1;
            let after = smb.probabilities();
            for d in tr.rebalance_level..=tree.depth() {
                for b in 0..tree.blocks_at(d) {
                    drift = drift.max((block_mass(&before, d, b) - block_mass(&after, d, b)).abs());
                }
            }
            let i_t = tr.action - 1;
            let mut prod = 1.0;
            for (d, bal) in tr.balancing.iter().enumerate() {
                for i in 0..k {
                    let v = bal.at(i + 1);
                    let cap = if i >> d == i_t >> d {
                        prod / block_mass(&before, d as u32, i >> d)
                    } else {
                        0.0
                    };
                    bound_excess = bound_excess.max((-v).max(v - cap * (1.0 + 1e-12)));
                }
                prod *= 1.0 + tr.signs[d] as f64;
            }
            if !tr.bad_event {
                floor_excess = floor_excess.max(-1.0 / eta - tr.estimator.min_value());
            }
            norm_err = norm_err.max((after.iter().sum::<f64>() - 1.0).abs());
        }
    }
    let mut out = vec![
        InvariantCheck::at_most(
            SUITE,
            "marginal_preservation",
            drift,
            1e-8,
            format!("max |p_t+1(A) - p_t(A)| over levels >= d_t, {played} rounds"),
        ),
        InvariantCheck::at_most(
            SUITE,
            "balancing_bounds",
            bound_excess.max(0.0),
            1e-12,
            "largest violation of 0 <= lbar_d <= prod(1+sigma)/p(A_d)".into(),
        ),
        InvariantCheck::at_most(
            SUITE,
            "estimator_floor",
            floor_excess.max(0.0),
            1e-12,
            "largest amount by which the estimator fell below -1/eta".into(),
        ),
        InvariantCheck::at_most(
            SUITE,
            "normalization",
            norm_err,
            1e-12,
            "max |sum p - 1|".into(),
        ),
        InvariantCheck::at_most(
            SUITE,
            "learner_errors",
            errors as f64,
            0.0,
            "runs stopped by a numerical error".into(),
        ),
    ];

    // unbiasedness over all sign patterns
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut bias: f64 = 0.0;
    let states = (rounds / 100).clamp(20, 1000);
    for s in 0..states {
        let depth = 1 + (s % 6) as u32;
        let k = 1usize << depth;
        let p = random_distribution(&mut rng, k);
        let arm0 = rng.random_range(0..k);
        let loss: f64 = rng.random();
        let eta = 0.05;
        let patterns = 1usize << depth;
        let mut avg = vec![0.0; k];
        for bits in 0..patterns {
            let signs: Vec<i8> = (0..depth)
                .map(|d| if bits >> d & 1 == 1 { 1 } else { -1 })
                .collect();
            let level = rebalance_level(&signs);
            let Ok(bal) = balancing_vectors(&p, depth, eta, arm0, loss, &signs) else {
                bias = f64::INFINITY;
                continue;
            };
            let est = assemble_estimator(&signs, level, &bal, false).to_dense(k);
            for (a, e) in avg.iter_mut().zip(est) {
                *a += e / patterns as f64;
            }
        }
        for (i, a) in avg.iter().enumerate() {
            let expected = if i == arm0 { loss / p[arm0] } else { 0.0 };
            bias = bias.max((a - expected).abs());
        }
    }
    out.push(InvariantCheck::at_most(
        SUITE,
        "sign_enumeration_unbiased",
        bias,
        1e-9,
        format!("max componentwise error over {states} states"),
    ));

    // sparse and dense backends on the same seed
    let k = 64;
    let tree = MetricTree::new(k).expect("power of two");
    let eta = 1.0 / ((k * rounds.max(1)) as f64).sqrt();
    let mut dense = SmbState::new(tree, eta, 5).expect("valid eta");
    let mut sparse = SparseSmbState::new(tree, eta, 5).expect("valid eta");
    let mut env = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0usize;
    let mut touched = 0usize;
    let n = rounds.min(10_000);
    for _ in 0..n {
        let losses: Vec<f64> = (0..k)
            .map(|i| if i < 4 { 0.3 } else { 0.7 } * env.random::<f64>())
            .collect();
        match (
            dense.step(|a| losses[a - 1]),
            sparse.step(|a| losses[a - 1]),
        ) {
            (Ok(a), Ok(b)) => {
                mismatches += usize::from(a.action != b.action);
                touched += b.touched;
            }
            _ => mismatches += 1,
        }
    }
    let gap = dense
        .probabilities()
        .iter()
        .zip(sparse.probabilities())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    out.push(InvariantCheck::at_most(
        SUITE,
        "sparse_dense_actions",
        mismatches as f64,
        0.0,
        format!("rounds with different actions out of {n}"),
    ));
    out.push(InvariantCheck::at_most(
        SUITE,
        "sparse_dense_probabilities",
        gap,
        1e-12,
        "max |p_dense - p_sparse| at the end".into(),
    ));
    out.push(InvariantCheck::at_most(
        SUITE,
        "sparse_touched_arms",
        touched as f64 / n.max(1) as f64,
        2.0 * (k as f64).log2(),
        "mean arms touched per round".into(),
    ));
    out
}

fn mw_suite(sequences: usize) -> Vec<InvariantCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0usize;
    let mut slack = f64::INFINITY;
    for _ in 0..sequences {
        let k = rng.random_range(2..=32);
        let t = rng.random_range(1..=1000);
        let eta = 10f64.powf(rng.random_range(-2.0..0.3));
        let costs: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..k).map(|_| rng.random_range(-1.0..=1.0) / eta).collect())
            .collect();
        let qs = mw_trajectory(&costs, eta);
        let check = verify_second_order_bound(&qs, &costs, eta);
        violations += usize::from(!check.holds);
        slack = slack.min(check.rhs - check.lhs);
    }
    vec![InvariantCheck::at_most(
        "mw",
        "second_order_bound",
        violations as f64,
        0.0,
        format!("violations over {sequences} sequences; smallest rhs - lhs = {slack:.6}"),
    )]
}

fn pricing_suite() -> Vec<InvariantCheck> {
    const SUITE: &str = "pricing";
    let mut out = Vec::new();
    match fixture::run() {
        Ok((run, feedback)) => {
            let instance = fixture::instance();
            let mut err: f64 = 0.0;
            for (a, b) in run.block_prices.iter().zip(fixture::EXPECTED_BLOCK_PRICES) {
                err = err.max((a - b).abs());
            }
            for (a, b) in run
                .revenue_per_day
                .iter()
                .zip(fixture::EXPECTED_DAILY_REVENUE)
            {
                err = err.max((a - b).abs());
            }
            for (a, b) in feedback.iter().zip(fixture::EXPECTED_FEEDBACK) {
                err = err.max((a - b).abs());
            }
            let shape_ok = run.switched == fixture::EXPECTED_SWITCHED
                && run.updated == fixture::EXPECTED_UPDATED
                && feedback.len() == fixture::EXPECTED_FEEDBACK.len();
            if !shape_ok {
                err = f64::INFINITY;
            }
            out.push(InvariantCheck::at_most(
                SUITE,
                "fixture_trajectory",
                err,
                0.0,
                "max deviation of prices, revenues and feedback from the hand oracle".into(),
            ));
            let (price, best) = best_fixed_price(&instance, fixture::K);
            let regret = pricing_regret(&instance, &run);
            let e = (price - fixture::EXPECTED_BEST_PRICE)
                .abs()
                .max((best - fixture::EXPECTED_BEST_REVENUE).abs())
                .max((regret - fixture::EXPECTED_REGRET).abs());
            out.push(InvariantCheck::at_most(
                SUITE,
                "fixture_regret",
                e,
                1e-12,
                format!(
                    "regret {regret} vs hand oracle {}",
                    fixture::EXPECTED_REGRET
                ),
            ));
        }
        Err(e) => out.push(InvariantCheck {
            suite: SUITE.into(),
            name: "fixture_trajectory".into(),
            passed: false,
            measured: f64::INFINITY,
            threshold: 0.0,
            detail: e.to_string(),
        }),
    }

    // switch and feedback gates never open on the same block, and the
    // learner only changes arms on switch gates
    let mut overlaps = 0usize;
    let mut stray = 0usize;
    for seed in 0..50u64 {
        let buyers: Vec<_> = (0..64)
            .map(|i| crate::pricing::Buyer {
                value: (i % 10) as f64 / 10.0,
                patience: i % 3,
            })
            .collect();
        let Ok(instance) = PricingInstance::new(buyers, 2) else {
            continue;
        };
        let coins = draw_coins(seed, instance.blocks());
        let mut learner = ScriptedLearner::new((1..=40).map(|i| 1 + i % 4).collect());
        let Ok(run) = simulate_seller(&instance, 4, &coins, &mut learner) else {
            stray += 1;
            continue;
        };
        for t in 1..=run.blocks() {
            overlaps += usize::from(run.switched[t - 1] && run.updated[t - 1]);
            if !run.switched[t - 1] && run.block_arms[t] != run.block_arms[t - 1] {
                stray += 1;
            }
        }
    }
    out.push(InvariantCheck::at_most(
        SUITE,
        "gates_disjoint",
        overlaps as f64,
        0.0,
        "blocks where both gates opened, over 50 coin sequences".into(),
    ));
    out.push(InvariantCheck::at_most(
        SUITE,
        "price_changes_only_on_switch",
        stray as f64,
        0.0,
        "price changes outside switch gates".into(),
    ));
    out
}
