//! Posted prices against patient buyers, reduced to SMB over price blocks.
//!
//! Days are grouped into blocks of `τ̄` days with one price per block.
//! Prices are announced a block ahead. Fair coins `β_t` gate the learner: a
//! fresh price is drawn only when `β_t = 0, β_{t+1} = 1`, and block revenue
//! is fed back only when `β_{t+1} = 0, β_{t+2} = 1`, so feedback always comes
//! from a block whose price also holds for the following block.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_tree::pad_action_count;
use crate::smb::{Smb, SparseSmbState, Weights};
use crate::MetricTree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Buyer {
    pub value: f64,
    pub patience: usize,
}

impl Buyer {
    pub fn new(value: f64, patience: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidBuyer(format!("value {value} outside [0, 1]")));
        }
        Ok(Self { value, patience })
    }

    /// Revenue under a fixed price for the whole window.
    pub fn pays_at(&self, price: f64) -> f64 {
        if price <= self.value {
            price
        } else {
            0.0
        }
    }
}

/// The buyer waits up to `patience` days and buys at the lowest price seen,
/// if that price is at most their value.
pub fn buyer_revenue(buyer: &Buyer, window: &[f64]) -> Result<f64> {
    if window.len() != buyer.patience + 1 {
        return Err(Error::WindowLengthMismatch {
            got: window.len(),
            patience: buyer.patience,
        });
    }
    let lowest = window.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(buyer.pays_at(lowest))
}

/// Which horizon sizes the learner: `T/(2τ̄)` (default) or `T/τ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LearnerHorizon {
    #[default]
    HalfBlocks,
    AllBlocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingInstance {
    buyers: Vec<Buyer>,
    tau_bar: usize,
}

impl PricingInstance {
    pub fn new(buyers: Vec<Buyer>, tau_bar: usize) -> Result<Self> {
        if tau_bar == 0 {
            return Err(Error::Config("maximum patience must be >= 1".into()));
        }
        if let Some(b) = buyers.iter().find(|b| b.patience > tau_bar) {
            return Err(Error::InvalidBuyer(format!(
                "patience {} exceeds maximum {tau_bar}",
                b.patience
            )));
        }
        if !buyers.len().is_multiple_of(2 * tau_bar) {
            return Err(Error::IndivisibleHorizon {
                horizon: buyers.len(),
                tau_bar,
            });
        }
        Ok(Self { buyers, tau_bar })
    }

    /// Pads the stream with zero-value buyers up to the next multiple of `2τ̄`.
    pub fn padded(mut buyers: Vec<Buyer>, tau_bar: usize) -> Result<Self> {
        let unit = 2 * tau_bar.max(1);
        while !buyers.len().is_multiple_of(unit) {
            buyers.push(Buyer {
                value: 0.0,
                patience: 0,
            });
        }
        Self::new(buyers, tau_bar)
    }

    pub fn buyers(&self) -> &[Buyer] {
        &self.buyers
    }

    pub fn tau_bar(&self) -> usize {
        self.tau_bar
    }

    pub fn horizon(&self) -> usize {
        self.buyers.len()
    }

    /// Number of price blocks needed to cover every day.
    pub fn blocks(&self) -> usize {
        self.horizon() / self.tau_bar
    }

    pub fn learner_rounds(&self, horizon: LearnerHorizon) -> usize {
        match horizon {
            LearnerHorizon::HalfBlocks => self.horizon() / (2 * self.tau_bar),
            LearnerHorizon::AllBlocks => self.blocks(),
        }
    }

    /// Grid size `k`: `round(T̄^{1/3})` lifted to a power of two.
    pub fn grid_size(&self, horizon: LearnerHorizon) -> usize {
        let rounds = self.learner_rounds(horizon).max(1);
        let target = ((rounds as f64).cbrt().round() as usize).max(2);
        pad_action_count(target, rounds).leaves
    }

    /// `2 / √(T̄ k)`.
    pub fn eta(&self, horizon: LearnerHorizon) -> f64 {
        let rounds = self.learner_rounds(horizon).max(1) as f64;
        2.0 / (rounds * self.grid_size(horizon) as f64).sqrt()
    }

    pub fn fixed_price_revenue(&self, price: f64) -> f64 {
        self.buyers.iter().map(|b| b.pays_at(price)).sum()
    }
}

/// The price-choosing side of the reduction.
pub trait PriceLearner {
    /// A fresh arm (1-based). Repeated calls without feedback in between
    /// return the arm still awaiting feedback.
    fn sample(&mut self) -> Result<usize>;

    /// Loss of the arm returned by the last `sample`.
    fn feedback(&mut self, loss: f64) -> Result<()>;
}

impl<W: Weights> PriceLearner for Smb<W> {
    fn sample(&mut self) -> Result<usize> {
        self.begin_round()
    }

    fn feedback(&mut self, loss: f64) -> Result<()> {
        self.finish_round(loss).map(|_| ())
    }
}

/// Plays a fixed list of arms; records the feedback it receives.
#[derive(Debug, Clone, Default)]
pub struct ScriptedLearner {
    arms: Vec<usize>,
    next: usize,
    awaiting: bool,
    pub feedback: Vec<f64>,
}

impl ScriptedLearner {
    pub fn new(arms: Vec<usize>) -> Self {
        Self {
            arms,
            ..Default::default()
        }
    }
}

impl PriceLearner for ScriptedLearner {
    fn sample(&mut self) -> Result<usize> {
        if !self.awaiting {
            self.next += 1;
            self.awaiting = true;
        }
        self.arms
            .get(self.next - 1)
            .copied()
            .ok_or_else(|| Error::Config("scripted learner ran out of arms".into()))
    }

    fn feedback(&mut self, loss: f64) -> Result<()> {
        self.feedback.push(loss);
        self.awaiting = false;
        Ok(())
    }
}

/// Everything a seller run produced. Block vectors are indexed from block 1
/// at position 0; `bernoulli[j]` is `β_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SellerRun {
    pub k: usize,
    pub tau_bar: usize,
    /// `ρ'_1..ρ'_{N+1}`.
    pub block_prices: Vec<f64>,
    /// Arms behind `block_prices`.
    pub block_arms: Vec<usize>,
    /// `ρ_1..ρ_{T+τ̄}`.
    pub daily_prices: Vec<f64>,
    /// `β_0..β_{N+2}`.
    pub bernoulli: Vec<bool>,
    /// `r'_1..r'_N`.
    pub block_feedback: Vec<f64>,
    /// `r_1..r_T`.
    pub revenue_per_day: Vec<f64>,
    /// The switch gate fired on block `t`.
    pub switched: Vec<bool>,
    /// The learner was updated with block `t`'s revenue.
    pub updated: Vec<bool>,
}

impl SellerRun {
    pub fn blocks(&self) -> usize {
        self.block_feedback.len()
    }

    pub fn total_revenue(&self) -> f64 {
        self.revenue_per_day.iter().sum()
    }

    pub fn switch_gate(&self, block: usize) -> bool {
        !self.bernoulli[block] && self.bernoulli[block + 1]
    }

    pub fn feedback_gate(&self, block: usize) -> bool {
        !self.bernoulli[block + 1] && self.bernoulli[block + 2]
    }
}

/// Runs the block loop with the given coins and learner. `bernoulli` must
/// hold `β_0..β_{N+2}`.
pub fn simulate_seller<L: PriceLearner + ?Sized>(
    instance: &PricingInstance,
    k: usize,
    bernoulli: &[bool],
    learner: &mut L,
) -> Result<SellerRun> {
    let tau = instance.tau_bar();
    let blocks = instance.blocks();
    if bernoulli.len() < blocks + 3 {
        return Err(Error::Config(format!(
            "need {} coin flips, got {}",
            blocks + 3,
            bernoulli.len()
        )));
    }
    let price_of = |arm: usize| arm as f64 / k as f64;

    let mut arm = learner.sample()?;
    let mut block_arms = vec![arm];
    let mut block_prices = vec![price_of(arm)];
    let mut daily_prices = vec![price_of(arm); tau];
    let mut block_feedback = Vec::with_capacity(blocks);
    let mut revenue_per_day = Vec::with_capacity(instance.horizon());
    let mut switched = Vec::with_capacity(blocks);
    let mut updated = Vec::with_capacity(blocks);

    for t in 1..=blocks {
        let switch = !bernoulli[t] && bernoulli[t + 1];
        if switch {
            arm = learner.sample()?;
        }
        switched.push(switch);
        block_arms.push(arm);
        block_prices.push(price_of(arm));
        daily_prices.extend(std::iter::repeat_n(price_of(arm), tau));

        // days (t-1)τ̄+1 ..= tτ̄, 0-based below
        let mut block_total = 0.0;
        for day in (t - 1) * tau..t * tau {
            let buyer = &instance.buyers()[day];
            let r = buyer_revenue(buyer, &daily_prices[day..=day + buyer.patience])?;
            revenue_per_day.push(r);
            block_total += r;
        }
        let block_revenue = block_total / tau as f64;
        block_feedback.push(block_revenue);

        let update = !bernoulli[t + 1] && bernoulli[t + 2];
        if update {
            learner.feedback(1.0 - block_revenue)?;
        }
        updated.push(update);
    }

    Ok(SellerRun {
        k,
        tau_bar: tau,
        block_prices,
        block_arms,
        daily_prices,
        bernoulli: bernoulli[..blocks + 3].to_vec(),
        block_feedback,
        revenue_per_day,
        switched,
        updated,
    })
}

/// Fair coins `β_0..β_{N+2}` from stream 1 of the run's seed; the learner
/// uses stream 0.
pub fn draw_coins(seed: u64, blocks: usize) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..blocks + 3).map(|_| rng.random::<bool>()).collect()
}

/// The full seller: SMB over the price grid, coins and block loop.
pub fn run_pricing(
    instance: &PricingInstance,
    seed: u64,
    horizon: LearnerHorizon,
) -> Result<SellerRun> {
    let k = instance.grid_size(horizon);
    let eta = instance.eta(horizon);
    let mut learner = SparseSmbState::new(MetricTree::new(k)?, eta, seed)?;
    let coins = draw_coins(seed, instance.blocks());
    simulate_seller(instance, k, &coins, &mut learner)
}

/// Best single price in hindsight over `{v_t} ∪ {1/k, ..., 1}`. Under a fixed
/// price a buyer pays iff the price is at most their value, so revenue is
/// maximized at one of the values and the candidate set is exact.
pub fn best_fixed_price(instance: &PricingInstance, k: usize) -> (f64, f64) {
    let mut values: Vec<f64> = instance.buyers().iter().map(|b| b.value).collect();
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let revenue = |price: f64| {
        let first = values.partition_point(|&v| v < price);
        price * (n - first) as f64
    };
    let grid = (1..=k).map(|i| i as f64 / k as f64);
    values
        .iter()
        .copied()
        .chain(grid)
        .map(|p| (p, revenue(p)))
        .fold(
            (1.0, 0.0),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        )
}

/// Best fixed revenue minus the run's realized revenue.
pub fn pricing_regret(instance: &PricingInstance, run: &SellerRun) -> f64 {
    best_fixed_price(instance, run.k).1 - run.total_revenue()
}

#[derive(Debug, Deserialize, Serialize)]
struct BuyerRow {
    value: f64,
    patience: usize,
}

/// Reads a `value,patience` CSV.
pub fn read_buyers_csv<R: Read>(reader: R) -> Result<Vec<Buyer>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::InvalidBuyer(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["value", "patience"] {
        return Err(Error::InvalidBuyer(format!(
            "expected header `value,patience`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.deserialize::<BuyerRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::InvalidBuyer(e.to_string()))?;
            Buyer::new(row.value, row.patience)
        })
        .collect()
}

pub fn read_buyers_file(path: &Path) -> Result<Vec<Buyer>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_buyers_csv(file).map_err(|e| match e {
        Error::InvalidBuyer(msg) => Error::io(path, msg),
        other => other,
    })
}

pub fn write_buyers_csv<W: Write>(writer: W, buyers: &[Buyer]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for b in buyers {
        wtr.serialize(BuyerRow {
            value: b.value,
            patience: b.patience,
        })
        .map_err(|e| Error::Config(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::Config(e.to_string()))
}

/// Writes `block,price,beta,switched,updated,block_revenue`, one row per block.
pub fn write_blocks_csv<W: Write>(writer: W, run: &SellerRun) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Config(e.to_string());
    wtr.write_record([
        "block",
        "price",
        "beta",
        "switched",
        "updated",
        "block_revenue",
    ])
    .map_err(err)?;
    for t in 1..=run.blocks() {
        wtr.write_record([
            t.to_string(),
            run.block_prices[t - 1].to_string(),
            u8::from(run.bernoulli[t]).to_string(),
            u8::from(run.switched[t - 1]).to_string(),
            u8::from(run.updated[t - 1]).to_string(),
            run.block_feedback[t - 1].to_string(),
        ])
        .map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::Config(e.to_string()))
}

/// A four-block instance (`τ̄ = 2`, eight days) with fixed coins and a
/// scripted learner whose outcome was worked out day by day.
pub mod fixture {
    use super::*;

    pub const TAU_BAR: usize = 2;
    pub const K: usize = 4;
    /// `β_0..β_6`.
    pub const COINS: [bool; 7] = [false, true, false, true, true, false, true];
    /// Arms the scripted learner hands out: initial draw, then the one switch.
    pub const ARMS: [usize; 2] = [2, 3];
    pub const BUYERS: [(f64, usize); 8] = [
        (0.6, 0),
        (0.4, 2),
        (0.9, 2),
        (0.8, 1),
        (1.0, 0),
        (0.7, 2),
        (0.75, 1),
        (0.3, 2),
    ];

    pub const EXPECTED_BLOCK_PRICES: [f64; 5] = [0.5, 0.5, 0.75, 0.75, 0.75];
    pub const EXPECTED_DAILY_REVENUE: [f64; 8] = [0.5, 0.0, 0.5, 0.5, 0.75, 0.0, 0.75, 0.0];
    pub const EXPECTED_BLOCK_FEEDBACK: [f64; 4] = [0.25, 0.5, 0.375, 0.375];
    pub const EXPECTED_SWITCHED: [bool; 4] = [false, true, false, false];
    pub const EXPECTED_UPDATED: [bool; 4] = [true, false, false, true];
    /// Losses handed to the learner: `1 - r'_1` and `1 - r'_4`.
    pub const EXPECTED_FEEDBACK: [f64; 2] = [0.75, 0.625];
    pub const EXPECTED_BEST_PRICE: f64 = 0.6;
    pub const EXPECTED_BEST_REVENUE: f64 = 3.6;
    pub const EXPECTED_REGRET: f64 = 0.6;

    pub fn instance() -> PricingInstance {
        let buyers = BUYERS
            .iter()
            .map(|&(v, p)| Buyer::new(v, p).unwrap())
            .collect();
        PricingInstance::new(buyers, TAU_BAR).unwrap()
    }

    /// Runs the fixture, returning the run and the feedback the learner saw.
    pub fn run() -> Result<(SellerRun, Vec<f64>)> {
        let mut learner = ScriptedLearner::new(ARMS.to_vec());
        let run = simulate_seller(&instance(), K, &COINS, &mut learner)?;
        Ok((run, learner.feedback))
    }
}
