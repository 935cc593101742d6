//! Seeded replications of the bandit, Lipschitz and pricing settings, with
//! regret and movement accounting and the files they are written to.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generators::{generate_buyers, generate_losses, LossSpec, PatienceDist, ValueDist};
use super::stats::{mean_stderr, MeanStderr};
use super::verify::VerifyScope;
use crate::baselines::Exp3State;
use crate::continuum::{
    movement_regret, plan_discretization, DriftingSine, LineMetric, MovementMetric, PointLosses,
};
use crate::error::{Error, Result};
use crate::metric_tree::{lca_level0, pad_action_count, MetricTree};
use crate::pricing::{
    best_fixed_price, read_buyers_file, run_pricing, write_blocks_csv, LearnerHorizon,
    PricingInstance, SellerRun,
};
use crate::smb::{default_eta, SparseSmbState, TraceLine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bandit,
    Lipschitz,
    Pricing,
    Verify,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Bandit => "bandit",
            Mode::Lipschitz => "lipschitz",
            Mode::Pricing => "pricing",
            Mode::Verify => "verify",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bandit" => Ok(Mode::Bandit),
            "lipschitz" => Ok(Mode::Lipschitz),
            "pricing" => Ok(Mode::Pricing),
            "verify" => Ok(Mode::Verify),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Smb,
    Exp3,
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::Smb => "smb",
            LearnerKind::Exp3 => "exp3",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Number of arms (bandit mode).
    pub k: Option<usize>,
    /// Lipschitz constant (lipschitz mode).
    pub lipschitz: Option<f64>,
    pub horizon: usize,
    pub tau_bar: usize,
    pub eta: Option<f64>,
    pub adversary: LossSpec,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub trace: bool,
    /// Spacing of rows in `records.csv`; `None` gives about 100 rows per run.
    pub record_every: Option<usize>,
    /// Run Exp3 next to SMB on the same streams (bandit mode).
    pub baseline: bool,
    /// Period of the drifting sine in lipschitz mode; `None` means `2T`.
    pub period: Option<f64>,
    pub learner_horizon: LearnerHorizon,
    /// Buyers CSV; generated from `values`/`patience` when absent.
    pub buyers: Option<PathBuf>,
    pub values: ValueDist,
    pub patience: PatienceDist,
    pub scope: VerifyScope,
    pub budget: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Bandit,
            k: None,
            lipschitz: None,
            horizon: 10_000,
            tau_bar: 2,
            eta: None,
            adversary: LossSpec::default(),
            seeds: vec![0],
            out: None,
            trace: false,
            record_every: None,
            baseline: true,
            period: None,
            learner_horizon: LearnerHorizon::HalfBlocks,
            buyers: None,
            values: ValueDist::Uniform { lo: 0.0, hi: 1.0 },
            patience: PatienceDist::Uniform,
            scope: VerifyScope::All,
            budget: 10_000,
        }
    }
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() && self.mode != Mode::Verify {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidEta(eta));
            }
        }
        match self.mode {
            Mode::Bandit => {
                match self.k {
                    None => return Err(Error::Config("bandit mode needs k".into())),
                    Some(k) if k < 2 => {
                        return Err(Error::Config(format!("k must be at least 2, got {k}")))
                    }
                    _ => {}
                }
                if self.horizon == 0 {
                    return Err(Error::InvalidHorizon(0));
                }
            }
            Mode::Lipschitz => {
                let l = self
                    .lipschitz
                    .ok_or_else(|| Error::Config("lipschitz mode needs L".into()))?;
                plan_discretization(l, self.horizon)?;
            }
            Mode::Pricing => {
                if self.tau_bar == 0 {
                    return Err(Error::Config("tau_bar must be at least 1".into()));
                }
                if self.buyers.is_none() && self.horizon == 0 {
                    return Err(Error::InvalidHorizon(0));
                }
            }
            Mode::Verify => {}
        }
        Ok(())
    }

    fn record_spacing(&self, rounds: usize) -> usize {
        self.record_every
            .unwrap_or_else(|| rounds.div_ceil(100))
            .max(1)
    }
}

/// Parses `3`, `1,2,5` or a half-open range `0..20`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seeds `{s}`"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..b).collect());
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}

/// One row of `records.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub seed: u64,
    /// Round, or block in pricing mode.
    pub t: usize,
    pub learner: LearnerKind,
    pub cum_loss: f64,
    pub cum_movement: f64,
    pub cum_regret: f64,
}

/// End-of-run totals for one (seed, learner) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTotals {
    pub seed: u64,
    pub learner: LearnerKind,
    pub rounds: usize,
    pub loss: f64,
    pub movement: f64,
    /// Total loss of the best fixed arm, grid point or price (in loss form).
    pub comparator_loss: f64,
    pub regret: f64,
    /// `switches_by_level[d]`: rounds whose action left its previous level-`d` subtree.
    pub switches_by_level: Vec<u64>,
}

/// SMB-only per-run diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmbDiagnostics {
    pub mean_second_moment: f64,
    pub mean_touched: f64,
    pub bad_rounds: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub totals: RunTotals,
    pub records: Vec<ExperimentRecord>,
    /// Played arms (1-based, in the space the comparator ranges over).
    pub actions: Vec<usize>,
    pub trace: Vec<TraceLine>,
    pub diagnostics: Option<SmbDiagnostics>,
    pub seller: Option<SellerRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSummary {
    pub learner: LearnerKind,
    pub regret: MeanStderr,
    pub movement: MeanStderr,
    pub loss: MeanStderr,
    pub switches_by_level: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub horizon: usize,
    /// Arms the comparator ranges over (the price or point grid outside bandit mode).
    pub k: usize,
    /// Leaves of the tree SMB ran on.
    pub tree_leaves: usize,
    pub eta: f64,
    pub setting: String,
    pub seeds: Vec<u64>,
    pub learners: Vec<LearnerSummary>,
    pub runs: Vec<RunTotals>,
    pub diagnostics: Vec<SmbDiagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub runs: Vec<SeedRun>,
    pub summary: Summary,
}

impl ExperimentOutput {
    pub fn records(&self) -> impl Iterator<Item = &ExperimentRecord> {
        self.runs.iter().flat_map(|r| r.records.iter())
    }

    pub fn learner(&self, kind: LearnerKind) -> Option<&LearnerSummary> {
        self.summary.learners.iter().find(|l| l.learner == kind)
    }
}

/// Counts, per level `d` of a `2^depth`-leaf tree, the steps whose LCA is above `d`.
pub fn switches_by_level(actions: &[usize], depth: u32) -> Vec<u64> {
    let mut counts = vec![0u64; depth as usize];
    for w in actions.windows(2) {
        let lca = lca_level0(w[0] - 1, w[1] - 1) as usize;
        for c in counts.iter_mut().take(lca.min(depth as usize)) {
            *c += 1;
        }
    }
    counts
}

/// Cumulative accounting shared by the bandit-style runs.
struct Ledger {
    seed: u64,
    learner: LearnerKind,
    every: usize,
    loss: f64,
    movement: f64,
    /// `(t, cum_loss, cum_movement)` at record points.
    marks: Vec<(usize, f64, f64)>,
}

impl Ledger {
    fn new(seed: u64, learner: LearnerKind, every: usize) -> Self {
        Self {
            seed,
            learner,
            every,
            loss: 0.0,
            movement: 0.0,
            marks: Vec::new(),
        }
    }

    /// Returns whether `t` is a record point.
    fn push(&mut self, t: usize, horizon: usize, loss: f64, movement: f64) -> bool {
        self.loss += loss;
        self.movement += movement;
        let mark = t.is_multiple_of(self.every) || t == horizon;
        if mark {
            self.marks.push((t, self.loss, self.movement));
        }
        mark
    }

    /// `comparator[j]` is the comparator's cumulative loss at the `j`-th mark.
    fn finish(
        self,
        comparator: &[f64],
        switches: Vec<u64>,
        rounds: usize,
    ) -> (RunTotals, Vec<ExperimentRecord>) {
        let records: Vec<ExperimentRecord> = self
            .marks
            .iter()
            .zip(comparator)
            .map(|(&(t, l, m), c)| ExperimentRecord {
                seed: self.seed,
                t,
                learner: self.learner,
                cum_loss: l,
                cum_movement: m,
                cum_regret: l + m - c,
            })
            .collect();
        let comparator_loss = comparator.last().copied().unwrap_or(0.0);
        let totals = RunTotals {
            seed: self.seed,
            learner: self.learner,
            rounds,
            loss: self.loss,
            movement: self.movement,
            comparator_loss,
            regret: self.loss + self.movement - comparator_loss,
            switches_by_level: switches,
        };
        (totals, records)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanditSetup {
    pub k: usize,
    pub horizon: usize,
    pub eta: f64,
    pub spec: LossSpec,
    pub record_every: usize,
    pub trace: bool,
}

/// Runs one learner on one seed's loss stream. SMB plays on the padded tree;
/// movement is charged in the tree over the original arms.
pub fn run_bandit_seed(setup: &BanditSetup, learner: LearnerKind, seed: u64) -> Result<SeedRun> {
    let BanditSetup {
        k,
        horizon,
        eta,
        spec,
        record_every,
        trace: want_trace,
    } = *setup;
    let metric = MetricTree::new(k.next_power_of_two().max(2))?;
    let padded = pad_action_count(k, horizon);
    let mut smb = match learner {
        LearnerKind::Smb => Some(SparseSmbState::new(
            MetricTree::new(padded.leaves)?,
            eta,
            seed,
        )?),
        LearnerKind::Exp3 => None,
    };
    let mut exp3 = match learner {
        LearnerKind::Exp3 => Some(Exp3State::new(k, eta, seed)?),
        LearnerKind::Smb => None,
    };

    let mut ledger = Ledger::new(seed, learner, record_every);
    let mut arm_totals = vec![0.0; k];
    let mut snapshots: Vec<Vec<f64>> = Vec::new();
    let mut actions = Vec::with_capacity(horizon);
    let mut trace = Vec::new();
    let (mut second, mut touched, mut bad) = (0.0, 0usize, 0u64);

    for (t0, losses) in generate_losses(spec, horizon, k, seed).enumerate() {
        let t = t0 + 1;
        let (arm, loss) = if let Some(s) = smb.as_mut() {
            let tr = s.step(|leaf| losses[padded.original_arm(leaf) - 1])?;
            second += tr.second_moment;
            touched += tr.touched;
            bad += u64::from(tr.bad_event);
            if want_trace {
                trace.push(s.trace_line(&tr));
            }
            (padded.original_arm(tr.action), tr.loss)
        } else {
            let e = exp3.as_mut().expect("one learner is set");
            e.step(|a| losses[a - 1])?
        };
        let movement = actions
            .last()
            .map_or(0.0, |&prev: &usize| metric.switch_cost0(prev - 1, arm - 1));
        actions.push(arm);
        for (tot, l) in arm_totals.iter_mut().zip(&losses) {
            *tot += l;
        }
        if ledger.push(t, horizon, loss, movement) {
            snapshots.push(arm_totals.clone());
        }
    }

    let best = (0..k)
        .min_by(|&a, &b| arm_totals[a].total_cmp(&arm_totals[b]))
        .unwrap_or(0);
    let comparator: Vec<f64> = snapshots.iter().map(|s| s[best]).collect();
    let switches = switches_by_level(&actions, metric.depth());
    let (totals, records) = ledger.finish(&comparator, switches, horizon);
    let diagnostics = smb.as_ref().map(|_| SmbDiagnostics {
        mean_second_moment: second / horizon as f64,
        mean_touched: touched as f64 / horizon as f64,
        bad_rounds: bad,
    });
    Ok(SeedRun {
        totals,
        records,
        actions,
        trace,
        diagnostics,
        seller: None,
    })
}

/// The loss sequence used by lipschitz mode.
pub fn lipschitz_losses(lipschitz: f64, horizon: usize, period: Option<f64>) -> DriftingSine {
    DriftingSine::with_lipschitz(lipschitz, period.unwrap_or(2.0 * horizon as f64), horizon)
}

pub fn run_lipschitz_seed(
    lipschitz: f64,
    horizon: usize,
    period: Option<f64>,
    eta: Option<f64>,
    record_every: usize,
    want_trace: bool,
    seed: u64,
) -> Result<SeedRun> {
    let plan = plan_discretization(lipschitz, horizon)?;
    let eta = eta.unwrap_or(plan.eta);
    let losses = lipschitz_losses(lipschitz, horizon, period);
    let line = LineMetric { k: plan.k };
    let mut smb = SparseSmbState::new(plan.tree(), eta, seed)?;

    let mut ledger = Ledger::new(seed, LearnerKind::Smb, record_every);
    let mut actions: Vec<usize> = Vec::with_capacity(horizon);
    let mut trace = Vec::new();
    let (mut second, mut touched, mut bad) = (0.0, 0usize, 0u64);
    for t in 1..=horizon {
        let tr = smb.step(|arm| losses.eval(t, plan.point(arm)))?;
        second += tr.second_moment;
        touched += tr.touched;
        bad += u64::from(tr.bad_event);
        if want_trace {
            trace.push(smb.trace_line(&tr));
        }
        let movement = actions
            .last()
            .map_or(0.0, |&prev| line.cost(prev, tr.action));
        actions.push(tr.action);
        ledger.push(t, horizon, tr.loss, movement);
    }

    let summary = movement_regret(&actions, plan.k, &losses, &line, lipschitz);
    let x = summary.comparator_point;
    let mut acc = 0.0;
    let mut prefix = Vec::with_capacity(ledger.marks.len());
    let mut marks = ledger.marks.iter().map(|m| m.0).peekable();
    for t in 1..=horizon {
        acc += losses.eval(t, x);
        if marks.peek() == Some(&t) {
            prefix.push(acc);
            marks.next();
        }
    }
    let switches = switches_by_level(&actions, plan.tree().depth());
    let (mut totals, records) = ledger.finish(&prefix, switches, horizon);
    // the grid search's own total, summed in its own order
    totals.comparator_loss = summary.comparator_loss;
    totals.regret = totals.loss + totals.movement - totals.comparator_loss;
    Ok(SeedRun {
        totals,
        records,
        actions,
        trace,
        diagnostics: Some(SmbDiagnostics {
            mean_second_moment: second / horizon as f64,
            mean_touched: touched as f64 / horizon as f64,
            bad_rounds: bad,
        }),
        seller: None,
    })
}

/// Buyers for one pricing seed: the CSV if given, otherwise generated.
pub fn pricing_instance(config: &ExperimentConfig, seed: u64) -> Result<PricingInstance> {
    let buyers = match &config.buyers {
        Some(path) => read_buyers_file(path)?,
        None => generate_buyers(
            config.horizon,
            config.tau_bar,
            config.values,
            config.patience,
            seed,
        ),
    };
    PricingInstance::padded(buyers, config.tau_bar)
}

/// One seller run. Losses are `1 - r` per day, so regret in loss form equals
/// best fixed revenue minus realized revenue.
pub fn run_pricing_seed(
    instance: &PricingInstance,
    horizon_rule: LearnerHorizon,
    record_every: usize,
    seed: u64,
) -> Result<SeedRun> {
    let seller = run_pricing(instance, seed, horizon_rule)?;
    let k = seller.k;
    let tau = instance.tau_bar();
    let blocks = seller.blocks();
    let (best_price, _) = best_fixed_price(instance, k);

    let mut ledger = Ledger::new(seed, LearnerKind::Smb, record_every);
    let mut comparator = Vec::new();
    let mut best_acc = 0.0;
    for t in 1..=blocks {
        let days = (t - 1) * tau..t * tau;
        let lost: f64 = seller.revenue_per_day[days.clone()]
            .iter()
            .map(|r| 1.0 - r)
            .sum();
        best_acc += instance.buyers()[days]
            .iter()
            .map(|b| 1.0 - b.pays_at(best_price))
            .sum::<f64>();
        if ledger.push(t, blocks, lost, 0.0) {
            comparator.push(best_acc);
        }
    }
    let actions = seller.block_arms[..blocks].to_vec();
    let switches = switches_by_level(&actions, MetricTree::new(k)?.depth());
    let (totals, records) = ledger.finish(&comparator, switches, blocks);
    Ok(SeedRun {
        totals,
        records,
        actions,
        trace: Vec::new(),
        diagnostics: None,
        seller: Some(seller),
    })
}

fn summarize(
    config: &ExperimentConfig,
    runs: &[SeedRun],
    k: usize,
    tree_leaves: usize,
    eta: f64,
    setting: String,
) -> Summary {
    let mut kinds: Vec<LearnerKind> = runs.iter().map(|r| r.totals.learner).collect();
    kinds.sort();
    kinds.dedup();
    let learners = kinds
        .into_iter()
        .map(|kind| {
            let mine: Vec<&RunTotals> = runs
                .iter()
                .map(|r| &r.totals)
                .filter(|t| t.learner == kind)
                .collect();
            let pick = |f: fn(&RunTotals) -> f64| {
                mean_stderr(&mine.iter().map(|t| f(t)).collect::<Vec<_>>())
            };
            let levels = mine.first().map_or(0, |t| t.switches_by_level.len());
            let switches = (0..levels)
                .map(|d| {
                    mine.iter()
                        .map(|t| t.switches_by_level[d] as f64)
                        .sum::<f64>()
                        / mine.len() as f64
                })
                .collect();
            LearnerSummary {
                learner: kind,
                regret: pick(|t| t.regret),
                movement: pick(|t| t.movement),
                loss: pick(|t| t.loss),
                switches_by_level: switches,
            }
        })
        .collect();
    Summary {
        mode: config.mode,
        horizon: config.horizon,
        k,
        tree_leaves,
        eta,
        setting,
        seeds: config.seeds.clone(),
        learners,
        runs: runs.iter().map(|r| r.totals.clone()).collect(),
        diagnostics: runs.iter().filter_map(|r| r.diagnostics).collect(),
    }
}

/// Runs every seed (in parallel) and aggregates in seed order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let seeds = &config.seeds;
    let (runs, summary) = match config.mode {
        Mode::Bandit => {
            let k = config.k.expect("validated");
            let setup = BanditSetup {
                k,
                horizon: config.horizon,
                eta: config.eta.unwrap_or_else(|| default_eta(k, config.horizon)),
                spec: config.adversary,
                record_every: config.record_spacing(config.horizon),
                trace: config.trace,
            };
            let mut learners = vec![LearnerKind::Smb];
            if config.baseline {
                learners.push(LearnerKind::Exp3);
            }
            let jobs: Vec<(u64, LearnerKind)> = seeds
                .iter()
                .flat_map(|&s| learners.iter().map(move |&l| (s, l)))
                .collect();
            let runs = jobs
                .par_iter()
                .map(|&(s, l)| run_bandit_seed(&setup, l, s))
                .collect::<Result<Vec<_>>>()?;
            let leaves = pad_action_count(k, config.horizon).leaves;
            let summary = summarize(
                config,
                &runs,
                k,
                leaves,
                setup.eta,
                config.adversary.to_string(),
            );
            (runs, summary)
        }
        Mode::Lipschitz => {
            let l = config.lipschitz.expect("validated");
            let plan = plan_discretization(l, config.horizon)?;
            let every = config.record_spacing(config.horizon);
            let runs = seeds
                .par_iter()
                .map(|&s| {
                    run_lipschitz_seed(
                        l,
                        config.horizon,
                        config.period,
                        config.eta,
                        every,
                        config.trace,
                        s,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let losses = lipschitz_losses(l, config.horizon, config.period);
            let setting = format!(
                "drifting_sine(amplitude={},period={}) target_k={}",
                losses.amplitude, losses.period, plan.target_k
            );
            let summary = summarize(
                config,
                &runs,
                plan.k,
                plan.k,
                config.eta.unwrap_or(plan.eta),
                setting,
            );
            (runs, summary)
        }
        Mode::Pricing => {
            let runs = seeds
                .par_iter()
                .map(|&s| {
                    let instance = pricing_instance(config, s)?;
                    let every = config.record_spacing(instance.blocks());
                    run_pricing_seed(&instance, config.learner_horizon, every, s)
                })
                .collect::<Result<Vec<_>>>()?;
            let instance = pricing_instance(config, seeds[0])?;
            let k = instance.grid_size(config.learner_horizon);
            let setting = format!(
                "tau_bar={} learner_rounds={} blocks={}",
                instance.tau_bar(),
                instance.learner_rounds(config.learner_horizon),
                instance.blocks()
            );
            let mut summary = summarize(
                config,
                &runs,
                k,
                k,
                instance.eta(config.learner_horizon),
                setting,
            );
            summary.horizon = instance.horizon();
            (runs, summary)
        }
        Mode::Verify => {
            return Err(Error::Config(
                "verify mode is run through verify_invariants".into(),
            ))
        }
    };
    Ok(ExperimentOutput {
        config: config.clone(),
        runs,
        summary,
    })
}

pub fn write_records_csv<W: Write>(writer: W, records: &[&ExperimentRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Config(e.to_string());
    for r in records {
        wtr.serialize(r).map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::Config(e.to_string()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn plot_script(output: &ExperimentOutput) -> String {
    let mut s = String::from(
        "# gnuplot -p plot.gp\n\
         set datafile separator ','\n\
         set key top left\n\
         set xlabel 't'\n\
         set ylabel 'cumulative regret'\n",
    );
    let mut series = Vec::new();
    for kind in output.summary.learners.iter().map(|l| l.learner) {
        for seed in &output.summary.seeds {
            series.push(format!(
                "'records.csv' using ($1=={seed} && strcol(3) eq '{kind}' ? $2 : 1/0):6 \
                 with lines title '{kind} seed {seed}'"
            ));
        }
    }
    s.push_str("plot ");
    s.push_str(&series.join(", \\\n     "));
    s.push('\n');
    s
}

/// Writes `records.csv`, `summary.json`, `plot.gp` and, when present, per-seed
/// `trace_<seed>.jsonl` and `blocks_<seed>.csv` into `dir`.
pub fn write_outputs(output: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let path = dir.join("records.csv");
    let mut buf = Vec::new();
    write_records_csv(&mut buf, &output.records().collect::<Vec<_>>())?;
    write_file(&path, &buf)?;
    written.push(path);

    let path = dir.join("summary.json");
    let mut json =
        serde_json::to_string_pretty(&output.summary).map_err(|e| Error::Config(e.to_string()))?;
    json.push('\n');
    write_file(&path, json.as_bytes())?;
    written.push(path);

    let path = dir.join("plot.gp");
    write_file(&path, plot_script(output).as_bytes())?;
    written.push(path);

    for run in &output.runs {
        let seed = run.totals.seed;
        if !run.trace.is_empty() {
            let path = dir.join(format!("trace_{seed}.jsonl"));
            let mut buf = String::new();
            for line in &run.trace {
                buf.push_str(
                    &serde_json::to_string(line).map_err(|e| Error::Config(e.to_string()))?,
                );
                buf.push('\n');
            }
            write_file(&path, buf.as_bytes())?;
            written.push(path);
        }
        if let Some(seller) = &run.seller {
            let path = dir.join(format!("blocks_{seed}.csv"));
            let mut buf = Vec::new();
            write_blocks_csv(&mut buf, seller)?;
            write_file(&path, &buf)?;
            written.push(path);
        }
    }
    Ok(written)
}
