use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use smb::bench::{
    run_experiment, verify_invariants, write_outputs, ExperimentConfig, ExperimentOutput, Mode,
};

/// Slowly moving bandit experiments.
///
/// Settings are taken from the defaults, then the `--config` file
/// (`key = value` lines), then the command-line flags.
#[derive(Parser, Debug)]
#[command(name = "smb-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// k-armed bandit with tree movement costs; SMB against Exp3.
    Bandit(Common),
    /// Lipschitz losses on [0, 1] through the discretized grid.
    Lipschitz(Common),
    /// Posted prices against patient buyers.
    Pricing(Common),
    /// Invariant suites; exits non-zero if any check fails.
    Verify(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// key = value file applied before the flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// number of arms
    #[arg(long)]
    k: Option<String>,
    /// horizon
    #[arg(long = "T")]
    horizon: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    /// Lipschitz constant
    #[arg(long = "L")]
    lipschitz: Option<String>,
    /// maximum buyer patience
    #[arg(long = "tau-bar")]
    tau_bar: Option<String>,
    /// stochastic_gap(mu,gap) | drifting_sine(period) | adversarial_flip(epoch)
    #[arg(long)]
    adversary: Option<String>,
    /// `3`, `1,2,5` or `0..20`
    #[arg(long)]
    seeds: Option<String>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// write a per-round JSON-lines trace for each seed
    #[arg(long)]
    trace: bool,
    #[arg(long = "record-every")]
    record_every: Option<String>,
    /// drifting-sine period in lipschitz mode (default 2T)
    #[arg(long)]
    period: Option<String>,
    /// skip the Exp3 baseline in bandit mode
    #[arg(long = "no-baseline")]
    no_baseline: bool,
    /// buyers CSV with header `value,patience`
    #[arg(long)]
    buyers: Option<PathBuf>,
    /// point(v) | uniform | uniform(lo,hi)
    #[arg(long)]
    values: Option<String>,
    /// point(p) | uniform
    #[arg(long)]
    patience: Option<String>,
    /// half | all: rounds used to size the pricing learner
    #[arg(long = "learner-horizon")]
    learner_horizon: Option<String>,
    /// smb | mw | pricing | all
    #[arg(long)]
    scope: Option<String>,
    /// rounds for the SMB suite, sequences for the MW suite
    #[arg(long)]
    budget: Option<String>,
}

impl Common {
    fn into_config(self, mode: Mode) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::new(mode);
        if let Some(path) = &self.config {
            config.apply_file(path)?;
            // the subcommand decides the mode
            config.mode = mode;
        }
        let flags = [
            ("k", self.k),
            ("T", self.horizon),
            ("eta", self.eta),
            ("L", self.lipschitz),
            ("tau_bar", self.tau_bar),
            ("adversary", self.adversary),
            ("seeds", self.seeds),
            ("out", self.out.map(|p| p.display().to_string())),
            ("record_every", self.record_every),
            ("period", self.period),
            ("buyers", self.buyers.map(|p| p.display().to_string())),
            ("values", self.values),
            ("patience", self.patience),
            ("learner_horizon", self.learner_horizon),
            ("scope", self.scope),
            ("budget", self.budget),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                config
                    .set(key, &value)
                    .with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        if self.trace {
            config.trace = true;
        }
        if self.no_baseline {
            config.baseline = false;
        }
        Ok(config)
    }
}

fn print_summary(output: &ExperimentOutput) {
    let s = &output.summary;
    println!(
        "{} T={} k={} tree={} eta={:.6} seeds={} [{}]",
        s.mode,
        s.horizon,
        s.k,
        s.tree_leaves,
        s.eta,
        s.seeds.len(),
        s.setting
    );
    for l in &s.learners {
        let switches: Vec<String> = l
            .switches_by_level
            .iter()
            .map(|x| format!("{x:.1}"))
            .collect();
        println!(
            "  {:<5} regret {:.2} ± {:.2}  movement {:.2} ± {:.2}  switches by level [{}]",
            l.learner.to_string(),
            l.regret.mean,
            l.regret.stderr,
            l.movement.mean,
            l.movement.stderr,
            switches.join(", ")
        );
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (mode, common) = match cli.command {
        Command::Bandit(c) => (Mode::Bandit, c),
        Command::Lipschitz(c) => (Mode::Lipschitz, c),
        Command::Pricing(c) => (Mode::Pricing, c),
        Command::Verify(c) => (Mode::Verify, c),
    };
    let config = common.into_config(mode)?;

    if mode == Mode::Verify {
        let report = verify_invariants(config.scope, config.budget);
        for c in &report.checks {
            println!(
                "{} {}/{}: measured {:.3e}, threshold {:.3e} ({})",
                if c.passed { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.measured,
                c.threshold,
                c.detail
            );
        }
        if let Some(dir) = &config.out {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join("verify.json");
            std::fs::write(&path, report.to_json())
                .with_context(|| format!("writing {}", path.display()))?;
        }
        return Ok(report.all_passed());
    }

    let output = run_experiment(&config)?;
    print_summary(&output);
    if let Some(dir) = &config.out {
        for path in write_outputs(&output, dir)? {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
