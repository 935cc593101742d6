//! Plain-text `key = value` config files.
//!
//! ```text
//! # bandit run
//! k = 16
//! T = 100000
//! seeds = 0..20
//! adversary = stochastic_gap(0.4, 0.2)
//! ```

use std::path::{Path, PathBuf};

use super::experiment::{parse_seeds, ExperimentConfig};
use super::generators::{PatienceDist, ValueDist};
use crate::error::{Error, Result};
use crate::pricing::LearnerHorizon;

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad value `{value}` for `{key}`"))),
    }
}

/// `point(v)` or `uniform(lo,hi)`.
pub fn parse_value_dist(s: &str) -> Result<ValueDist> {
    let s = s.trim();
    let bad = || Error::Config(format!("bad value distribution `{s}`"));
    let inner = |prefix: &str| {
        s.strip_prefix(prefix)
            .and_then(|r| r.strip_prefix('('))
            .and_then(|r| r.strip_suffix(')'))
    };
    if let Some(v) = inner("point") {
        return v.trim().parse().map(ValueDist::Point).map_err(|_| bad());
    }
    if s == "uniform" {
        return Ok(ValueDist::Uniform { lo: 0.0, hi: 1.0 });
    }
    if let Some(args) = inner("uniform") {
        let (lo, hi) = args.split_once(',').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(bad());
        }
        return Ok(ValueDist::Uniform { lo, hi });
    }
    Err(bad())
}

/// `point(p)` or `uniform`.
pub fn parse_patience_dist(s: &str) -> Result<PatienceDist> {
    let s = s.trim();
    if s == "uniform" {
        return Ok(PatienceDist::Uniform);
    }
    s.strip_prefix("point(")
        .and_then(|r| r.strip_suffix(')'))
        .and_then(|v| v.trim().parse().ok())
        .map(PatienceDist::Point)
        .ok_or_else(|| Error::Config(format!("bad patience distribution `{s}`")))
}

impl ExperimentConfig {
    /// Sets one field by its file/flag name. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "mode" => self.mode = parse(key, value)?,
            "k" => self.k = Some(parse(key, value)?),
            "L" | "l" | "lipschitz" => self.lipschitz = Some(parse(key, value)?),
            "T" | "t" | "horizon" => self.horizon = parse(key, value)?,
            "tau_bar" => self.tau_bar = parse(key, value)?,
            "eta" => self.eta = Some(parse(key, value)?),
            "adversary" => self.adversary = value.parse()?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "trace" => self.trace = parse_bool(key, value)?,
            "record_every" => self.record_every = Some(parse(key, value)?),
            "baseline" => self.baseline = parse_bool(key, value)?,
            "period" => self.period = Some(parse(key, value)?),
            "learner_horizon" => {
                self.learner_horizon = match value {
                    "half" | "half_blocks" => LearnerHorizon::HalfBlocks,
                    "all" | "all_blocks" => LearnerHorizon::AllBlocks,
                    _ => return Err(Error::Config(format!("bad value `{value}` for `{key}`"))),
                }
            }
            "buyers" => self.buyers = Some(PathBuf::from(value)),
            "values" => self.values = parse_value_dist(value)?,
            "patience" => self.patience = parse_patience_dist(value)?,
            "scope" => self.scope = value.parse()?,
            "budget" => self.budget = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text).map_err(|e| Error::io(path, e))
    }
}
