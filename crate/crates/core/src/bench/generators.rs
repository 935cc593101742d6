//! Oblivious loss sequences and buyer streams, deterministic given a seed.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricing::Buyer;

/// RNG stream reserved for environment randomness; learners use stream 0.
const ENV_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossSpec {
    /// Bernoulli losses: arm 1 has mean `best_mean`, every other arm `best_mean + gap`.
    StochasticGap { best_mean: f64, gap: f64 },
    /// `0.5 + 0.5 sin(2π(t/period + i/k))`; `period = None` means the horizon.
    DriftingSine { period: Option<f64> },
    /// Loss 0 on the best arm and 1 elsewhere; the best arm alternates
    /// between 1 and k every `epoch` rounds (`None` means `√T`).
    AdversarialFlip { epoch: Option<usize> },
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec::StochasticGap {
            best_mean: 0.4,
            gap: 0.2,
        }
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossSpec::StochasticGap { best_mean, gap } => {
                write!(f, "stochastic_gap({best_mean},{gap})")
            }
            LossSpec::DriftingSine { period: Some(p) } => write!(f, "drifting_sine({p})"),
            LossSpec::DriftingSine { period: None } => write!(f, "drifting_sine"),
            LossSpec::AdversarialFlip { epoch: Some(e) } => write!(f, "adversarial_flip({e})"),
            LossSpec::AdversarialFlip { epoch: None } => write!(f, "adversarial_flip"),
        }
    }
}

/// Parses `name`, `name(a,b)` or `name:a:b`.
fn split_call(s: &str) -> (String, Vec<String>) {
    let s = s.trim();
    if let Some(open) = s.find('(') {
        let name = s[..open].trim().to_string();
        let inner = s[open + 1..].trim_end_matches(')');
        let args = inner
            .split(',')
            .map(|a| a.trim().to_string())
            .filter(|a| !a.is_empty())
            .collect();
        (name, args)
    } else {
        let mut parts = s.split(':').map(|p| p.trim().to_string());
        let name = parts.next().unwrap_or_default();
        (name, parts.filter(|a| !a.is_empty()).collect())
    }
}

fn parse_arg<T: FromStr>(spec: &str, arg: &str) -> Result<T> {
    arg.parse()
        .map_err(|_| Error::UnknownSpec(spec.to_string()))
}

impl FromStr for LossSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s);
        let bad = || Error::UnknownSpec(s.to_string());
        match (name.as_str(), args.as_slice()) {
            ("stochastic_gap", []) => Ok(LossSpec::default()),
            ("stochastic_gap", [m, g]) => Ok(LossSpec::StochasticGap {
                best_mean: parse_arg(s, m)?,
                gap: parse_arg(s, g)?,
            }),
            ("drifting_sine", []) => Ok(LossSpec::DriftingSine { period: None }),
            ("drifting_sine", [p]) => Ok(LossSpec::DriftingSine {
                period: Some(parse_arg(s, p)?),
            }),
            ("adversarial_flip", []) => Ok(LossSpec::AdversarialFlip { epoch: None }),
            ("adversarial_flip", [e]) => Ok(LossSpec::AdversarialFlip {
                epoch: Some(parse_arg(s, e)?),
            }),
            _ => Err(bad()),
        }
    }
}

/// Round-by-round loss vectors over `k` arms.
#[derive(Debug, Clone)]
pub struct LossStream {
    spec: LossSpec,
    horizon: usize,
    k: usize,
    t: usize,
    rng: ChaCha8Rng,
}

pub fn generate_losses(spec: LossSpec, horizon: usize, k: usize, seed: u64) -> LossStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ENV_STREAM);
    LossStream {
        spec,
        horizon,
        k,
        t: 0,
        rng,
    }
}

impl LossStream {
    pub fn arms(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

impl Iterator for LossStream {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.t >= self.horizon {
            return None;
        }
        self.t += 1;
        let (t, k) = (self.t, self.k);
        let losses = match self.spec {
            LossSpec::StochasticGap { best_mean, gap } => (0..k)
                .map(|i| {
                    let mean = if i == 0 { best_mean } else { best_mean + gap };
                    let u: f64 = self.rng.random();
                    if u < mean.clamp(0.0, 1.0) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
            LossSpec::DriftingSine { period } => {
                let period = period.unwrap_or(self.horizon as f64);
                (1..=k)
                    .map(|i| {
                        let phase = t as f64 / period + i as f64 / k as f64;
                        (0.5 + 0.5 * (2.0 * std::f64::consts::PI * phase).sin()).clamp(0.0, 1.0)
                    })
                    .collect()
            }
            LossSpec::AdversarialFlip { epoch } => {
                let epoch = epoch
                    .unwrap_or_else(|| (self.horizon as f64).sqrt().round() as usize)
                    .max(1);
                let best = if ((t - 1) / epoch) % 2 == 0 { 0 } else { k - 1 };
                (0..k).map(|i| if i == best { 0.0 } else { 1.0 }).collect()
            }
        };
        Some(losses)
    }
}

/// Distribution of buyer values on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ValueDist {
    Point(f64),
    Uniform { lo: f64, hi: f64 },
}

/// Distribution of buyer patience on `{0, ..., τ̄}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PatienceDist {
    Point(usize),
    /// Uniform on `{0, ..., τ̄}`.
    Uniform,
}

pub fn generate_buyers(
    horizon: usize,
    tau_bar: usize,
    values: ValueDist,
    patience: PatienceDist,
    seed: u64,
) -> Vec<Buyer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ENV_STREAM);
    (0..horizon)
        .map(|_| {
            let value = match values {
                ValueDist::Point(v) => v,
                ValueDist::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            };
            let patience = match patience {
                PatienceDist::Point(p) => p.min(tau_bar),
                PatienceDist::Uniform => rng.random_range(0..=tau_bar),
            };
            Buyer {
                value: value.clamp(0.0, 1.0),
                patience,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_specs() {
        assert_eq!(
            "stochastic_gap(0.4, 0.2)".parse::<LossSpec>().unwrap(),
            LossSpec::StochasticGap {
                best_mean: 0.4,
                gap: 0.2
            }
        );
        assert_eq!(
            "drifting_sine:500".parse::<LossSpec>().unwrap(),
            LossSpec::DriftingSine {
                period: Some(500.0)
            }
        );
        assert_eq!(
            "adversarial_flip".parse::<LossSpec>().unwrap(),
            LossSpec::AdversarialFlip { epoch: None }
        );
        assert!(matches!(
            "zigzag(3)".parse::<LossSpec>(),
            Err(Error::UnknownSpec(_))
        ));
        assert!("stochastic_gap(a,b)".parse::<LossSpec>().is_err());
        for spec in [
            LossSpec::default(),
            LossSpec::DriftingSine { period: Some(64.0) },
            LossSpec::AdversarialFlip { epoch: Some(10) },
        ] {
            assert_eq!(spec.to_string().parse::<LossSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn stochastic_gap_means() {
        let spec = LossSpec::StochasticGap {
            best_mean: 0.4,
            gap: 0.2,
        };
        let n = 20_000;
        let mut sums = [0.0; 2];
        for l in generate_losses(spec, n, 2, 3) {
            assert!(l.iter().all(|&x| x == 0.0 || x == 1.0));
            sums[0] += l[0];
            sums[1] += l[1];
        }
        assert!((sums[0] / n as f64 - 0.4).abs() < 0.02);
        assert!((sums[1] / n as f64 - 0.6).abs() < 0.02);
    }

    #[test]
    fn drifting_sine_formula() {
        let t_max = 100;
        let spec = LossSpec::DriftingSine { period: None };
        for (t, l) in generate_losses(spec, t_max, 4, 0).enumerate() {
            for (i, x) in l.iter().enumerate() {
                let phase = (t + 1) as f64 / t_max as f64 + (i + 1) as f64 / 4.0;
                let expected = 0.5 + 0.5 * (2.0 * std::f64::consts::PI * phase).sin();
                assert!((x - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adversarial_flip_alternates() {
        let stream: Vec<Vec<f64>> =
            generate_losses(LossSpec::AdversarialFlip { epoch: None }, 100, 8, 0).collect();
        // epoch = √100 = 10
        assert_eq!(stream[0][0], 0.0);
        assert_eq!(stream[9][0], 0.0);
        assert_eq!(stream[10][7], 0.0);
        assert_eq!(stream[10][0], 1.0);
        assert_eq!(stream[20][0], 0.0);
    }

    #[test]
    fn generators_are_deterministic() {
        let a: Vec<_> = generate_losses(LossSpec::default(), 50, 8, 9).collect();
        let b: Vec<_> = generate_losses(LossSpec::default(), 50, 8, 9).collect();
        let c: Vec<_> = generate_losses(LossSpec::default(), 50, 8, 10).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().flatten().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn buyer_examples() {
        let b = generate_buyers(10, 2, ValueDist::Point(0.5), PatienceDist::Point(0), 1);
        assert!(b.iter().all(|b| b.value == 0.5 && b.patience == 0));
        let b = generate_buyers(
            1000,
            3,
            ValueDist::Uniform { lo: 0.0, hi: 1.0 },
            PatienceDist::Uniform,
            1,
        );
        assert!(b
            .iter()
            .all(|b| (0.0..=1.0).contains(&b.value) && b.patience <= 3));
        assert!((0..=3).all(|p| b.iter().any(|b| b.patience == p)));
        assert!(generate_buyers(0, 2, ValueDist::Point(0.5), PatienceDist::Uniform, 1).is_empty());
    }
}
