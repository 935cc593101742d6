//! Lipschitz losses on `[0, 1]` with movement costs, reduced to SMB over the
//! grid `{1/k, 2/k, ..., 1}` with `k ≈ L^{2/3} T^{1/3}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_tree::{pad_action_count, MetricTree};
use crate::smb::{Smb, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumPlan {
    pub lipschitz: f64,
    pub horizon: usize,
    /// `L^{2/3} T^{1/3}` before rounding.
    pub target_k: f64,
    /// Grid size actually used: a power of two `>= round(target_k)`.
    pub k: usize,
    pub eta: f64,
}

pub fn plan_discretization(lipschitz: f64, horizon: usize) -> Result<ContinuumPlan> {
    if !(lipschitz >= 1.0 && lipschitz.is_finite()) {
        return Err(Error::InvalidLipschitz(lipschitz));
    }
    if horizon < 8 {
        return Err(Error::InvalidHorizon(horizon));
    }
    let target_k = lipschitz.powf(2.0 / 3.0) * (horizon as f64).cbrt();
    let rounded = (target_k.round() as usize).max(2);
    let k = pad_action_count(rounded, horizon).leaves;
    Ok(ContinuumPlan {
        lipschitz,
        horizon,
        target_k,
        k,
        eta: 1.0 / ((k * horizon) as f64).sqrt(),
    })
}

impl ContinuumPlan {
    pub fn tree(&self) -> MetricTree {
        MetricTree::new(self.k).expect("plan grid size is a power of two")
    }

    /// Grid point of a 1-based arm.
    pub fn point(&self, arm: usize) -> f64 {
        arm as f64 / self.k as f64
    }

    pub fn learner<W: Weights>(&self, seed: u64) -> Result<Smb<W>> {
        Smb::new(self.tree(), self.eta, seed)
    }
}

/// One SMB round where the loss of arm `i` is `f(i/k)`; `f` is evaluated
/// once, at the played point. Returns the point and its loss.
pub fn lipschitz_round<W: Weights>(
    plan: &ContinuumPlan,
    state: &mut Smb<W>,
    f: impl FnOnce(f64) -> f64,
) -> Result<(f64, f64)> {
    let trace = state.step(|arm| f(plan.point(arm)))?;
    Ok((plan.point(trace.action), trace.loss))
}

/// A sequence of loss functions `f_1..f_T` on `[0, 1]`.
pub trait PointLosses {
    fn horizon(&self) -> usize;

    /// `f_t(x)` for 1-based `t`.
    fn eval(&self, t: usize, x: f64) -> f64;
}

/// Loss sequence given by a closure `(t, x) -> f_t(x)`.
pub struct FnLosses<F> {
    pub horizon: usize,
    pub f: F,
}

impl<F: Fn(usize, f64) -> f64> PointLosses for FnLosses<F> {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn eval(&self, t: usize, x: f64) -> f64 {
        (self.f)(t, x)
    }
}

/// `f_t(x) = 0.5 + a sin(2π(t/period + x))`, which is `2πa`-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftingSine {
    pub amplitude: f64,
    pub period: f64,
    pub horizon: usize,
}

impl DriftingSine {
    /// Largest amplitude (at most 1/2) keeping every `f_t` `L`-Lipschitz.
    pub fn with_lipschitz(lipschitz: f64, period: f64, horizon: usize) -> Self {
        Self {
            amplitude: (lipschitz / (2.0 * std::f64::consts::PI)).min(0.5),
            period,
            horizon,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.amplitude
    }
}

impl PointLosses for DriftingSine {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn eval(&self, t: usize, x: f64) -> f64 {
        let phase = t as f64 / self.period + x;
        0.5 + self.amplitude * (2.0 * std::f64::consts::PI * phase).sin()
    }
}

/// Distance charged when moving between two 1-based arms of a `k`-point grid.
pub trait MovementMetric {
    fn cost(&self, from: usize, to: usize) -> f64;
}

/// `|i - j| / k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineMetric {
    pub k: usize,
}

impl MovementMetric for LineMetric {
    fn cost(&self, from: usize, to: usize) -> f64 {
        from.abs_diff(to) as f64 / self.k as f64
    }
}

impl MovementMetric for MetricTree {
    fn cost(&self, from: usize, to: usize) -> f64 {
        self.switch_cost0(from - 1, to - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovementRegret {
    pub learner_loss: f64,
    pub movement: f64,
    pub comparator_loss: f64,
    pub comparator_point: f64,
    /// Bound `L T / (10k)` on how much the refinement grid can overstate the
    /// continuous comparator's loss.
    pub resolution_error: f64,
    pub regret: f64,
}

/// `Σ f_t(x_t) + Σ_{t≥2} Δ(x_t, x_{t-1}) − min_x Σ f_t(x)`, with the minimum
/// taken over the `10k + 1` points `j / (10k)`.
pub fn movement_regret<L: PointLosses + ?Sized, M: MovementMetric + ?Sized>(
    arms: &[usize],
    k: usize,
    losses: &L,
    metric: &M,
    lipschitz: f64,
) -> MovementRegret {
    let horizon = arms.len();
    let learner_loss: f64 = arms
        .iter()
        .enumerate()
        .map(|(t, &a)| losses.eval(t + 1, a as f64 / k as f64))
        .sum();
    let movement: f64 = arms.windows(2).map(|w| metric.cost(w[0], w[1])).sum();

    let fine = 10 * k;
    let (comparator_point, comparator_loss) = (0..=fine)
        .map(|j| {
            let x = j as f64 / fine as f64;
            let total: f64 = (1..=horizon).map(|t| losses.eval(t, x)).sum();
            (x, total)
        })
        .fold((0.0, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        });
    let comparator_loss = if horizon == 0 { 0.0 } else { comparator_loss };
    MovementRegret {
        learner_loss,
        movement,
        comparator_loss,
        comparator_point,
        resolution_error: lipschitz * horizon as f64 / fine as f64,
        regret: learner_loss + movement - comparator_loss,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smb::SmbState;
    use proptest::prelude::*;

    #[test]
    fn plan_examples() {
        let p = plan_discretization(1.0, 1_000_000).unwrap();
        assert!((p.target_k - 100.0).abs() < 1e-9);
        assert_eq!(p.k, 128);
        assert!((p.eta - 1.0 / 1.28e8f64.sqrt()).abs() < 1e-15);

        let p = plan_discretization(1.0, 8).unwrap();
        assert!((p.target_k - 2.0).abs() < 1e-12);
        assert_eq!(p.k, 2);

        let p = plan_discretization(8.0, 512).unwrap();
        assert!((p.target_k - 32.0).abs() < 1e-9);
        assert_eq!(p.k, 32);

        assert_eq!(
            plan_discretization(0.5, 100),
            Err(Error::InvalidLipschitz(0.5))
        );
        assert!(plan_discretization(1.0, 7).is_err());
    }

    #[test]
    fn round_evaluates_the_grid_point() {
        let plan = plan_discretization(1.0, 64).unwrap();
        assert_eq!(plan.k, 4);
        let mut s: SmbState = plan.learner(3).unwrap();
        let (_, loss) = lipschitz_round(&plan, &mut s, |_| 0.3).unwrap();
        assert_eq!(loss, 0.3);

        let expected = [0.25, 0.0, 0.25, 0.5];
        for _ in 0..50 {
            let (x, loss) = lipschitz_round(&plan, &mut s, |x| (x - 0.5).abs()).unwrap();
            let arm = (x * 4.0).round() as usize;
            assert_eq!(loss, expected[arm - 1]);
            let (x, loss) = lipschitz_round(&plan, &mut s, |x| x).unwrap();
            assert_eq!(loss, x);
        }
    }

    #[test]
    fn one_round_regret() {
        let f = FnLosses {
            horizon: 1,
            f: |_, x: f64| x,
        };
        let r = movement_regret(&[3], 4, &f, &LineMetric { k: 4 }, 1.0);
        assert_eq!(r.comparator_point, 0.0);
        assert!((r.regret - 0.75).abs() < 1e-12);
        assert_eq!(r.movement, 0.0);
    }

    #[test]
    fn constant_trace_has_no_movement() {
        let f = FnLosses {
            horizon: 20,
            f: |t, x: f64| ((x - 0.25).abs() + 0.01 * t as f64).min(1.0),
        };
        let tree = MetricTree::new(8).unwrap();
        let r = movement_regret(&[2; 20], 8, &f, &tree, 1.0);
        assert_eq!(r.movement, 0.0);
        assert!(r.regret.abs() < 1e-9);
    }

    #[test]
    fn line_movement_never_exceeds_tree_movement() {
        let tree = MetricTree::new(16).unwrap();
        let line = LineMetric { k: 16 };
        let trace: Vec<usize> = (0..200).map(|t| (t * 7 % 16) + 1).collect();
        for w in trace.windows(2) {
            assert!(line.cost(w[0], w[1]) <= tree.cost(w[0], w[1]));
        }
        let f = DriftingSine::with_lipschitz(1.0, 50.0, 200);
        let a = movement_regret(&trace, 16, &f, &line, 1.0);
        let b = movement_regret(&trace, 16, &f, &tree, 1.0);
        assert!(a.movement <= b.movement);
    }

    #[test]
    fn drifting_sine_respects_lipschitz() {
        let f = DriftingSine::with_lipschitz(1.0, 100.0, 100);
        assert!((f.lipschitz() - 1.0).abs() < 1e-12);
        for t in 1..=100 {
            for j in 0..100 {
                let (x, y) = (j as f64 / 100.0, (j + 1) as f64 / 100.0);
                assert!((f.eval(t, x) - f.eval(t, y)).abs() <= (y - x) + 1e-12);
                assert!((0.0..=1.0).contains(&f.eval(t, x)));
            }
        }
    }

    proptest! {
        #[test]
        fn regret_is_shift_invariant(
            trace in proptest::collection::vec(1usize..=8, 1..40),
            shift in 0.0f64..0.4,
        ) {
            let base = FnLosses { horizon: trace.len(), f: |t, x: f64| 0.5 * ((t as f64 * 0.3 + 3.0 * x).sin().abs()) };
            let shifted = FnLosses { horizon: trace.len(), f: |t, x: f64| 0.5 * ((t as f64 * 0.3 + 3.0 * x).sin().abs()) + shift };
            let line = LineMetric { k: 8 };
            let a = movement_regret(&trace, 8, &base, &line, 1.5);
            let b = movement_regret(&trace, 8, &shifted, &line, 1.5);
            prop_assert!((a.regret - b.regret).abs() < 1e-9);
        }

        #[test]
        fn line_total_bounded_by_tree_total(trace in proptest::collection::vec(1usize..=32, 2..100)) {
            let tree = MetricTree::new(32).unwrap();
            let line = LineMetric { k: 32 };
            let l: f64 = trace.windows(2).map(|w| line.cost(w[0], w[1])).sum();
            let t: f64 = trace.windows(2).map(|w| tree.cost(w[0], w[1])).sum();
            prop_assert!(l <= t + 1e-12);
        }
    }
}
