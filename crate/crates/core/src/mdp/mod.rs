//! Generic MDP abstractions and exact computations for enumerable MDPs.
//!
//! Sampling-only environments (Shooter) implement [`Environment`]; the
//! enumerable [`TabularMdp`] additionally supports the exact operations in
//! [`exact`].

pub mod exact;
pub mod policy;
pub mod tabular;

use rand::Rng;
use thiserror::Error;

pub use exact::{
    exact_action_values, occupancy, policy_action_values, state_values, t_step_distribution,
    QTable,
};
pub use policy::{ActionSchedule, BlindPolicy, BlindSampler, MarkovPolicy, RolloutPolicy, StationaryPolicy};
pub use tabular::{SaDist, TabularMdp};

/// Index of an action in the hosting MDP's action set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(pub usize);

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MdpError {
    #[error("distribution has negative entry {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("distribution sums to {sum}, expected {expected}")]
    NotNormalized { sum: f64, expected: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("state {0} out of range")]
    StateOutOfRange(usize),
    #[error("reward {0} is not finite")]
    NonFiniteReward(f64),
    #[error("policy is not blind: action distribution depends on the state")]
    NotBlind,
}

/// Sampling interface. Enumeration is deliberately absent so that large
/// environments only need to simulate.
pub trait Environment {
    type State: Clone;
    type Observation;

    fn num_actions(&self) -> usize;
    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;
    /// Takes `action` in `state`, returning the successor and the reward
    /// `R(state, action)`.
    fn step<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        action: ActionId,
        rng: &mut R,
    ) -> (Self::State, f64);
    fn render(&self, state: &Self::State) -> Self::Observation;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step<S> {
    pub state: S,
    pub action: ActionId,
    pub reward: f64,
}

/// Ordered `(state, action, reward)` triples; never empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S> {
    steps: Vec<Step<S>>,
}

impl<S> Trajectory<S> {
    /// Panics on an empty step list or a non-finite reward.
    pub fn new(steps: Vec<Step<S>>) -> Self {
        assert!(!steps.is_empty(), "trajectory must have at least one step");
        assert!(
            steps.iter().all(|s| s.reward.is_finite()),
            "trajectory rewards must be finite"
        );
        Self { steps }
    }

    pub fn steps(&self) -> &[Step<S>] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }
}

/// Runs `depth` steps from `start`: the first step takes `first_action`, the
/// rest draw from the blind `policy`.
pub fn rollout<E: Environment, R: Rng + ?Sized>(
    env: &E,
    start: &E::State,
    first_action: ActionId,
    policy: &BlindPolicy,
    depth: usize,
    rng: &mut R,
) -> Trajectory<E::State> {
    assert!(depth >= 1, "rollout depth must be at least 1");
    let mut sampler = policy.sampler(rng);
    let mut steps = Vec::with_capacity(depth);
    let mut state = start.clone();
    let mut action = first_action;
    for t in 1..=depth {
        let (next, reward) = env.step(&state, action, rng);
        steps.push(Step {
            state,
            action,
            reward,
        });
        state = next;
        if t < depth {
            action = sampler.next_action(t + 1, rng);
        }
    }
    Trajectory::new(steps)
}

/// `Σ_t γ^{t-1} r_t`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&gamma) || gamma == 1.0);
    let mut total = 0.0;
    let mut discount = 1.0;
    for r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn chain() -> TabularMdp {
        // s0 -> s1 (absorbing); R(s0)=0, R(s1)=1
        TabularMdp::deterministic(2, 1, &[1, 1], &[0.0, 1.0]).unwrap()
    }

    #[test]
    fn rollout_on_chain_forced_by_determinism() {
        let mdp = chain();
        let mut rng = seed::rng(1);
        let traj = rollout(&mdp, &0, ActionId(0), &BlindPolicy::uniform(1), 3, &mut rng);
        assert_eq!(traj.rewards(), vec![0.0, 1.0, 1.0]);
        assert_eq!(traj.len(), 3);
    }

    #[test]
    fn depth_one_rollout_is_the_start_pair() {
        let mdp = chain();
        let mut rng = seed::rng(1);
        let traj = rollout(&mdp, &1, ActionId(0), &BlindPolicy::uniform(1), 1, &mut rng);
        assert_eq!(
            traj.steps(),
            &[Step {
                state: 1,
                action: ActionId(0),
                reward: 1.0
            }]
        );
    }

    #[test]
    fn seeded_rollouts_repeat() {
        let mdp = TabularMdp::deterministic(3, 2, &[1, 2, 0, 0, 2, 1], &[0.0, 0.5, 1.0, 0.2, 0.3, 0.9])
            .unwrap();
        let rho = BlindPolicy::uniform(2);
        let a = rollout(&mdp, &0, ActionId(1), &rho, 12, &mut seed::rng(99));
        let b = rollout(&mdp, &0, ActionId(1), &rho, 12, &mut seed::rng(99));
        assert_eq!(a, b);
    }

    #[test]
    fn discounted_return_examples() {
        assert!(close(discounted_return(&[1.0, 1.0, 1.0], 0.9), 2.71, 1e-12));
        assert_eq!(discounted_return(&[5.0], 0.3), 5.0);
        assert!(close(discounted_return(&[0.0, 0.0, 20.0], 0.9), 16.2, 1e-12));
    }

    proptest! {
        #[test]
        fn discounted_return_is_linear(rs in proptest::collection::vec(-50.0f64..50.0, 1..40),
                                        alpha in -5.0f64..5.0, gamma in 0.0f64..0.999) {
            let scaled: Vec<f64> = rs.iter().map(|r| alpha * r).collect();
            let lhs = discounted_return(&scaled, gamma);
            let rhs = alpha * discounted_return(&rs, gamma);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }
}
