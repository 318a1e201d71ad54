//! Rollout and execution policies.
//!
//! A [`BlindPolicy`] chooses actions from the action history only. It is
//! either uniform-random or a weighted mixture of [`ActionSchedule`]s, where a
//! schedule is a per-step product distribution (the component is drawn once
//! per rollout, then each step samples independently). Every blind policy
//! therefore decomposes into Markov components that the exact machinery can
//! push through a tabular MDP one at a time.

use rand::Rng;

use super::{ActionId, MdpError};

const NORM_TOL: f64 = 1e-9;

fn check_dist(probs: &[f64]) -> Result<(), MdpError> {
    for (index, &value) in probs.iter().enumerate() {
        if !(value >= 0.0) {
            return Err(MdpError::NegativeProbability { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > NORM_TOL {
        return Err(MdpError::NotNormalized { sum, expected: 1.0 });
    }
    Ok(())
}

/// Draws an index from `probs` by inverse CDF. Falls back to the last index
/// with positive mass if rounding leaves `u` above the running sum.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Probability of an action at step `t` (1-based) in state `s`.
pub trait MarkovPolicy {
    fn num_actions(&self) -> usize;
    fn prob(&self, t: usize, s: usize, a: usize) -> f64;
}

/// Per-step action distributions; the last entry repeats for all later steps.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSchedule {
    num_actions: usize,
    steps: Vec<Vec<f64>>,
}

impl ActionSchedule {
    pub fn new(num_actions: usize, steps: Vec<Vec<f64>>) -> Result<Self, MdpError> {
        if steps.is_empty() {
            return Err(MdpError::Dimension { expected: 1, got: 0 });
        }
        for row in &steps {
            if row.len() != num_actions {
                return Err(MdpError::Dimension {
                    expected: num_actions,
                    got: row.len(),
                });
            }
            check_dist(row)?;
        }
        Ok(Self { num_actions, steps })
    }

    pub fn uniform(num_actions: usize) -> Self {
        assert!(num_actions >= 1);
        Self {
            num_actions,
            steps: vec![vec![1.0 / num_actions as f64; num_actions]],
        }
    }

    /// Point masses on `actions[t-1]` at step `t`.
    pub fn fixed(num_actions: usize, actions: &[ActionId]) -> Result<Self, MdpError> {
        let steps = actions
            .iter()
            .map(|a| {
                let mut row = vec![0.0; num_actions];
                if a.0 >= num_actions {
                    return Err(MdpError::Dimension {
                        expected: num_actions,
                        got: a.0 + 1,
                    });
                }
                row[a.0] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(num_actions, steps)
    }

    pub fn step_dist(&self, t: usize) -> &[f64] {
        let i = t.saturating_sub(1).min(self.steps.len() - 1);
        &self.steps[i]
    }
}

impl MarkovPolicy for ActionSchedule {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn prob(&self, t: usize, _s: usize, a: usize) -> f64 {
        self.step_dist(t)[a]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlindPolicy {
    Uniform { num_actions: usize },
    Mixture {
        num_actions: usize,
        components: Vec<(f64, ActionSchedule)>,
    },
}

impl BlindPolicy {
    pub fn uniform(num_actions: usize) -> Self {
        assert!(num_actions >= 1, "need at least one action");
        BlindPolicy::Uniform { num_actions }
    }

    pub fn mixture(components: Vec<(f64, ActionSchedule)>) -> Result<Self, MdpError> {
        let Some(first) = components.first() else {
            return Err(MdpError::Dimension { expected: 1, got: 0 });
        };
        let num_actions = first.1.num_actions;
        for (_, c) in &components {
            if c.num_actions != num_actions {
                return Err(MdpError::Dimension {
                    expected: num_actions,
                    got: c.num_actions,
                });
            }
        }
        let weights: Vec<f64> = components.iter().map(|(w, _)| *w).collect();
        check_dist(&weights)?;
        Ok(BlindPolicy::Mixture {
            num_actions,
            components,
        })
    }

    pub fn num_actions(&self) -> usize {
        match self {
            BlindPolicy::Uniform { num_actions } | BlindPolicy::Mixture { num_actions, .. } => {
                *num_actions
            }
        }
    }

    /// Weighted Markov components; uniform is a single component.
    pub fn components(&self) -> Vec<(f64, ActionSchedule)> {
        match self {
            BlindPolicy::Uniform { num_actions } => {
                vec![(1.0, ActionSchedule::uniform(*num_actions))]
            }
            BlindPolicy::Mixture { components, .. } => components.clone(),
        }
    }

    /// Starts a rollout: the mixture component is fixed here.
    pub fn sampler<R: Rng + ?Sized>(&self, rng: &mut R) -> BlindSampler<'_> {
        match self {
            BlindPolicy::Uniform { num_actions } => BlindSampler::Uniform(*num_actions),
            BlindPolicy::Mixture { components, .. } => {
                let weights: Vec<f64> = components.iter().map(|(w, _)| *w).collect();
                BlindSampler::Schedule(&components[sample_index(&weights, rng)].1)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum BlindSampler<'a> {
    Uniform(usize),
    Schedule(&'a ActionSchedule),
}

impl BlindSampler<'_> {
    pub fn next_action<R: Rng + ?Sized>(&mut self, step: usize, rng: &mut R) -> ActionId {
        match self {
            BlindSampler::Uniform(n) => ActionId(rng.gen_range(0..*n)),
            BlindSampler::Schedule(s) => ActionId(sample_index(s.step_dist(step), rng)),
        }
    }
}

/// Time-invariant state-conditioned policy as a dense S×A table.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryPolicy {
    num_states: usize,
    num_actions: usize,
    table: Vec<f64>,
}

impl StationaryPolicy {
    pub fn new(num_states: usize, num_actions: usize, table: Vec<f64>) -> Result<Self, MdpError> {
        if table.len() != num_states * num_actions {
            return Err(MdpError::Dimension {
                expected: num_states * num_actions,
                got: table.len(),
            });
        }
        for row in table.chunks(num_actions) {
            check_dist(row)?;
        }
        Ok(Self {
            num_states,
            num_actions,
            table,
        })
    }

    pub fn deterministic(num_actions: usize, actions: &[usize]) -> Result<Self, MdpError> {
        let mut table = vec![0.0; actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(MdpError::Dimension {
                    expected: num_actions,
                    got: a + 1,
                });
            }
            table[s * num_actions + a] = 1.0;
        }
        Ok(Self {
            num_states: actions.len(),
            num_actions,
            table,
        })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            table: vec![1.0 / num_actions as f64; num_states * num_actions],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.table[s * self.num_actions..(s + 1) * self.num_actions]
    }

    /// True when every state shares one action distribution.
    pub fn is_blind(&self) -> bool {
        let first = self.row(0);
        (1..self.num_states).all(|s| {
            self.row(s)
                .iter()
                .zip(first)
                .all(|(a, b)| (a - b).abs() <= 1e-15)
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> ActionId {
        ActionId(sample_index(self.row(s), rng))
    }
}

impl MarkovPolicy for StationaryPolicy {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn prob(&self, _t: usize, s: usize, a: usize) -> f64 {
        self.table[s * self.num_actions + a]
    }
}

/// Either kind of policy, for operations that accept both.
#[derive(Clone, Debug, PartialEq)]
pub enum RolloutPolicy {
    Blind(BlindPolicy),
    Stationary(StationaryPolicy),
}

impl RolloutPolicy {
    pub fn num_actions(&self) -> usize {
        match self {
            RolloutPolicy::Blind(p) => p.num_actions(),
            RolloutPolicy::Stationary(p) => p.num_actions,
        }
    }

    /// Blind view of the policy, or `NotBlind` if actions depend on state.
    pub fn as_blind(&self) -> Result<BlindPolicy, MdpError> {
        match self {
            RolloutPolicy::Blind(p) => Ok(p.clone()),
            RolloutPolicy::Stationary(p) if p.num_states > 0 && p.is_blind() => {
                let sched = ActionSchedule::new(p.num_actions, vec![p.row(0).to_vec()])?;
                BlindPolicy::mixture(vec![(1.0, sched)])
            }
            RolloutPolicy::Stationary(_) => Err(MdpError::NotBlind),
        }
    }

    /// Weighted Markov components of the policy.
    pub fn components(&self) -> Vec<(f64, Box<dyn MarkovPolicy + '_>)> {
        match self {
            RolloutPolicy::Blind(p) => p
                .components()
                .into_iter()
                .map(|(w, c)| (w, Box::new(c) as Box<dyn MarkovPolicy>))
                .collect(),
            RolloutPolicy::Stationary(p) => vec![(1.0, Box::new(p) as Box<dyn MarkovPolicy>)],
        }
    }
}

impl MarkovPolicy for &StationaryPolicy {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn prob(&self, t: usize, s: usize, a: usize) -> f64 {
        (*self).prob(t, s, a)
    }
}

impl From<BlindPolicy> for RolloutPolicy {
    fn from(p: BlindPolicy) -> Self {
        RolloutPolicy::Blind(p)
    }
}

impl From<StationaryPolicy> for RolloutPolicy {
    fn from(p: StationaryPolicy) -> Self {
        RolloutPolicy::Stationary(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn fixed_schedule_repeats_last_action() {
        let s = ActionSchedule::fixed(3, &[ActionId(2), ActionId(0)]).unwrap();
        assert_eq!(s.prob(1, 0, 2), 1.0);
        assert_eq!(s.prob(2, 5, 0), 1.0);
        assert_eq!(s.prob(9, 1, 0), 1.0);
    }

    #[test]
    fn mixture_rejects_unnormalized_weights() {
        let c = ActionSchedule::uniform(2);
        assert!(matches!(
            BlindPolicy::mixture(vec![(0.4, c.clone()), (0.4, c)]),
            Err(MdpError::NotNormalized { .. })
        ));
    }

    #[test]
    fn blind_detection() {
        assert!(StationaryPolicy::uniform(3, 2).is_blind());
        let p = StationaryPolicy::deterministic(2, &[0, 1]).unwrap();
        assert!(!p.is_blind());
        assert_eq!(
            RolloutPolicy::Stationary(p).as_blind(),
            Err(MdpError::NotBlind)
        );
    }

    #[test]
    fn uniform_sampler_frequencies() {
        let rho = BlindPolicy::uniform(4);
        let mut rng = seed::rng(5);
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            let mut s = rho.sampler(&mut rng);
            counts[s.next_action(2, &mut rng).0] += 1;
        }
        for c in counts {
            // sd = sqrt(40000 * 0.25 * 0.75) ~ 87
            assert!((c as f64 - 10_000.0).abs() < 400.0, "{counts:?}");
        }
    }

    #[test]
    fn mixture_component_fixed_per_rollout() {
        let a = ActionSchedule::fixed(2, &[ActionId(0)]).unwrap();
        let b = ActionSchedule::fixed(2, &[ActionId(1)]).unwrap();
        let rho = BlindPolicy::mixture(vec![(0.5, a), (0.5, b)]).unwrap();
        let mut rng = seed::rng(11);
        for _ in 0..50 {
            let mut s = rho.sampler(&mut rng);
            let first = s.next_action(2, &mut rng);
            for t in 3..10 {
                assert_eq!(s.next_action(t, &mut rng), first);
            }
        }
    }
}
