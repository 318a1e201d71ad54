//! Dense tabular MDPs and state-action distributions.

use rand::Rng;

use super::policy::sample_index;
use super::{ActionId, Environment, MdpError};

const NORM_TOL: f64 = 1e-9;

/// Finite MDP with dense `S×A×S` transition and `S×A` reward tables.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    transitions: Vec<f64>,
    rewards: Vec<f64>,
    initial: Vec<f64>,
}

impl TabularMdp {
    /// `transitions[(s*A + a)*S + s']`, `rewards[s*A + a]`. The initial
    /// distribution defaults to a point mass on state 0.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
    ) -> Result<Self, MdpError> {
        let sa = num_states * num_actions;
        if num_states == 0 || num_actions == 0 {
            return Err(MdpError::Dimension { expected: 1, got: 0 });
        }
        if transitions.len() != sa * num_states {
            return Err(MdpError::Dimension {
                expected: sa * num_states,
                got: transitions.len(),
            });
        }
        if rewards.len() != sa {
            return Err(MdpError::Dimension {
                expected: sa,
                got: rewards.len(),
            });
        }
        for row in transitions.chunks(num_states) {
            check_row(row)?;
        }
        if let Some(&r) = rewards.iter().find(|r| !r.is_finite()) {
            return Err(MdpError::NonFiniteReward(r));
        }
        let mut initial = vec![0.0; num_states];
        initial[0] = 1.0;
        Ok(Self {
            num_states,
            num_actions,
            transitions,
            rewards,
            initial,
        })
    }

    /// `successors[s*A + a]` is the unique next state.
    pub fn deterministic(
        num_states: usize,
        num_actions: usize,
        successors: &[usize],
        rewards: &[f64],
    ) -> Result<Self, MdpError> {
        if successors.len() != num_states * num_actions {
            return Err(MdpError::Dimension {
                expected: num_states * num_actions,
                got: successors.len(),
            });
        }
        let mut transitions = vec![0.0; successors.len() * num_states];
        for (i, &next) in successors.iter().enumerate() {
            if next >= num_states {
                return Err(MdpError::StateOutOfRange(next));
            }
            transitions[i * num_states + next] = 1.0;
        }
        Self::new(num_states, num_actions, transitions, rewards.to_vec())
    }

    pub fn with_initial(mut self, initial: Vec<f64>) -> Result<Self, MdpError> {
        if initial.len() != self.num_states {
            return Err(MdpError::Dimension {
                expected: self.num_states,
                got: initial.len(),
            });
        }
        check_row(&initial)?;
        self.initial = initial;
        Ok(self)
    }

    pub fn with_rewards(mut self, rewards: Vec<f64>) -> Result<Self, MdpError> {
        if rewards.len() != self.rewards.len() {
            return Err(MdpError::Dimension {
                expected: self.rewards.len(),
                got: rewards.len(),
            });
        }
        if let Some(&r) = rewards.iter().find(|r| !r.is_finite()) {
            return Err(MdpError::NonFiniteReward(r));
        }
        self.rewards = rewards;
        Ok(self)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Next-state distribution `P(·|s,a)`.
    pub fn next_dist(&self, s: usize, a: usize) -> &[f64] {
        let i = (s * self.num_actions + a) * self.num_states;
        &self.transitions[i..i + self.num_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.num_actions + a]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// The unique successor when `P(·|s,a)` is a point mass.
    pub fn successor(&self, s: usize, a: usize) -> Option<usize> {
        let row = self.next_dist(s, a);
        row.iter().position(|&p| p == 1.0)
    }

    pub fn is_deterministic(&self) -> bool {
        (0..self.num_states)
            .all(|s| (0..self.num_actions).all(|a| self.successor(s, a).is_some()))
    }
}

fn check_row(row: &[f64]) -> Result<(), MdpError> {
    for (index, &value) in row.iter().enumerate() {
        if !(value >= 0.0) {
            return Err(MdpError::NegativeProbability { index, value });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > NORM_TOL {
        return Err(MdpError::NotNormalized { sum, expected: 1.0 });
    }
    Ok(())
}

impl Environment for TabularMdp {
    type State = usize;
    type Observation = usize;

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.initial, rng)
    }

    fn step<R: Rng + ?Sized>(&self, state: &usize, action: ActionId, rng: &mut R) -> (usize, f64) {
        let r = self.reward(*state, action.0);
        let next = match self.successor(*state, action.0) {
            Some(n) => n,
            None => sample_index(self.next_dist(*state, action.0), rng),
        };
        (next, r)
    }

    fn render(&self, state: &usize) -> usize {
        *state
    }
}

/// Dense distribution over `(state, action)` pairs. A `discounted` distribution
/// is an occupancy measure with total mass `1/(1-γ)` rather than 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SaDist {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
    discounted: bool,
}

impl SaDist {
    pub fn new(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self, MdpError> {
        if probs.len() != num_states * num_actions {
            return Err(MdpError::Dimension {
                expected: num_states * num_actions,
                got: probs.len(),
            });
        }
        check_row(&probs)?;
        Ok(Self {
            num_states,
            num_actions,
            probs,
            discounted: false,
        })
    }

    /// A non-negative measure of any finite total mass, such as an
    /// unnormalized mixture of occupancies.
    pub fn measure(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self, MdpError> {
        if probs.len() != num_states * num_actions {
            return Err(MdpError::Dimension {
                expected: num_states * num_actions,
                got: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(MdpError::NegativeProbability { index, value });
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            probs,
            discounted: false,
        })
    }

    pub fn point(num_states: usize, num_actions: usize, s: usize, a: usize) -> Self {
        let mut probs = vec![0.0; num_states * num_actions];
        probs[s * num_actions + a] = 1.0;
        Self {
            num_states,
            num_actions,
            probs,
            discounted: false,
        }
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        let n = num_states * num_actions;
        Self {
            num_states,
            num_actions,
            probs: vec![1.0 / n as f64; n],
            discounted: false,
        }
    }

    /// Unchecked constructor for internally computed tables.
    pub(crate) fn from_raw(
        num_states: usize,
        num_actions: usize,
        probs: Vec<f64>,
        discounted: bool,
    ) -> Self {
        debug_assert_eq!(probs.len(), num_states * num_actions);
        Self {
            num_states,
            num_actions,
            probs,
            discounted,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.num_actions + a]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_discounted(&self) -> bool {
        self.discounted
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn state_marginal(&self) -> Vec<f64> {
        self.probs
            .chunks(self.num_actions)
            .map(|row| row.iter().sum())
            .collect()
    }

    /// Expectation of `f(s, a)`.
    pub fn expect(&self, mut f: impl FnMut(usize, usize) -> f64) -> f64 {
        let mut total = 0.0;
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let p = self.get(s, a);
                if p != 0.0 {
                    total += p * f(s, a);
                }
            }
        }
        total
    }

    /// `Σ |p - q|` over all pairs.
    pub fn l1(&self, other: &SaDist) -> f64 {
        assert_eq!(self.probs.len(), other.probs.len());
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}
