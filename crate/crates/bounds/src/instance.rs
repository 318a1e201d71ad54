use hdmc_core::mdp::{MdpError, SaDist, TabularMdp};
use rand::Rng;

use crate::BoundError;

/// A true environment paired with a learned model over the same state and
/// action sets, plus the discount and reward bound the inequalities use.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundInstance {
    truth: TabularMdp,
    model: TabularMdp,
    gamma: f64,
    max_reward: f64,
}

impl BoundInstance {
    /// Rewards of both MDPs must lie in `[0, max_reward]`.
    pub fn new(truth: TabularMdp, model: TabularMdp, gamma: f64, max_reward: f64) -> Result<Self, BoundError> {
        if (truth.num_states(), truth.num_actions()) != (model.num_states(), model.num_actions()) {
            return Err(BoundError::Shape(format!(
                "truth is {}x{}, model is {}x{}",
                truth.num_states(),
                truth.num_actions(),
                model.num_states(),
                model.num_actions()
            )));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(BoundError::Discount(gamma));
        }
        if !(max_reward > 0.0 && max_reward.is_finite()) {
            return Err(BoundError::RewardRange(max_reward));
        }
        for &r in truth.rewards().iter().chain(model.rewards()) {
            if !(0.0..=max_reward).contains(&r) {
                return Err(BoundError::RewardRange(r));
            }
        }
        Ok(Self {
            truth,
            model,
            gamma,
            max_reward,
        })
    }

    pub fn truth(&self) -> &TabularMdp {
        &self.truth
    }

    pub fn model(&self) -> &TabularMdp {
        &self.model
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn max_reward(&self) -> f64 {
        self.max_reward
    }

    pub fn num_states(&self) -> usize {
        self.truth.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.truth.num_actions()
    }

    pub fn known_reward(&self) -> bool {
        self.truth.rewards() == self.model.rewards()
    }

    /// The same instance with the model's reward replaced by the true one.
    pub fn with_true_reward(&self) -> Self {
        let model = self
            .model
            .clone()
            .with_rewards(self.truth.rewards().to_vec())
            .expect("true rewards have the right shape");
        Self {
            model,
            ..self.clone()
        }
    }

    /// `σ(s, a)`, or an error when the true dynamics are stochastic.
    pub fn successors(&self) -> Result<Vec<usize>, BoundError> {
        let (ns, na) = (self.num_states(), self.num_actions());
        let mut out = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                out.push(self.truth.successor(s, a).ok_or(BoundError::StochasticTruth)?);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceParams {
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub max_reward: f64,
    /// Model rows are point masses instead of Dirichlet draws.
    pub deterministic_model: bool,
    /// Model reward equals the true reward.
    pub known_reward: bool,
    /// True rows are Dirichlet draws instead of point masses.
    pub stochastic_truth: bool,
}

impl InstanceParams {
    pub fn new(num_states: usize, num_actions: usize, gamma: f64) -> Self {
        Self {
            num_states,
            num_actions,
            gamma,
            max_reward: 1.0,
            deterministic_model: false,
            known_reward: false,
            stochastic_truth: false,
        }
    }
}

/// Flat Dirichlet(1, ..., 1) draw.
pub fn dirichlet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = g.iter().sum();
    g.into_iter().map(|x| x / total).collect()
}

fn random_rows<R: Rng + ?Sized>(ns: usize, na: usize, point_masses: bool, rng: &mut R) -> Vec<f64> {
    let mut p = Vec::with_capacity(ns * na * ns);
    for _ in 0..ns * na {
        if point_masses {
            let mut row = vec![0.0; ns];
            row[rng.gen_range(0..ns)] = 1.0;
            p.extend(row);
        } else {
            p.extend(dirichlet(ns, rng));
        }
    }
    p
}

pub fn random_instance<R: Rng + ?Sized>(params: &InstanceParams, rng: &mut R) -> Result<BoundInstance, BoundError> {
    let (ns, na, m) = (params.num_states, params.num_actions, params.max_reward);
    if ns == 0 || na == 0 {
        return Err(BoundError::Shape("instances need at least one state and action".into()));
    }
    let truth_p = random_rows(ns, na, !params.stochastic_truth, rng);
    let rewards: Vec<f64> = (0..ns * na).map(|_| rng.gen::<f64>() * m).collect();
    let model_p = random_rows(ns, na, params.deterministic_model, rng);
    let model_r: Vec<f64> = if params.known_reward {
        rewards.clone()
    } else {
        (0..ns * na).map(|_| rng.gen::<f64>() * m).collect()
    };
    let truth = TabularMdp::new(ns, na, truth_p, rewards)?;
    let model = TabularMdp::new(ns, na, model_p, model_r)?;
    BoundInstance::new(truth, model, params.gamma, m)
}

/// Dirichlet-random start distribution over state-action pairs.
pub fn random_xi<R: Rng + ?Sized>(num_states: usize, num_actions: usize, rng: &mut R) -> SaDist {
    SaDist::new(num_states, num_actions, dirichlet(num_states * num_actions, rng))
        .expect("Dirichlet draws are distributions")
}

/// Two states, one action. The environment moves from state 0 to the
/// absorbing state 1, which pays `max_reward`; the model keeps state 0 in
/// place. Reward is known. Returns the instance and the start distribution
/// concentrated on state 0.
pub fn chain_instance(gamma: f64, max_reward: f64) -> Result<(BoundInstance, SaDist), BoundError> {
    let rewards = vec![0.0, max_reward];
    let truth = TabularMdp::deterministic(2, 1, &[1, 1], &rewards)?;
    let model = TabularMdp::deterministic(2, 1, &[0, 1], &rewards)?;
    Ok((BoundInstance::new(truth, model, gamma, max_reward)?, SaDist::point(2, 1, 0, 0)))
}

impl From<MdpError> for BoundError {
    fn from(e: MdpError) -> Self {
        BoundError::Mdp(e)
    }
}
