use hdmc_core::mdp::{
    exact_action_values, policy_action_values, t_step_distribution, BlindPolicy, RolloutPolicy, SaDist,
    TabularMdp,
};

use crate::{compute_h, BoundError, BoundInstance};

/// Absolute slack allowed on the inequality chain, per unit of `M`.
pub const CHAIN_TOLERANCE: f64 = 1e-12;

fn check_horizon(horizon: usize) -> Result<(), BoundError> {
    if horizon == 0 {
        Err(BoundError::Horizon)
    } else {
        Ok(())
    }
}

/// `Q^π_T` row-major over `(s, a)`, summed over the policy's components.
fn mixture_values(mdp: &TabularMdp, pi: &RolloutPolicy, horizon: usize, gamma: f64) -> Vec<f64> {
    let mut values = vec![0.0; mdp.num_states() * mdp.num_actions()];
    for (w, c) in pi.components() {
        let q = policy_action_values(mdp, c.as_ref(), horizon, gamma);
        for (x, y) in values.iter_mut().zip(q.as_slice()) {
            *x += w * y;
        }
    }
    values
}

/// `E_ξ |Q^ρ_T − Q̂^ρ_T|` for a blind rollout policy.
pub fn eps_val(inst: &BoundInstance, xi: &SaDist, rho: &BlindPolicy, horizon: usize) -> Result<f64, BoundError> {
    check_horizon(horizon)?;
    let q = exact_action_values(inst.truth(), rho, horizon, inst.gamma());
    let qm = exact_action_values(inst.model(), rho, horizon, inst.gamma());
    Ok(xi.expect(|s, a| (q.get(s, a) - qm.get(s, a)).abs()))
}

/// `E_ξ |Q^π_T − Q̂^π_T|` for any Markov policy or blind mixture.
pub fn eps_val_policy(inst: &BoundInstance, xi: &SaDist, pi: &RolloutPolicy, horizon: usize) -> Result<f64, BoundError> {
    check_horizon(horizon)?;
    let q = mixture_values(inst.truth(), pi, horizon, inst.gamma());
    let qm = mixture_values(inst.model(), pi, horizon, inst.gamma());
    let na = inst.num_actions();
    Ok(xi.expect(|s, a| (q[s * na + a] - qm[s * na + a]).abs()))
}

/// Right-hand sides of the dynamics-error chain. They bound `ε_val` only when
/// the model reward equals the true reward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicsTerms {
    /// Per-start L1 distance between environment and model state-action
    /// distributions.
    pub eq1: f64,
    /// Hallucinated one-step error.
    pub eq2: f64,
    /// One-step error on the environment's own distribution.
    pub eq3: f64,
}

pub fn rhs_thm1(inst: &BoundInstance, xi: &SaDist, rho: &BlindPolicy, horizon: usize) -> Result<DynamicsTerms, BoundError> {
    check_horizon(horizon)?;
    let (ns, na) = (inst.num_states(), inst.num_actions());
    let (g, m) = (inst.gamma(), inst.max_reward());
    let succ = inst.successors()?;
    let model = inst.model();
    let policy = RolloutPolicy::Blind(rho.clone());
    let miss = |s: usize, z: usize, a: usize| 1.0 - model.next_dist(z, a)[succ[s * na + a]];

    let mut eq1 = 0.0;
    for s in 0..ns {
        for a in 0..na {
            let w = xi.get(s, a);
            if w == 0.0 {
                continue;
            }
            let start = SaDist::point(ns, na, s, a);
            for t in 2..=horizon {
                let d = t_step_distribution(inst.truth(), &start, &policy, t);
                let dm = t_step_distribution(model, &start, &policy, t);
                eq1 += w * g.powi(t as i32 - 1) * d.l1(&dm);
            }
        }
    }

    let h = compute_h(inst, xi, &policy, horizon)?;
    let mut eq2 = 0.0;
    let mut eq3 = 0.0;
    let g_t = g.powi(horizon as i32);
    for t in 1..horizon {
        let gt = g.powi(t as i32);
        eq2 += gt * h.expect(t, miss);
        let d = t_step_distribution(inst.truth(), xi, &policy, t);
        eq3 += (gt - g_t) * d.expect(|s, a| miss(s, s, a));
    }
    Ok(DynamicsTerms {
        eq1: m * eq1,
        eq2: 2.0 * m * eq2,
        eq3: 2.0 * m / (1.0 - g) * eq3,
    })
}

/// Reward-error term plus each dynamics term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardTerms {
    pub reward: f64,
    pub dynamics: DynamicsTerms,
    pub eq4: f64,
    pub eq5: f64,
    pub eq6: f64,
}

/// `Σ_{t=1..T} γ^{t−1} E_{D^t}|R − R̂|` on the environment's distribution.
pub fn reward_error(inst: &BoundInstance, xi: &SaDist, rho: &BlindPolicy, horizon: usize) -> Result<f64, BoundError> {
    check_horizon(horizon)?;
    let policy = RolloutPolicy::Blind(rho.clone());
    let (truth, model) = (inst.truth(), inst.model());
    let mut total = 0.0;
    for t in 1..=horizon {
        let d = t_step_distribution(truth, xi, &policy, t);
        total += inst.gamma().powi(t as i32 - 1) * d.expect(|s, a| (truth.reward(s, a) - model.reward(s, a)).abs());
    }
    Ok(total)
}

pub fn rhs_thm2(inst: &BoundInstance, xi: &SaDist, rho: &BlindPolicy, horizon: usize) -> Result<RewardTerms, BoundError> {
    let reward = reward_error(inst, xi, rho, horizon)?;
    let dynamics = rhs_thm1(inst, xi, rho, horizon)?;
    Ok(RewardTerms {
        reward,
        dynamics,
        eq4: reward + dynamics.eq1,
        eq5: reward + dynamics.eq2,
        eq6: reward + dynamics.eq3,
    })
}

/// Hallucinated reward error: `Σ_{t=1..T} γ^{t−1} E_{H^t}|R(s,a) − R̂(z,a)|`.
pub fn rhs_thm3(inst: &BoundInstance, xi: &SaDist, rho: &BlindPolicy, horizon: usize) -> Result<f64, BoundError> {
    let h = compute_h(inst, xi, &RolloutPolicy::Blind(rho.clone()), horizon)?;
    let (truth, model) = (inst.truth(), inst.model());
    Ok((1..=horizon)
        .map(|t| inst.gamma().powi(t as i32 - 1) * h.expect(t, |s, z, a| (truth.reward(s, a) - model.reward(z, a)).abs()))
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thm4Check {
    pub thm3: f64,
    pub eq5: f64,
    /// `eq5 − thm3`.
    pub margin: f64,
    pub holds: bool,
}

pub fn check_thm4(inst: &BoundInstance, xi: &SaDist, rho: &BlindPolicy, horizon: usize) -> Result<Thm4Check, BoundError> {
    let thm3 = rhs_thm3(inst, xi, rho, horizon)?;
    let eq5 = rhs_thm2(inst, xi, rho, horizon)?.eq5;
    let margin = eq5 - thm3;
    Ok(Thm4Check {
        thm3,
        eq5,
        margin,
        holds: margin >= -CHAIN_TOLERANCE * inst.max_reward(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lemma2Check {
    pub eps_val: f64,
    pub rhs: f64,
    /// `rhs − eps_val`.
    pub slack: f64,
    pub holds: bool,
}

/// One-step L1 bound for a possibly stochastic environment and any Markov
/// policy. Requires the model reward to equal the true reward.
pub fn check_lemma2(inst: &BoundInstance, xi: &SaDist, pi: &RolloutPolicy, horizon: usize) -> Result<Lemma2Check, BoundError> {
    check_horizon(horizon)?;
    if !inst.known_reward() {
        return Err(BoundError::UnknownReward);
    }
    let (truth, model) = (inst.truth(), inst.model());
    let g = inst.gamma();
    let g_t = g.powi(horizon as i32);
    let l1 = |s: usize, a: usize| -> f64 {
        truth
            .next_dist(s, a)
            .iter()
            .zip(model.next_dist(s, a))
            .map(|(p, q)| (p - q).abs())
            .sum()
    };
    let mut sum = 0.0;
    for t in 1..horizon {
        let d = t_step_distribution(truth, xi, pi, t);
        sum += (g.powi(t as i32) - g_t) * d.expect(l1);
    }
    let rhs = inst.max_reward() / (1.0 - g) * sum;
    let eps = eps_val_policy(inst, xi, pi, horizon)?;
    Ok(Lemma2Check {
        eps_val: eps,
        rhs,
        slack: rhs - eps,
        holds: eps <= rhs + CHAIN_TOLERANCE * inst.max_reward(),
    })
}
