use hdmc_core::mdp::{
    exact_action_values, occupancy, policy_action_values, state_values, BlindPolicy, SaDist, StationaryPolicy,
};
use rand::Rng;

use crate::{eps_val, BoundError, BoundInstance};

pub const LEMMA1_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Lemma1Check {
    /// `E_μ[V^π − V^π̂]` in the environment.
    pub lhs: f64,
    /// `ε_val` under the stated mixture, built from unnormalized occupancies.
    pub eps_val: f64,
    /// `ε_val` under the same mixture with each occupancy scaled to mass 1.
    pub eps_val_normalized: f64,
    /// `||B V^ρ_T − V^ρ_T||_∞` with `B` the Bellman optimality operator.
    pub bellman_residual: f64,
    pub rhs: f64,
    pub rhs_normalized: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    pub holds: bool,
    /// Greedy action per state with respect to the model's exact `Q̂^ρ_T`.
    pub planner_actions: Vec<usize>,
}

/// The planner is exact, so its greedy policy is taken on `Q̂^ρ_T` directly.
pub fn check_lemma1(
    inst: &BoundInstance,
    mu: &[f64],
    rho: &BlindPolicy,
    pi: &StationaryPolicy,
    horizon: usize,
) -> Result<Lemma1Check, BoundError> {
    if horizon == 0 {
        return Err(BoundError::Horizon);
    }
    let (ns, na) = (inst.num_states(), inst.num_actions());
    if mu.len() != ns || pi.num_states() != ns || rho.num_actions() != na {
        return Err(BoundError::Shape("start distribution or policy does not match the instance".into()));
    }
    let (truth, g) = (inst.truth(), inst.gamma());

    let planned = exact_action_values(inst.model(), rho, horizon, g).greedy();
    let pi_hat = StationaryPolicy::deterministic(na, &planned)?;

    let v_pi = state_values(truth, pi, g);
    let v_hat = state_values(truth, &pi_hat, g);
    let lhs: f64 = (0..ns).map(|s| mu[s] * (v_pi[s] - v_hat[s])).sum();

    let d_hat = occupancy(truth, mu, &pi_hat, g);
    let d_pi = occupancy(truth, mu, pi, g);
    let mut arrivals = vec![0.0; ns];
    for z in 0..ns {
        for b in 0..na {
            let w = d_pi.get(z, b);
            for (s, p) in truth.next_dist(z, b).iter().enumerate() {
                arrivals[s] += w * p;
            }
        }
    }
    let mixture = |scale: f64| -> Result<SaDist, BoundError> {
        let mut probs = vec![0.0; ns * na];
        for s in 0..ns {
            let reach = (1.0 - g) * mu[s] + g * scale * arrivals[s];
            probs[s * na + planned[s]] += 0.25 * reach;
            for a in 0..na {
                probs[s * na + a] += scale * (0.5 * d_hat.get(s, a) + 0.25 * d_pi.get(s, a));
            }
        }
        Ok(SaDist::measure(ns, na, probs)?)
    };
    let eps_literal = eps_val(inst, &mixture(1.0)?, rho, horizon)?;
    let eps_normalized = eps_val(inst, &mixture(1.0 - g)?, rho, horizon)?;

    let mut v_rho = vec![0.0; ns];
    for (w, sched) in rho.components() {
        let q = policy_action_values(truth, &sched, horizon, g);
        let first = sched.step_dist(1);
        for (s, v) in v_rho.iter_mut().enumerate() {
            *v += w * (0..na).map(|a| first[a] * q.get(s, a)).sum::<f64>();
        }
    }
    let mut residual: f64 = 0.0;
    for s in 0..ns {
        let backed = (0..na)
            .map(|a| {
                let next: f64 = truth.next_dist(s, a).iter().zip(&v_rho).map(|(p, v)| p * v).sum();
                truth.reward(s, a) + g * next
            })
            .fold(f64::NEG_INFINITY, f64::max);
        residual = residual.max((backed - v_rho[s]).abs());
    }

    let rhs = 4.0 / (1.0 - g) * eps_literal + 2.0 / (1.0 - g) * residual;
    let rhs_normalized = 4.0 / (1.0 - g) * eps_normalized + 2.0 / (1.0 - g) * residual;
    Ok(Lemma1Check {
        lhs,
        eps_val: eps_literal,
        eps_val_normalized: eps_normalized,
        bellman_residual: residual,
        rhs,
        rhs_normalized,
        slack: rhs - lhs,
        holds: lhs <= rhs + LEMMA1_TOLERANCE * inst.max_reward(),
        planner_actions: planned,
    })
}

/// Every deterministic stationary policy when there are at most `limit`,
/// otherwise `limit` random ones.
pub fn comparison_policies<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    limit: usize,
    rng: &mut R,
) -> Vec<StationaryPolicy> {
    let total = (num_actions as f64).powi(num_states as i32);
    let tables: Vec<Vec<usize>> = if total <= limit as f64 {
        (0..total as usize)
            .map(|mut code| {
                (0..num_states)
                    .map(|_| {
                        let a = code % num_actions;
                        code /= num_actions;
                        a
                    })
                    .collect()
            })
            .collect()
    } else {
        (0..limit)
            .map(|_| (0..num_states).map(|_| rng.gen_range(0..num_actions)).collect())
            .collect()
    };
    tables
        .iter()
        .map(|t| StationaryPolicy::deterministic(num_actions, t).expect("actions are in range"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{random_instance, InstanceParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn enumerates_all_deterministic_policies() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let all = comparison_policies(3, 2, 100, &mut rng);
        assert_eq!(all.len(), 8);
        let sampled = comparison_policies(10, 3, 50, &mut rng);
        assert_eq!(sampled.len(), 50);
    }

    #[test]
    fn self_comparison_has_zero_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inst = random_instance(&InstanceParams::new(5, 2, 0.9), &mut rng).unwrap();
        let mu = vec![0.2; 5];
        let rho = BlindPolicy::uniform(2);
        let probe = check_lemma1(&inst, &mu, &rho, &StationaryPolicy::uniform(5, 2), 4).unwrap();
        let pi_hat = StationaryPolicy::deterministic(2, &probe.planner_actions).unwrap();
        let c = check_lemma1(&inst, &mu, &rho, &pi_hat, 4).unwrap();
        assert!(c.lhs.abs() < 1e-12);
        assert!(c.rhs >= 0.0 && c.holds);
    }

    #[test]
    fn literal_mixture_dominates_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let inst = random_instance(&InstanceParams::new(4, 2, 0.7), &mut rng).unwrap();
            let c = check_lemma1(&inst, &[0.25; 4], &BlindPolicy::uniform(2), &StationaryPolicy::uniform(4, 2), 3)
                .unwrap();
            assert!(c.eps_val >= c.eps_val_normalized - 1e-12);
        }
    }

    #[test]
    fn perfect_model_leaves_only_the_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let inst = random_instance(&InstanceParams::new(4, 2, 0.5), &mut rng).unwrap();
        let exact = BoundInstance::new(inst.truth().clone(), inst.truth().clone(), 0.5, 1.0).unwrap();
        for pi in comparison_policies(4, 2, 64, &mut rng) {
            let c = check_lemma1(&exact, &[0.25; 4], &BlindPolicy::uniform(2), &pi, 30).unwrap();
            assert_eq!(c.eps_val, 0.0);
            assert!(c.holds);
            assert!(c.lhs <= 2.0 / 0.5 * c.bellman_residual + 1e-9);
        }
    }
}
