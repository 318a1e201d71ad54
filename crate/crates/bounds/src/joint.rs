use hdmc_core::mdp::{RolloutPolicy, SaDist};

use crate::{BoundError, BoundInstance};

/// Joint distribution over (environment state, model state, action) when one
/// blind action sequence drives both the environment and the model.
/// `slice(t)[(s*S + z)*A + a]` for `t = 1..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointH {
    num_states: usize,
    num_actions: usize,
    slices: Vec<Vec<f64>>,
}

impl JointH {
    pub fn horizon(&self) -> usize {
        self.slices.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// 1-based step.
    pub fn slice(&self, t: usize) -> &[f64] {
        &self.slices[t - 1]
    }

    pub fn get(&self, t: usize, s: usize, z: usize, a: usize) -> f64 {
        self.slices[t - 1][(s * self.num_states + z) * self.num_actions + a]
    }

    /// `E_{H^t}[f(s, z, a)]`.
    pub fn expect(&self, t: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> f64 {
        let (ns, na) = (self.num_states, self.num_actions);
        let mut total = 0.0;
        for (i, &p) in self.slice(t).iter().enumerate() {
            if p != 0.0 {
                total += p * f(i / (ns * na), (i / na) % ns, i % na);
            }
        }
        total
    }

    /// Summing out the model state gives the environment's `D^t`.
    pub fn environment_marginal(&self, t: usize) -> SaDist {
        self.marginal(t, |s, _| s)
    }

    /// Summing out the environment state gives the model's `D̂^t`.
    pub fn model_marginal(&self, t: usize) -> SaDist {
        self.marginal(t, |_, z| z)
    }

    fn marginal(&self, t: usize, keep: impl Fn(usize, usize) -> usize) -> SaDist {
        let (ns, na) = (self.num_states, self.num_actions);
        let mut d = vec![0.0; ns * na];
        for (i, &p) in self.slice(t).iter().enumerate() {
            let (s, z, a) = (i / (ns * na), (i / na) % ns, i % na);
            d[keep(s, z) * na + a] += p;
        }
        SaDist::measure(ns, na, d).expect("marginals of a distribution are non-negative")
    }
}

pub fn compute_h(inst: &BoundInstance, xi: &SaDist, rho: &RolloutPolicy, horizon: usize) -> Result<JointH, BoundError> {
    if horizon == 0 {
        return Err(BoundError::Horizon);
    }
    let rho = rho.as_blind()?;
    let (ns, na) = (inst.num_states(), inst.num_actions());
    if (xi.num_states(), xi.num_actions()) != (ns, na) || rho.num_actions() != na {
        return Err(BoundError::Shape("start distribution or policy does not match the instance".into()));
    }
    let succ = inst.successors()?;
    let model = inst.model();
    let idx = |s: usize, z: usize, a: usize| (s * ns + z) * na + a;

    let mut first = vec![0.0; ns * ns * na];
    for s in 0..ns {
        for a in 0..na {
            first[idx(s, s, a)] = xi.get(s, a);
        }
    }
    let mut slices = vec![vec![0.0; ns * ns * na]; horizon];
    for (w, sched) in rho.components() {
        let mut cur = first.clone();
        for t in 1..=horizon {
            for (acc, p) in slices[t - 1].iter_mut().zip(&cur) {
                *acc += w * p;
            }
            if t == horizon {
                break;
            }
            // pair distribution after the step, before the next action
            let mut pairs = vec![0.0; ns * ns];
            for s in 0..ns {
                for z in 0..ns {
                    for a in 0..na {
                        let p = cur[idx(s, z, a)];
                        if p == 0.0 {
                            continue;
                        }
                        let sn = succ[s * na + a];
                        for (zn, q) in model.next_dist(z, a).iter().enumerate() {
                            pairs[sn * ns + zn] += p * q;
                        }
                    }
                }
            }
            let next_action = sched.step_dist(t + 1);
            for (pair, &p) in pairs.iter().enumerate() {
                for (a, &pa) in next_action.iter().enumerate() {
                    cur[pair * na + a] = p * pa;
                }
            }
        }
    }
    Ok(JointH {
        num_states: ns,
        num_actions: na,
        slices,
    })
}
