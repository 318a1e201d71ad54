//! Exact finite-horizon values, t-step distributions and discounted
//! occupancies on tabular MDPs.

use super::policy::{BlindPolicy, MarkovPolicy, RolloutPolicy, StationaryPolicy};
use super::tabular::{SaDist, TabularMdp};

/// Dense `S×A` table of action values.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_actions,
            values: vec![0.0; num_states * num_actions],
        }
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn num_states(&self) -> usize {
        self.values.len() / self.num_actions
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Lowest-index argmax per state.
    pub fn greedy(&self) -> Vec<usize> {
        (0..self.num_states())
            .map(|s| {
                let row = self.row(s);
                let mut best = 0;
                for (a, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = a;
                    }
                }
                best
            })
            .collect()
    }

    fn add_scaled(&mut self, other: &QTable, w: f64) {
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += w * y;
        }
    }
}

/// `Q_T(s,a)` where the first action is `a` and actions at steps `2..=T`
/// follow the Markov policy `pi`.
pub fn policy_action_values(
    mdp: &TabularMdp,
    pi: &dyn MarkovPolicy,
    horizon: usize,
    gamma: f64,
) -> QTable {
    assert!(horizon >= 1, "horizon must be at least 1");
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    assert_eq!(pi.num_actions(), na);
    let mut q = QTable::new(ns, na);
    q.values.copy_from_slice(mdp.rewards());
    // q holds the value at step t+1; fold backwards to step 1
    for t in (1..horizon).rev() {
        let v: Vec<f64> = (0..ns)
            .map(|s| (0..na).map(|a| pi.prob(t + 1, s, a) * q.get(s, a)).sum())
            .collect();
        let mut next = QTable::new(ns, na);
        for s in 0..ns {
            for a in 0..na {
                let ev: f64 = mdp
                    .next_dist(s, a)
                    .iter()
                    .zip(&v)
                    .map(|(p, v)| p * v)
                    .sum();
                next.values[s * na + a] = mdp.reward(s, a) + gamma * ev;
            }
        }
        q = next;
    }
    q
}

/// `Q^ρ_T` for a blind policy: the weighted sum of its components' values.
pub fn exact_action_values(
    mdp: &TabularMdp,
    rho: &BlindPolicy,
    horizon: usize,
    gamma: f64,
) -> QTable {
    let mut q = QTable::new(mdp.num_states(), mdp.num_actions());
    for (w, c) in rho.components() {
        q.add_scaled(&policy_action_values(mdp, &c, horizon, gamma), w);
    }
    q
}

fn push_component(mdp: &TabularMdp, xi: &SaDist, pi: &dyn MarkovPolicy, t: usize) -> Vec<f64> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut d = xi.as_slice().to_vec();
    for k in 1..t {
        let mut states = vec![0.0; ns];
        for s in 0..ns {
            for a in 0..na {
                let p = d[s * na + a];
                if p == 0.0 {
                    continue;
                }
                for (sn, q) in mdp.next_dist(s, a).iter().enumerate() {
                    states[sn] += p * q;
                }
            }
        }
        for s in 0..ns {
            for a in 0..na {
                d[s * na + a] = states[s] * pi.prob(k + 1, s, a);
            }
        }
    }
    d
}

/// `D^t_{ξ,π}`: the state-action distribution after `t` steps starting from
/// `ξ` (so `t = 1` returns `ξ`).
pub fn t_step_distribution(mdp: &TabularMdp, xi: &SaDist, policy: &RolloutPolicy, t: usize) -> SaDist {
    assert!(t >= 1, "t is 1-based");
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut total = vec![0.0; ns * na];
    for (w, c) in policy.components() {
        for (x, y) in total.iter_mut().zip(push_component(mdp, xi, c.as_ref(), t)) {
            *x += w * y;
        }
    }
    SaDist::from_raw(ns, na, total, false)
}

/// State transition matrix under a stationary policy, row-major `S×S`.
fn policy_matrix(mdp: &TabularMdp, pi: &StationaryPolicy) -> Vec<f64> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut m = vec![0.0; ns * ns];
    for s in 0..ns {
        for a in 0..na {
            let w = pi.prob(1, s, a);
            if w == 0.0 {
                continue;
            }
            for (sn, p) in mdp.next_dist(s, a).iter().enumerate() {
                m[s * ns + sn] += w * p;
            }
        }
    }
    m
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// `a` is row-major `n×n`.
pub fn solve_linear(mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        assert!(d != 0.0, "singular system");
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    x
}

/// Infinite-horizon discounted state values of a stationary policy.
pub fn state_values(mdp: &TabularMdp, pi: &StationaryPolicy, gamma: f64) -> Vec<f64> {
    assert!((0.0..1.0).contains(&gamma));
    let ns = mdp.num_states();
    let m = policy_matrix(mdp, pi);
    let mut a = vec![0.0; ns * ns];
    for i in 0..ns {
        for j in 0..ns {
            a[i * ns + j] = f64::from(i == j) - gamma * m[i * ns + j];
        }
    }
    let b: Vec<f64> = (0..ns)
        .map(|s| (0..mdp.num_actions()).map(|a| pi.prob(1, s, a) * mdp.reward(s, a)).sum())
        .collect();
    solve_linear(a, b)
}

const DIRECT_SOLVE_LIMIT: usize = 10_000;

/// Discounted occupancy `Σ_{t≥0} γ^t D^{t+1}_{μ,π}` with total mass `1/(1-γ)`.
pub fn occupancy(mdp: &TabularMdp, mu: &[f64], pi: &StationaryPolicy, gamma: f64) -> SaDist {
    assert!((0.0..1.0).contains(&gamma));
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    assert_eq!(mu.len(), ns);
    let m = policy_matrix(mdp, pi);
    let d = if ns * na <= DIRECT_SOLVE_LIMIT {
        // d = μ + γ Mᵀ d
        let mut a = vec![0.0; ns * ns];
        for i in 0..ns {
            for j in 0..ns {
                a[i * ns + j] = f64::from(i == j) - gamma * m[j * ns + i];
            }
        }
        solve_linear(a, mu.to_vec())
    } else {
        let mut d = vec![0.0; ns];
        let mut cur = mu.to_vec();
        let mut weight = 1.0;
        // remaining mass after k terms is γ^k/(1-γ)
        while weight / (1.0 - gamma) >= 1e-10 {
            for (x, y) in d.iter_mut().zip(&cur) {
                *x += weight * y;
            }
            let mut next = vec![0.0; ns];
            for s in 0..ns {
                if cur[s] == 0.0 {
                    continue;
                }
                for sn in 0..ns {
                    next[sn] += cur[s] * m[s * ns + sn];
                }
            }
            cur = next;
            weight *= gamma;
        }
        d
    };
    let probs = (0..ns)
        .flat_map(|s| (0..na).map(move |a| (s, a)))
        .map(|(s, a)| d[s] * pi.prob(1, s, a))
        .collect();
    SaDist::from_raw(ns, na, probs, true)
}
