//! Reference values by brute force: every environment, model and action
//! sequence is enumerated explicitly and weighted by its probability. Only
//! practical for a handful of states and a short horizon.

use hdmc_core::mdp::{ActionSchedule, BlindPolicy, MarkovPolicy, SaDist, StationaryPolicy, TabularMdp};

use crate::BoundInstance;

/// Per-start accumulators for one blind policy.
struct Walk<'a> {
    inst: &'a BoundInstance,
    sched: &'a ActionSchedule,
    horizon: usize,
    q: f64,
    qm: f64,
    /// `[t][(s*A + a)]`
    d: Vec<Vec<f64>>,
    dm: Vec<Vec<f64>>,
    /// `[t][(s*S + z)*A + a]`
    h: Vec<Vec<f64>>,
}

impl Walk<'_> {
    fn step(&mut self, t: usize, s: usize, z: usize, a: usize, p: f64) {
        let (ns, na) = (self.inst.num_states(), self.inst.num_actions());
        let (truth, model) = (self.inst.truth(), self.inst.model());
        let disc = self.inst.gamma().powi(t as i32 - 1);
        self.q += p * disc * truth.reward(s, a);
        self.qm += p * disc * model.reward(z, a);
        self.d[t - 1][s * na + a] += p;
        self.dm[t - 1][z * na + a] += p;
        self.h[t - 1][(s * ns + z) * na + a] += p;
        if t == self.horizon {
            return;
        }
        let next_actions = self.sched.step_dist(t + 1);
        for (sn, &ps) in truth.next_dist(s, a).iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            for (zn, &pz) in model.next_dist(z, a).iter().enumerate() {
                if pz == 0.0 {
                    continue;
                }
                for (an, &pa) in next_actions.iter().enumerate() {
                    if pa > 0.0 {
                        self.step(t + 1, sn, zn, an, p * ps * pz * pa);
                    }
                }
            }
        }
    }
}

/// Values for one start pair, summed over the blind policy's components.
#[derive(Clone, Debug, PartialEq)]
pub struct StartPaths {
    pub q: f64,
    pub qm: f64,
    pub d: Vec<Vec<f64>>,
    pub dm: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

pub fn start_paths(inst: &BoundInstance, rho: &BlindPolicy, horizon: usize, s: usize, a: usize) -> StartPaths {
    let (ns, na) = (inst.num_states(), inst.num_actions());
    let mut out = StartPaths {
        q: 0.0,
        qm: 0.0,
        d: vec![vec![0.0; ns * na]; horizon],
        dm: vec![vec![0.0; ns * na]; horizon],
        h: vec![vec![0.0; ns * ns * na]; horizon],
    };
    for (w, sched) in rho.components() {
        let mut walk = Walk {
            inst,
            sched: &sched,
            horizon,
            q: 0.0,
            qm: 0.0,
            d: vec![vec![0.0; ns * na]; horizon],
            dm: vec![vec![0.0; ns * na]; horizon],
            h: vec![vec![0.0; ns * ns * na]; horizon],
        };
        walk.step(1, s, s, a, 1.0);
        out.q += w * walk.q;
        out.qm += w * walk.qm;
        for (dst, src) in [(&mut out.d, &walk.d), (&mut out.dm, &walk.dm), (&mut out.h, &walk.h)] {
            for (x, y) in dst.iter_mut().flatten().zip(src.iter().flatten()) {
                *x += w * y;
            }
        }
    }
    out
}

/// Every bound quantity for a deterministic environment, by enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleValues {
    pub eps_val: f64,
    pub eq1: f64,
    pub eq2: f64,
    pub eq3: f64,
    pub reward: f64,
    pub thm3: f64,
    /// `[t][(s*S + z)*A + a]`
    pub h: Vec<Vec<f64>>,
    /// Environment `D^t`, `[t][(s*A + a)]`.
    pub d: Vec<Vec<f64>>,
    /// Model `D̂^t`.
    pub dm: Vec<Vec<f64>>,
}

impl OracleValues {
    pub fn eq4(&self) -> f64 {
        self.reward + self.eq1
    }

    pub fn eq5(&self) -> f64 {
        self.reward + self.eq2
    }

    pub fn eq6(&self) -> f64 {
        self.reward + self.eq3
    }
}

/// Panics if the environment is stochastic.
pub fn enumerate(inst: &BoundInstance, xi: &SaDist, rho: &BlindPolicy, horizon: usize) -> OracleValues {
    let (ns, na) = (inst.num_states(), inst.num_actions());
    let (g, m) = (inst.gamma(), inst.max_reward());
    let (truth, model) = (inst.truth(), inst.model());
    let succ = |s: usize, a: usize| truth.successor(s, a).expect("deterministic environment");
    let mut out = OracleValues {
        eps_val: 0.0,
        eq1: 0.0,
        eq2: 0.0,
        eq3: 0.0,
        reward: 0.0,
        thm3: 0.0,
        h: vec![vec![0.0; ns * ns * na]; horizon],
        d: vec![vec![0.0; ns * na]; horizon],
        dm: vec![vec![0.0; ns * na]; horizon],
    };
    for s in 0..ns {
        for a in 0..na {
            let w = xi.get(s, a);
            if w == 0.0 {
                continue;
            }
            let paths = start_paths(inst, rho, horizon, s, a);
            out.eps_val += w * (paths.q - paths.qm).abs();
            for t in 0..horizon {
                let l1: f64 = paths.d[t].iter().zip(&paths.dm[t]).map(|(x, y)| (x - y).abs()).sum();
                out.eq1 += w * g.powi(t as i32) * l1;
                for (x, y) in out.h[t].iter_mut().zip(&paths.h[t]) {
                    *x += w * y;
                }
                for (x, y) in out.d[t].iter_mut().zip(&paths.d[t]) {
                    *x += w * y;
                }
                for (x, y) in out.dm[t].iter_mut().zip(&paths.dm[t]) {
                    *x += w * y;
                }
            }
        }
    }
    out.eq1 *= m;
    let g_t = g.powi(horizon as i32);
    for t in 1..=horizon {
        let disc = g.powi(t as i32 - 1);
        for s in 0..ns {
            for a in 0..na {
                let miss = 1.0 - model.next_dist(s, a)[succ(s, a)];
                let p = out.d[t - 1][s * na + a];
                out.reward += disc * p * (truth.reward(s, a) - model.reward(s, a)).abs();
                if t < horizon {
                    out.eq3 += (g.powi(t as i32) - g_t) * p * miss;
                }
                for z in 0..ns {
                    let p = out.h[t - 1][(s * ns + z) * na + a];
                    out.thm3 += disc * p * (truth.reward(s, a) - model.reward(z, a)).abs();
                    if t < horizon {
                        out.eq2 += g.powi(t as i32) * p * (1.0 - model.next_dist(z, a)[succ(s, a)]);
                    }
                }
            }
        }
    }
    out.eq2 *= 2.0 * m;
    out.eq3 *= 2.0 * m / (1.0 - g);
    out
}

/// `Q^π_T(s, a)` and `D^t` from `(s, a)` for a Markov policy, enumerating
/// state and action sequences in one MDP. Returns `(q, d[t][(s*A + a)])`.
pub fn policy_paths(mdp: &TabularMdp, pi: &dyn MarkovPolicy, gamma: f64, horizon: usize, s: usize, a: usize) -> (f64, Vec<Vec<f64>>) {
    fn go(
        mdp: &TabularMdp,
        pi: &dyn MarkovPolicy,
        gamma: f64,
        horizon: usize,
        t: usize,
        s: usize,
        a: usize,
        p: f64,
        q: &mut f64,
        d: &mut [Vec<f64>],
    ) {
        let na = mdp.num_actions();
        *q += p * gamma.powi(t as i32 - 1) * mdp.reward(s, a);
        d[t - 1][s * na + a] += p;
        if t == horizon {
            return;
        }
        for (sn, &ps) in mdp.next_dist(s, a).iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            for an in 0..na {
                let pa = pi.prob(t + 1, sn, an);
                if pa > 0.0 {
                    go(mdp, pi, gamma, horizon, t + 1, sn, an, p * ps * pa, q, d);
                }
            }
        }
    }
    let mut q = 0.0;
    let mut d = vec![vec![0.0; mdp.num_states() * mdp.num_actions()]; horizon];
    go(mdp, pi, gamma, horizon, 1, s, a, 1.0, &mut q, &mut d);
    (q, d)
}

/// `(ε_val, rhs)` of the one-step L1 bound for a stationary policy, with a
/// possibly stochastic environment.
pub fn lemma2(inst: &BoundInstance, xi: &SaDist, pi: &StationaryPolicy, horizon: usize) -> (f64, f64) {
    let (ns, na, g) = (inst.num_states(), inst.num_actions(), inst.gamma());
    let (truth, model) = (inst.truth(), inst.model());
    let mut eps = 0.0;
    let mut d = vec![vec![0.0; ns * na]; horizon];
    for s in 0..ns {
        for a in 0..na {
            let w = xi.get(s, a);
            if w == 0.0 {
                continue;
            }
            let (q, dt) = policy_paths(truth, &pi, g, horizon, s, a);
            let (qm, _) = policy_paths(model, &pi, g, horizon, s, a);
            eps += w * (q - qm).abs();
            for (x, y) in d.iter_mut().flatten().zip(dt.iter().flatten()) {
                *x += w * y;
            }
        }
    }
    let g_t = g.powi(horizon as i32);
    let mut rhs = 0.0;
    for t in 1..horizon {
        for s in 0..ns {
            for a in 0..na {
                let l1: f64 = truth.next_dist(s, a).iter().zip(model.next_dist(s, a)).map(|(x, y)| (x - y).abs()).sum();
                rhs += (g.powi(t as i32) - g_t) * d[t - 1][s * na + a] * l1;
            }
        }
    }
    (eps, inst.max_reward() / (1.0 - g) * rhs)
}

/// Iterates until successive sweeps differ by less than `1e-15`.
fn iterate(mut f: impl FnMut(&[f64]) -> Vec<f64>, init: Vec<f64>) -> Vec<f64> {
    let mut v = init;
    for _ in 0..100_000 {
        let next = f(&v);
        let delta = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        v = next;
        if delta < 1e-15 {
            break;
        }
    }
    v
}

/// `(lhs, rhs)` of the planning bound by value iteration and by summing the
/// occupancy series, independently of the linear solves in the library.
pub fn lemma1(inst: &BoundInstance, mu: &[f64], rho: &BlindPolicy, pi: &StationaryPolicy, horizon: usize) -> (f64, f64) {
    let (ns, na, g) = (inst.num_states(), inst.num_actions(), inst.gamma());
    let truth = inst.truth();

    let mut planned = vec![0; ns];
    for (s, best) in planned.iter_mut().enumerate() {
        let vals: Vec<f64> = (0..na).map(|a| start_paths(inst, rho, horizon, s, a).qm).collect();
        for a in 1..na {
            if vals[a] > vals[*best] {
                *best = a;
            }
        }
    }
    let prob = |p: &StationaryPolicy, s: usize, a: usize| p.row(s)[a];
    let pi_hat = StationaryPolicy::deterministic(na, &planned).unwrap();

    let values = |p: &StationaryPolicy| {
        iterate(
            |v| {
                (0..ns)
                    .map(|s| {
                        (0..na)
                            .map(|a| {
                                let next: f64 = truth.next_dist(s, a).iter().zip(v).map(|(x, y)| x * y).sum();
                                prob(p, s, a) * (truth.reward(s, a) + g * next)
                            })
                            .sum()
                    })
                    .collect()
            },
            vec![0.0; ns],
        )
    };
    let (v_pi, v_hat) = (values(pi), values(&pi_hat));
    let lhs: f64 = (0..ns).map(|s| mu[s] * (v_pi[s] - v_hat[s])).sum();

    // Σ_t γ^t D^{t+1}: accumulate the discounted state-action mass step by step
    let occupancy = |p: &StationaryPolicy| {
        let mut total = vec![0.0; ns * na];
        let mut states = mu.to_vec();
        let mut disc = 1.0;
        while disc > 1e-18 {
            let mut next = vec![0.0; ns];
            for s in 0..ns {
                for a in 0..na {
                    let x = states[s] * prob(p, s, a);
                    total[s * na + a] += disc * x;
                    for (sn, q) in truth.next_dist(s, a).iter().enumerate() {
                        next[sn] += x * q;
                    }
                }
            }
            states = next;
            disc *= g;
        }
        total
    };
    let (d_hat, d_pi) = (occupancy(&pi_hat), occupancy(pi));
    let mut xi = vec![0.0; ns * na];
    for s in 0..ns {
        let mut arrive = 0.0;
        for z in 0..ns {
            for b in 0..na {
                arrive += d_pi[z * na + b] * truth.next_dist(z, b)[s];
            }
        }
        for a in 0..na {
            let i = s * na + a;
            xi[i] = 0.5 * d_hat[i]
                + 0.25 * d_pi[i]
                + 0.25 * ((1.0 - g) * mu[s] + g * arrive) * prob(&pi_hat, s, a);
        }
    }
    let mut eps = 0.0;
    for s in 0..ns {
        for a in 0..na {
            if xi[s * na + a] > 0.0 {
                let paths = start_paths(inst, rho, horizon, s, a);
                eps += xi[s * na + a] * (paths.q - paths.qm).abs();
            }
        }
    }

    let mut v_rho = vec![0.0; ns];
    for (w, sched) in rho.components() {
        for (s, v) in v_rho.iter_mut().enumerate() {
            for a in 0..na {
                let pa = sched.step_dist(1)[a];
                if pa > 0.0 {
                    *v += w * pa * policy_paths(truth, &sched, g, horizon, s, a).0;
                }
            }
        }
    }
    let mut residual: f64 = 0.0;
    for s in 0..ns {
        let mut best = f64::NEG_INFINITY;
        for a in 0..na {
            let next: f64 = truth.next_dist(s, a).iter().zip(&v_rho).map(|(x, y)| x * y).sum();
            best = best.max(truth.reward(s, a) + g * next);
        }
        residual = residual.max((best - v_rho[s]).abs());
    }
    (lhs, 4.0 / (1.0 - g) * eps + 2.0 / (1.0 - g) * residual)
}
