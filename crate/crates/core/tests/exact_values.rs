use hdmc_core::mdp::{
    exact_action_values, occupancy, t_step_distribution, ActionId, ActionSchedule, BlindPolicy, RolloutPolicy, SaDist,
    StationaryPolicy, TabularMdp,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dirichlet(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = g.iter().sum();
    g.iter().map(|x| x / total).collect()
}

fn random_mdp(ns: usize, na: usize, rng: &mut ChaCha8Rng) -> TabularMdp {
    let p = (0..ns * na).flat_map(|_| dirichlet(ns, rng)).collect();
    let r = (0..ns * na).map(|_| rng.gen::<f64>()).collect();
    TabularMdp::new(ns, na, p, r).unwrap()
}

/// Sums over every action sequence `a_2..a_T` and every state sequence of one
/// schedule, weighting each by its probability. Returns `(Q_T(s,a), D^t)`.
fn enumerate(mdp: &TabularMdp, sched: &ActionSchedule, horizon: usize, gamma: f64, s: usize, a: usize) -> (f64, Vec<Vec<f64>>) {
    let na = mdp.num_actions();
    let mut q = 0.0;
    let mut d = vec![vec![0.0; mdp.num_states() * na]; horizon];
    let mut stack = vec![(1usize, s, a, 1.0f64)];
    while let Some((t, s, a, p)) = stack.pop() {
        q += p * gamma.powi(t as i32 - 1) * mdp.reward(s, a);
        d[t - 1][s * na + a] += p;
        if t == horizon {
            continue;
        }
        for (sn, &ps) in mdp.next_dist(s, a).iter().enumerate() {
            for (an, &pa) in sched.step_dist(t + 1).iter().enumerate() {
                if ps * pa > 0.0 {
                    stack.push((t + 1, sn, an, p * ps * pa));
                }
            }
        }
    }
    (q, d)
}

/// Component-weighted sum of [`enumerate`].
fn enumerate_mixture(mdp: &TabularMdp, rho: &BlindPolicy, horizon: usize, gamma: f64, s: usize, a: usize) -> (f64, Vec<Vec<f64>>) {
    let mut q = 0.0;
    let mut d = vec![vec![0.0; mdp.num_states() * mdp.num_actions()]; horizon];
    for (w, sched) in rho.components() {
        let (qk, dk) = enumerate(mdp, &sched, horizon, gamma, s, a);
        q += w * qk;
        for (x, y) in d.iter_mut().flatten().zip(dk.iter().flatten()) {
            *x += w * y;
        }
    }
    (q, d)
}

fn random_blind(na: usize, horizon: usize, rng: &mut ChaCha8Rng) -> BlindPolicy {
    let seq: Vec<ActionId> = (0..horizon).map(|_| ActionId(rng.gen_range(0..na))).collect();
    let steps = (0..horizon).map(|_| dirichlet(na, rng)).collect();
    let w = dirichlet(3, rng);
    BlindPolicy::mixture(vec![
        (w[0], ActionSchedule::uniform(na)),
        (w[1], ActionSchedule::fixed(na, &seq).unwrap()),
        (w[2], ActionSchedule::new(na, steps).unwrap()),
    ])
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn values_and_distributions_match_path_enumeration(
        seed in any::<u64>(),
        na in 1usize..=3,
        horizon in 1usize..=4,
        gamma in 0.0f64..0.99,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mdp = random_mdp(5, na, &mut rng);
        let rho = random_blind(na, horizon, &mut rng);
        let q = exact_action_values(&mdp, &rho, horizon, gamma);
        for s in 0..5 {
            for a in 0..na {
                let (qb, db) = enumerate_mixture(&mdp, &rho, horizon, gamma, s, a);
                prop_assert!((q.get(s, a) - qb).abs() < 1e-9);
                let start = SaDist::point(5, na, s, a);
                for t in 1..=horizon {
                    let d = t_step_distribution(&mdp, &start, &RolloutPolicy::Blind(rho.clone()), t);
                    for (x, y) in d.as_slice().iter().zip(&db[t - 1]) {
                        prop_assert!((x - y).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn occupancy_matches_long_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let mdp = random_mdp(3, 2, &mut rng);
        let table = (0..3).flat_map(|_| dirichlet(2, &mut rng)).collect();
        let pi = StationaryPolicy::new(3, 2, table).unwrap();
        let mu = dirichlet(3, &mut rng);
        let gamma = rng.gen_range(0.0..0.95);
        let d = occupancy(&mdp, &mu, &pi, gamma);
        let mut series = vec![0.0; 6];
        let mut states = mu.clone();
        for k in 0..500 {
            let mut next = vec![0.0; 3];
            for s in 0..3 {
                for a in 0..2 {
                    let x = states[s] * pi.row(s)[a];
                    series[s * 2 + a] += gamma.powi(k) * x;
                    for (sn, p) in mdp.next_dist(s, a).iter().enumerate() {
                        next[sn] += x * p;
                    }
                }
            }
            states = next;
        }
        for (x, y) in d.as_slice().iter().zip(&series) {
            assert!((x - y).abs() < 1e-8);
        }
        assert!((d.total() - 1.0 / (1.0 - gamma)).abs() < 1e-9);
    }
}
