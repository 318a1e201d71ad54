use std::fmt::Write as _;

use hdmc_core::mdp::{BlindPolicy, RolloutPolicy, StationaryPolicy};
use hdmc_core::seed::derive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::instance::dirichlet;
use crate::terms::CHAIN_TOLERANCE;
use crate::{
    check_lemma1, check_lemma2, comparison_policies, eps_val, random_instance, random_xi, rhs_thm1, rhs_thm2,
    rhs_thm3, BoundError, InstanceParams,
};

/// Comparison policies tried per instance for the planning bound.
const COMPARISON_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Check {
    EpsLeThm3,
    Thm3LeEq5,
    EpsLeEq4,
    Eq4LeEq5,
    Eq5LeEq6,
    KnownEpsLeEq1,
    Eq1LeEq2,
    Eq2LeEq3,
    Lemma1,
    Lemma2,
}

impl Check {
    pub const ALL: [Check; 10] = [
        Check::EpsLeThm3,
        Check::Thm3LeEq5,
        Check::EpsLeEq4,
        Check::Eq4LeEq5,
        Check::Eq5LeEq6,
        Check::KnownEpsLeEq1,
        Check::Eq1LeEq2,
        Check::Eq2LeEq3,
        Check::Lemma1,
        Check::Lemma2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::EpsLeThm3 => "eps_le_thm3",
            Check::Thm3LeEq5 => "thm3_le_eq5",
            Check::EpsLeEq4 => "eps_le_eq4",
            Check::Eq4LeEq5 => "eq4_le_eq5",
            Check::Eq5LeEq6 => "eq5_le_eq6",
            Check::KnownEpsLeEq1 => "known_eps_le_eq1",
            Check::Eq1LeEq2 => "eq1_le_eq2",
            Check::Eq2LeEq3 => "eq2_le_eq3",
            Check::Lemma1 => "lemma1",
            Check::Lemma2 => "lemma2",
        }
    }

    pub fn parse(s: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Everything needed to regenerate one sweep instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Replay {
    pub index: usize,
    pub seed: u64,
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub max_reward: f64,
}

impl Replay {
    pub fn to_text(&self) -> String {
        format!(
            "index = {}\nseed = {}\nstates = {}\nactions = {}\nhorizon = {}\ngamma = {:?}\nmax_reward = {:?}\n",
            self.index, self.seed, self.num_states, self.num_actions, self.horizon, self.gamma, self.max_reward
        )
    }

    pub fn parse(text: &str) -> Result<Replay, BoundError> {
        let mut fields = std::collections::BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BoundError::Parse(format!("expected key = value, got {line:?}")))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        fn get<T: std::str::FromStr>(
            fields: &std::collections::BTreeMap<String, String>,
            key: &str,
        ) -> Result<T, BoundError> {
            fields
                .get(key)
                .ok_or_else(|| BoundError::Parse(format!("missing {key}")))?
                .parse()
                .map_err(|_| BoundError::Parse(format!("bad value for {key}")))
        }
        Ok(Replay {
            index: get(&fields, "index")?,
            seed: get(&fields, "seed")?,
            num_states: get(&fields, "states")?,
            num_actions: get(&fields, "actions")?,
            horizon: get(&fields, "horizon")?,
            gamma: get(&fields, "gamma")?,
            max_reward: get(&fields, "max_reward")?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceReport {
    pub replay: Replay,
    pub eps_val: f64,
    pub thm3: f64,
    pub eq4: f64,
    pub eq5: f64,
    pub eq6: f64,
    pub known_eps_val: f64,
    pub eq1: f64,
    pub eq2: f64,
    pub eq3: f64,
    /// Smallest slack over the comparison policies.
    pub lemma1_slack: f64,
    pub lemma2_slack: f64,
    /// The hallucinated reward bound is not claimed tighter than eq4; such
    /// instances are recorded, not failed.
    pub thm3_above_eq4: bool,
    pub failures: Vec<Check>,
}

impl InstanceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// The instance tables in readable form, for inspecting a failure.
    pub fn describe(&self) -> Result<String, BoundError> {
        let r = &self.replay;
        let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
        let inst = random_instance(&chain_params(r), &mut rng)?;
        let xi = random_xi(r.num_states, r.num_actions, &mut rng);
        let mut out = r.to_text();
        for (name, mdp) in [("truth", inst.truth()), ("model", inst.model())] {
            for s in 0..r.num_states {
                for a in 0..r.num_actions {
                    let _ = writeln!(
                        out,
                        "# {name} s={s} a={a} r={:?} next={:?}",
                        mdp.reward(s, a),
                        mdp.next_dist(s, a)
                    );
                }
            }
        }
        let _ = writeln!(out, "# xi {:?}", xi.as_slice());
        Ok(out)
    }
}

fn chain_params(r: &Replay) -> InstanceParams {
    InstanceParams {
        max_reward: r.max_reward,
        ..InstanceParams::new(r.num_states, r.num_actions, r.gamma)
    }
}

/// Evaluates every check on the instance family named by `replay`. `invert`
/// flips one check's verdict so harnesses can confirm failures surface.
pub fn evaluate(replay: &Replay, invert: Option<Check>) -> Result<InstanceReport, BoundError> {
    let r = replay;
    let (ns, na, t) = (r.num_states, r.num_actions, r.horizon);
    let tol = CHAIN_TOLERANCE * r.max_reward;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let rho = BlindPolicy::uniform(na);

    let inst = random_instance(&chain_params(r), &mut rng)?;
    let xi = random_xi(ns, na, &mut rng);
    let eps = eps_val(&inst, &xi, &rho, t)?;
    let thm2 = rhs_thm2(&inst, &xi, &rho, t)?;
    let thm3 = rhs_thm3(&inst, &xi, &rho, t)?;

    let known = inst.with_true_reward();
    let known_eps = eps_val(&known, &xi, &rho, t)?;
    let thm1 = rhs_thm1(&known, &xi, &rho, t)?;

    let mu = dirichlet(ns, &mut rng);
    let mut lemma1_slack = f64::INFINITY;
    let mut lemma1_ok = true;
    for pi in comparison_policies(ns, na, COMPARISON_LIMIT, &mut rng) {
        let c = check_lemma1(&inst, &mu, &rho, &pi, t)?;
        lemma1_slack = lemma1_slack.min(c.slack);
        lemma1_ok &= c.holds;
    }

    let stochastic = random_instance(
        &InstanceParams {
            stochastic_truth: true,
            known_reward: true,
            ..chain_params(r)
        },
        &mut rng,
    )?;
    let table: Vec<f64> = (0..ns).flat_map(|_| dirichlet(na, &mut rng)).collect();
    let pi = StationaryPolicy::new(ns, na, table)?;
    let lemma2_xi = random_xi(ns, na, &mut rng);
    let lemma2 = check_lemma2(&stochastic, &lemma2_xi, &RolloutPolicy::Stationary(pi), t)?;

    let le = |a: f64, b: f64| a <= b + tol;
    let verdicts = [
        (Check::EpsLeThm3, le(eps, thm3)),
        (Check::Thm3LeEq5, le(thm3, thm2.eq5)),
        (Check::EpsLeEq4, le(eps, thm2.eq4)),
        (Check::Eq4LeEq5, le(thm2.eq4, thm2.eq5)),
        (Check::Eq5LeEq6, le(thm2.eq5, thm2.eq6)),
        (Check::KnownEpsLeEq1, le(known_eps, thm1.eq1)),
        (Check::Eq1LeEq2, le(thm1.eq1, thm1.eq2)),
        (Check::Eq2LeEq3, le(thm1.eq2, thm1.eq3)),
        (Check::Lemma1, lemma1_ok),
        (Check::Lemma2, lemma2.holds),
    ];
    let failures = verdicts
        .into_iter()
        .filter(|&(c, ok)| ok == (invert == Some(c)))
        .map(|(c, _)| c)
        .collect();
    Ok(InstanceReport {
        replay: *r,
        eps_val: eps,
        thm3,
        eq4: thm2.eq4,
        eq5: thm2.eq5,
        eq6: thm2.eq6,
        known_eps_val: known_eps,
        eq1: thm1.eq1,
        eq2: thm1.eq2,
        eq3: thm1.eq3,
        lemma1_slack,
        lemma2_slack: lemma2.slack,
        thm3_above_eq4: thm3 > thm2.eq4 + tol,
        failures,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub count: usize,
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// Instance `i` uses `gammas[i % len]`.
    pub gammas: Vec<f64>,
    pub max_reward: f64,
    pub seed: u64,
    pub invert: Option<Check>,
}

impl SweepConfig {
    pub fn new(count: usize, num_states: usize, num_actions: usize, horizon: usize, seed: u64) -> Self {
        Self {
            count,
            num_states,
            num_actions,
            horizon,
            gammas: vec![0.5, 0.9],
            max_reward: 1.0,
            seed,
            invert: None,
        }
    }

    /// Instance `i` is seeded with `derive(seed, i)`.
    pub fn replay(&self, index: usize) -> Replay {
        Replay {
            index,
            seed: derive(self.seed, index as u64),
            num_states: self.num_states,
            num_actions: self.num_actions,
            horizon: self.horizon,
            gamma: self.gammas[index % self.gammas.len()],
            max_reward: self.max_reward,
        }
    }
}

/// Reports in instance order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<InstanceReport>, BoundError> {
    if cfg.gammas.is_empty() {
        return Err(BoundError::Shape("at least one discount is required".into()));
    }
    if cfg.horizon == 0 {
        return Err(BoundError::Horizon);
    }
    (0..cfg.count)
        .into_par_iter()
        .map(|i| evaluate(&cfg.replay(i), cfg.invert))
        .collect()
}
