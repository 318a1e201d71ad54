//! DAgger-MC and Hallucinated DAgger-MC training loops on Shooter.
//!
//! Each iteration draws `K` start pairs `(x, b)` from the mixture ξ, runs the
//! environment and the current model side by side from each, and streams the
//! collected examples into the dynamics and reward learners once the
//! iteration's data is in. The policy being improved is always the Monte Carlo
//! planner on top of the current models.
//!
//! Planner decisions are seeded from `(trial seed, model version, screen)`,
//! which makes the learned policy a deterministic function of the screen for a
//! given model version. Decisions are memoized on that basis.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::dynamics::{DynamicsError, FactoredModel, ModelConfig, NeighborhoodSpec, UnrolledModel};
use crate::grid::PixelGrid;
use crate::mdp::{ActionId, BlindPolicy, Environment};
use crate::planner::{self, PlannerConfig, SampleModel};
use crate::reward::{LinearRewardModel, RewardMode, RewardSource};
use crate::seed;
use crate::shooter::{self, decode_grid, Shooter, ShooterState};

#[derive(Debug, Error, PartialEq)]
pub enum LoopError {
    #[error("invalid loop configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Dynamics examples start from environment states.
    DaggerMc,
    /// Dynamics examples start from model-rollout states.
    HDaggerMc,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DaggerMc => "dagger-mc",
            Algorithm::HDaggerMc => "h-dagger-mc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Algorithm::DaggerMc, Algorithm::HDaggerMc]
            .into_iter()
            .find(|a| a.name() == s)
    }
}

/// How many dynamics examples to keep from the front of each training
/// rollout: `early` up to and including iteration `switch_after`, `late`
/// afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub switch_after: usize,
    pub early: usize,
    pub late: usize,
}

impl Truncation {
    pub const STANDARD: Truncation = Truncation {
        switch_after: 10,
        early: 1,
        late: 2,
    };

    pub fn limit(&self, iteration: usize) -> usize {
        if iteration <= self.switch_after {
            self.early
        } else {
            self.late
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopConfig {
    pub algorithm: Algorithm,
    pub reward_mode: RewardMode,
    pub iterations: usize,
    pub rollouts_per_iteration: usize,
    /// Shared by the planner and the training rollouts.
    pub planner: PlannerConfig,
    /// `None` keeps all `T - 1` dynamics examples per rollout.
    pub truncation: Option<Truncation>,
    /// One dynamics model per rollout step instead of a shared one.
    pub unrolled: bool,
    pub reward_step_size: f64,
    pub eval_length: usize,
    pub moving_bullseye: bool,
    pub neighborhood: NeighborhoodSpec,
}

impl LoopConfig {
    /// Defaults for `algorithm`: standard truncation for H-DAgger-MC, full
    /// rollouts for DAgger-MC.
    pub fn new(algorithm: Algorithm, reward_mode: RewardMode, planner: PlannerConfig) -> Self {
        Self {
            algorithm,
            reward_mode,
            iterations: 50,
            rollouts_per_iteration: 500,
            planner,
            truncation: match algorithm {
                Algorithm::DaggerMc => None,
                Algorithm::HDaggerMc => Some(Truncation::STANDARD),
            },
            unrolled: false,
            reward_step_size: 0.1,
            eval_length: shooter::EPISODE_LENGTH,
            moving_bullseye: false,
            neighborhood: NeighborhoodSpec::new(7, 7).expect("7x7 is odd"),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.planner.gamma
    }

    pub fn validate(&self) -> Result<(), LoopError> {
        let bad = |m: String| Err(LoopError::Config(m));
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.rollouts_per_iteration == 0 {
            return bad("rollouts per iteration must be at least 1".into());
        }
        self.planner.validate().map_err(LoopError::Config)?;
        if self.planner.depth < 2 {
            return bad("training rollouts need depth at least 2".into());
        }
        if self.planner.rollout_policy.num_actions() != shooter::NUM_ACTIONS {
            return bad("rollout policy must cover the four Shooter actions".into());
        }
        if let Some(t) = self.truncation {
            if t.early == 0 || t.late == 0 {
                return bad("truncation schedule entries must be at least 1".into());
            }
            if self.unrolled {
                return bad("truncation applies to the shared model only".into());
            }
        }
        if !(self.reward_step_size > 0.0 && self.reward_step_size.is_finite()) {
            return bad(format!("reward step size {} must be positive", self.reward_step_size));
        }
        if self.eval_length == 0 {
            return bad("evaluation episodes need at least one step".into());
        }
        self.model_config().validate()?;
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig::shooter(self.neighborhood)
    }

    /// Dynamics examples kept from each training rollout in `iteration`.
    pub fn dynamics_limit(&self, iteration: usize) -> usize {
        let full = self.planner.depth - 1;
        self.truncation.map_or(full, |t| t.limit(iteration).min(full))
    }
}

/// Which component of ξ produced a start pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum XiBranch {
    /// Discounted state-action distribution of the current policy from μ.
    OnPolicy,
    /// A draw from the exploration distribution ν.
    Exploration,
    /// `x ~ μ`, `b` from the current policy.
    Reset,
    /// One environment step from a ν draw, `b` from the current policy.
    ExplorationStep,
}

impl XiBranch {
    pub const ALL: [XiBranch; 4] = [
        XiBranch::OnPolicy,
        XiBranch::Exploration,
        XiBranch::Reset,
        XiBranch::ExplorationStep,
    ];

    pub fn probabilities(gamma: f64) -> [f64; 4] {
        [0.5, 0.25, (1.0 - gamma) / 4.0, gamma / 4.0]
    }
}

/// Runs `policy` from a μ draw, stopping before each step with probability
/// `1 - γ`. Returns the final state, the policy's action there, and the
/// number of states visited.
pub fn discounted_visit<E, R>(
    env: &E,
    policy: &mut dyn FnMut(&E::State) -> ActionId,
    gamma: f64,
    rng: &mut R,
) -> (E::State, ActionId, usize)
where
    E: Environment,
    R: Rng + ?Sized,
{
    let mut x = env.reset(rng);
    let mut visited = 1;
    loop {
        let b = policy(&x);
        if rng.gen::<f64>() >= gamma {
            return (x, b, visited);
        }
        x = env.step(&x, b, rng).0;
        visited += 1;
    }
}

/// One draw from ξ. `policy` is the current learned policy and `explore` the
/// policy defining ν.
pub fn sample_xi<E, R>(
    env: &E,
    policy: &mut dyn FnMut(&E::State) -> ActionId,
    explore: &mut dyn FnMut(&E::State) -> ActionId,
    gamma: f64,
    rng: &mut R,
) -> (E::State, ActionId, XiBranch)
where
    E: Environment,
    R: Rng + ?Sized,
{
    let probs = XiBranch::probabilities(gamma);
    let branch = XiBranch::ALL[crate::mdp::policy::sample_index(&probs, rng)];
    let (x, b) = match branch {
        XiBranch::OnPolicy => {
            let (x, b, _) = discounted_visit(env, policy, gamma, rng);
            (x, b)
        }
        XiBranch::Exploration => {
            let (x, b, _) = discounted_visit(env, explore, gamma, rng);
            (x, b)
        }
        XiBranch::Reset => {
            let x = env.reset(rng);
            let b = policy(&x);
            (x, b)
        }
        XiBranch::ExplorationStep => {
            let (y, c, _) = discounted_visit(env, explore, gamma, rng);
            let x = env.step(&y, c, rng).0;
            let b = policy(&x);
            (x, b)
        }
    };
    (x, b, branch)
}

/// Transition example for the dynamics model used at rollout step `depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsExample {
    pub depth: usize,
    pub input: PixelGrid,
    pub action: ActionId,
    pub next: PixelGrid,
    /// Whether the input came from a model rollout that had left the
    /// environment trajectory.
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardExample {
    pub input: PixelGrid,
    pub action: ActionId,
    pub reward: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutExamples {
    pub dynamics: Vec<DynamicsExample>,
    pub reward: Vec<RewardExample>,
}

/// Rollout parameters that vary with the algorithm, mode and iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RolloutSpec {
    pub algorithm: Algorithm,
    pub reward_mode: RewardMode,
    pub depth: usize,
    pub gamma: f64,
    /// Dynamics examples kept from the front of the rollout.
    pub dynamics_limit: usize,
}

/// Runs the environment from `(x, b)` for `T` steps alongside a model rollout
/// from the same start. The model rollout is only sampled as far as some
/// example needs it.
pub fn parallel_rollout<M, R>(
    env: &Shooter,
    model: &M,
    x: &ShooterState,
    b: ActionId,
    rho: &BlindPolicy,
    spec: &RolloutSpec,
    rng: &mut R,
) -> RolloutExamples
where
    M: SampleModel<State = PixelGrid> + ?Sized,
    R: Rng,
{
    let t_max = spec.depth;
    let needs_z = |t: usize| {
        spec.reward_mode == RewardMode::Hallucinated
            || (spec.algorithm == Algorithm::HDaggerMc && t <= spec.dynamics_limit)
    };
    let mut out = RolloutExamples::default();
    let mut sampler = rho.sampler(rng);
    let mut s = x.clone();
    let mut s_grid = env.render_state(&s);
    let mut z: Option<PixelGrid> = Some(s_grid.clone());
    let mut a = b;
    let mut weight = 1.0;
    for t in 1..=t_max {
        let r = env.reward(&s, a);
        let z_grid = z.as_ref().unwrap_or(&s_grid);
        if let Some(input) = spec.reward_mode.training_input(&s_grid, z_grid) {
            out.reward.push(RewardExample {
                input: input.clone(),
                action: a,
                reward: r,
                weight,
            });
        }
        if t == t_max {
            break;
        }
        let s_next = env.next_state(&s, a);
        let next_grid = env.render_state(&s_next);
        if t <= spec.dynamics_limit {
            let input = match spec.algorithm {
                Algorithm::DaggerMc => &s_grid,
                Algorithm::HDaggerMc => z.as_ref().expect("model state sampled while needed"),
            };
            out.dynamics.push(DynamicsExample {
                depth: t,
                input: input.clone(),
                action: a,
                next: next_grid.clone(),
                diverged: *input != s_grid,
            });
        }
        z = match z {
            Some(zg) if needs_z(t + 1) => Some(model.sample_next(&zg, a, t, rng)),
            _ => None,
        };
        s = s_next;
        s_grid = next_grid;
        a = sampler.next_action(t + 1, rng);
        weight *= spec.gamma;
    }
    out
}

/// Pixel-level view of the true Shooter dynamics with a static bullseye:
/// decodes the screen, steps, re-renders. Screens that do not decode are
/// returned unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct ScreenOracle;

impl SampleModel for ScreenOracle {
    type State = PixelGrid;

    fn num_actions(&self) -> usize {
        shooter::NUM_ACTIONS
    }

    fn sample_next(&self, g: &PixelGrid, a: ActionId, _depth: usize, _rng: &mut dyn rand::RngCore) -> PixelGrid {
        let env = Shooter::new(false);
        match decode_grid(g) {
            Some(s) => env.render_state(&env.next_state(&s, a)),
            None => g.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub eval_return: f64,
    /// Cumulative dynamics examples trained on.
    pub dynamics_examples: u64,
    /// Cumulative reward examples trained on.
    pub reward_examples: u64,
    /// Mean online code length of this iteration's dynamics examples, in nats
    /// per transition: each pixel is coded just before it is learned.
    pub mean_log_loss: f64,
    /// Mean `|r - r̂|` of this iteration's reward examples before each step.
    pub mean_reward_residual: f64,
    /// Fraction of this iteration's dynamics examples whose input had
    /// diverged from the environment trajectory.
    pub diverged_fraction: f64,
}

/// Models and memoized decisions of one trial.
pub struct Learner {
    pub dynamics: UnrolledModel,
    pub reward: RewardSource,
    planner: PlannerConfig,
    decision_seed: u64,
    version: u64,
    memo: FxHashMap<PixelGrid, ActionId>,
}

impl Learner {
    pub fn new(config: &LoopConfig, trial_seed: u64) -> Result<Self, LoopError> {
        config.validate()?;
        let mc = config.model_config();
        let dynamics = if config.unrolled {
            UnrolledModel::unrolled(mc, config.planner.depth)?
        } else {
            UnrolledModel::shared(FactoredModel::new(mc)?)
        };
        Ok(Self {
            dynamics,
            reward: RewardSource::for_mode(config.reward_mode, config.reward_step_size),
            planner: config.planner.clone(),
            decision_seed: seed::derive(trial_seed, DECISION_STREAM),
            version: 0,
            memo: FxHashMap::default(),
        })
    }

    /// Number of completed training rounds.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn act(&mut self, screen: &PixelGrid) -> ActionId {
        if let Some(&a) = self.memo.get(screen) {
            return a;
        }
        let s = seed::derive(
            seed::derive(self.decision_seed, self.version),
            seed::hash_bytes(screen.cells()),
        );
        let a = planner::plan(&self.dynamics, &self.reward, screen, &self.planner, s);
        self.memo.insert(screen.clone(), a);
        a
    }

    /// Applies one iteration's examples in collection order and returns
    /// `(mean log-loss, mean |residual|)`.
    pub fn train(&mut self, dynamics: &[DynamicsExample], reward: &[RewardExample]) -> (f64, f64) {
        let mut log_loss = 0.0;
        for ex in dynamics {
            log_loss += self.dynamics.at_mut(ex.depth).update_transition(&ex.input, ex.action, &ex.next);
        }
        let mut residual = 0.0;
        if let RewardSource::Learned(m) = &mut self.reward {
            for ex in reward {
                residual += m.update(&ex.input, ex.action, ex.reward, ex.weight).abs();
            }
        } else {
            assert!(reward.is_empty(), "perfect reward takes no examples");
        }
        self.version += 1;
        self.memo.clear();
        (mean(log_loss, dynamics.len()), mean(residual, reward.len()))
    }

    pub fn reward_model(&self) -> Option<&LinearRewardModel> {
        match &self.reward {
            RewardSource::Learned(m) => Some(m),
            RewardSource::Perfect => None,
        }
    }
}

fn mean(total: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

const DECISION_STREAM: u64 = 1;
const COLLECT_STREAM: u64 = 2;

/// Discounted return of one episode from μ.
pub fn evaluate(env: &Shooter, policy: &mut dyn FnMut(&ShooterState) -> ActionId, length: usize, gamma: f64) -> f64 {
    let mut s = env.initial_state();
    let mut total = 0.0;
    let mut discount = 1.0;
    for _ in 0..length {
        let a = policy(&s);
        total += discount * env.reward(&s, a);
        s = env.next_state(&s, a);
        discount *= gamma;
    }
    total
}

/// Episode return of the planner on the true dynamics and reward.
pub fn perfect_model_return(env: &Shooter, cfg: &PlannerConfig, trial_seed: u64, length: usize) -> f64 {
    let base = seed::derive(trial_seed, DECISION_STREAM);
    let mut step = 0u64;
    let mut policy = |s: &ShooterState| {
        step += 1;
        planner::plan(env, env, s, cfg, seed::derive(base, step))
    };
    evaluate(env, &mut policy, length, cfg.gamma)
}

/// Episode return of uniformly random actions.
pub fn random_policy_return(env: &Shooter, trial_seed: u64, length: usize, gamma: f64) -> f64 {
    let mut rng = seed::rng(seed::derive(trial_seed, DECISION_STREAM));
    let mut policy = |_: &ShooterState| ActionId(rng.gen_range(0..shooter::NUM_ACTIONS));
    evaluate(env, &mut policy, length, gamma)
}

/// One trial: `config.iterations` rounds of collection, training and
/// evaluation.
pub fn run(config: &LoopConfig, trial_seed: u64) -> Result<Vec<IterationRecord>, LoopError> {
    run_with(config, trial_seed, |_, _| {})
}

/// [`run`] with a hook called after each iteration's training.
pub fn run_with(
    config: &LoopConfig,
    trial_seed: u64,
    mut after_iteration: impl FnMut(&IterationRecord, &Learner),
) -> Result<Vec<IterationRecord>, LoopError> {
    let mut learner = Learner::new(config, trial_seed)?;
    let env = Shooter::new(config.moving_bullseye);
    let gamma = config.gamma();
    let mut records = Vec::with_capacity(config.iterations);
    let (mut dyn_total, mut rew_total) = (0u64, 0u64);
    for n in 1..=config.iterations {
        let mut rng: ChaCha8Rng = seed::rng(seed::derive(seed::derive(trial_seed, COLLECT_STREAM), n as u64));
        let examples = collect(&env, &mut learner, config, n, &mut rng);
        dyn_total += examples.dynamics.len() as u64;
        rew_total += examples.reward.len() as u64;
        let diverged = examples.dynamics.iter().filter(|e| e.diverged).count();
        let (log_loss, residual) = learner.train(&examples.dynamics, &examples.reward);
        let mut policy = |s: &ShooterState| learner.act(&env.render_state(s));
        let eval_return = evaluate(&env, &mut policy, config.eval_length, gamma);
        let record = IterationRecord {
            iteration: n,
            eval_return,
            dynamics_examples: dyn_total,
            reward_examples: rew_total,
            mean_log_loss: log_loss,
            mean_reward_residual: residual,
            diverged_fraction: mean(diverged as f64, examples.dynamics.len()),
        };
        after_iteration(&record, &learner);
        records.push(record);
    }
    Ok(records)
}

fn collect(
    env: &Shooter,
    learner: &mut Learner,
    config: &LoopConfig,
    iteration: usize,
    rng: &mut ChaCha8Rng,
) -> RolloutExamples {
    let spec = RolloutSpec {
        algorithm: config.algorithm,
        reward_mode: config.reward_mode,
        depth: config.planner.depth,
        gamma: config.gamma(),
        dynamics_limit: config.dynamics_limit(iteration),
    };
    let mut all = RolloutExamples::default();
    for _ in 0..config.rollouts_per_iteration {
        let (x, b, _) = {
            let mut policy = |s: &ShooterState| learner.act(&env.render_state(s));
            let mut explore = |s: &ShooterState| env.expert_action(s);
            sample_xi(env, &mut policy, &mut explore, spec.gamma, rng)
        };
        let ex = parallel_rollout(env, &learner.dynamics, &x, b, &config.planner.rollout_policy, &spec, rng);
        all.dynamics.extend(ex.dynamics);
        all.reward.extend(ex.reward);
    }
    all
}
