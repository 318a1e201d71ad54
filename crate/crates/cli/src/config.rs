//! Experiment configuration: a flat `key = value` file plus overrides.
//!
//! Every key has a default, so an empty file is a valid configuration. Keys
//! are resolved once all sources have been applied; the neighborhood falls
//! back to the variant's default only when it was never set.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hdmc_core::dagger::{Algorithm, LoopConfig, Truncation};
use hdmc_core::dynamics::NeighborhoodSpec;
use hdmc_core::mdp::BlindPolicy;
use hdmc_core::planner::PlannerConfig;
use hdmc_core::reward::RewardMode;
use hdmc_core::shooter::NUM_ACTIONS;

use crate::CliError;

/// The step sizes swept by `--sweep-alpha`.
pub const STEP_SIZES: [f64; 5] = [0.005, 0.01, 0.05, 0.1, 0.5];

pub const KEYS: [&str; 14] = [
    "variant",
    "algorithm",
    "reward_mode",
    "iterations",
    "trials",
    "rollouts",
    "planner_rollouts",
    "depth",
    "gamma",
    "neighborhood",
    "step_sizes",
    "seed",
    "truncation",
    "unrolled",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Static bullseyes, 7×7 model.
    A,
    /// Moving bullseyes.
    B,
    /// Static bullseyes, restricted neighborhood.
    C,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::A => "a",
            Variant::B => "b",
            Variant::C => "c",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Variant::A, Variant::B, Variant::C].into_iter().find(|v| v.name() == s)
    }

    pub fn moving_bullseye(self) -> bool {
        self == Variant::B
    }

    pub fn default_neighborhood(self) -> NeighborhoodSpec {
        let (w, h) = match self {
            Variant::C => (7, 5),
            _ => (7, 7),
        };
        NeighborhoodSpec::new(w, h).expect("odd sizes")
    }
}

/// What produces the actions being evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Learn(Algorithm),
    /// The planner on the true dynamics and reward.
    PerfectModel,
    /// Uniformly random actions.
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Learn(a) => a.name(),
            Method::PerfectModel => "perfect-model",
            Method::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "perfect-model" => Some(Method::PerfectModel),
            "random" => Some(Method::Random),
            _ => Algorithm::parse(s).map(Method::Learn),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncationSetting {
    /// The algorithm's default: standard for H-DAgger-MC, none for DAgger-MC.
    Auto,
    None,
    Standard,
}

impl TruncationSetting {
    fn name(self) -> &'static str {
        match self {
            TruncationSetting::Auto => "auto",
            TruncationSetting::None => "none",
            TruncationSetting::Standard => "standard",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [TruncationSetting::Auto, TruncationSetting::None, TruncationSetting::Standard]
            .into_iter()
            .find(|t| t.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub variant: Variant,
    pub method: Method,
    pub reward_mode: RewardMode,
    pub iterations: usize,
    pub trials: usize,
    /// Training rollouts per iteration (K).
    pub rollouts: usize,
    /// Planner rollouts per action (N).
    pub planner_rollouts: usize,
    /// Planner and training rollout depth (T).
    pub depth: usize,
    pub gamma: f64,
    pub neighborhood: NeighborhoodSpec,
    pub step_sizes: Vec<f64>,
    pub seed: u64,
    pub truncation: TruncationSetting,
    pub unrolled: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::parse("").expect("defaults are valid")
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(format!("{key}: cannot parse {value:?}")))
}

fn parse_neighborhood(value: &str) -> Result<NeighborhoodSpec, CliError> {
    let (w, h) = value
        .split_once('x')
        .ok_or_else(|| bad(format!("neighborhood: expected WxH, got {value:?}")))?;
    let w = number("neighborhood", w.trim())?;
    let h = number("neighborhood", h.trim())?;
    NeighborhoodSpec::new(w, h).map_err(|e| bad(format!("neighborhood: {e}")))
}

fn parse_list(value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(|s| number("step_sizes", s.trim()))
        .collect()
}

/// Raw `key = value` pairs; later assignments win.
#[derive(Clone, Debug, Default)]
pub struct ConfigSource {
    values: BTreeMap<String, String>,
}

impl ConfigSource {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(bad(format!("unknown key {key:?}")));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Adds every assignment of a config file. `#` starts a comment.
    pub fn read_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// A `key=value` override.
    pub fn read_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| bad(format!("override {assignment:?}: expected key=value")))?;
        self.set(k, v)
    }

    pub fn build(&self) -> Result<ExperimentConfig, CliError> {
        let get = |k: &str| self.values.get(k).map(String::as_str);
        let variant = match get("variant") {
            Some(v) => Variant::parse(v).ok_or_else(|| bad(format!("variant: unknown {v:?}")))?,
            None => Variant::A,
        };
        let method = match get("algorithm") {
            Some(v) => Method::parse(v).ok_or_else(|| bad(format!("algorithm: unknown {v:?}")))?,
            None => Method::Learn(Algorithm::HDaggerMc),
        };
        let reward_mode = match get("reward_mode") {
            Some(v) => RewardMode::parse(v).ok_or_else(|| bad(format!("reward_mode: unknown {v:?}")))?,
            None => RewardMode::Hallucinated,
        };
        let usize_or = |k: &str, d: usize| get(k).map_or(Ok(d), |v| number::<usize>(k, v));
        let neighborhood = match get("neighborhood") {
            Some(v) => parse_neighborhood(v)?,
            None => variant.default_neighborhood(),
        };
        let truncation = match get("truncation") {
            Some(v) => TruncationSetting::parse(v).ok_or_else(|| bad(format!("truncation: unknown {v:?}")))?,
            None => TruncationSetting::Auto,
        };
        let unrolled = match get("unrolled") {
            Some(v) => number::<bool>("unrolled", v)?,
            None => false,
        };
        let config = ExperimentConfig {
            variant,
            method,
            reward_mode,
            iterations: usize_or("iterations", 50)?,
            trials: usize_or("trials", 50)?,
            rollouts: usize_or("rollouts", 500)?,
            planner_rollouts: usize_or("planner_rollouts", 50)?,
            depth: usize_or("depth", 20)?,
            gamma: get("gamma").map_or(Ok(0.9), |v| number("gamma", v))?,
            neighborhood,
            step_sizes: get("step_sizes").map_or(Ok(vec![0.1]), parse_list)?,
            seed: get("seed").map_or(Ok(0), |v| number("seed", v))?,
            truncation,
            unrolled,
        };
        config.validate()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut src = ConfigSource::default();
        src.read_text(text)?;
        src.build()
    }

    /// Every key, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let steps: Vec<String> = self.step_sizes.iter().map(|a| a.to_string()).collect();
        let values = [
            self.variant.name().to_string(),
            self.method.name().to_string(),
            self.reward_mode.name().to_string(),
            self.iterations.to_string(),
            self.trials.to_string(),
            self.rollouts.to_string(),
            self.planner_rollouts.to_string(),
            self.depth.to_string(),
            self.gamma.to_string(),
            format!("{}x{}", self.neighborhood.width, self.neighborhood.height),
            steps.join(","),
            self.seed.to_string(),
            self.truncation.name().to_string(),
            self.unrolled.to_string(),
        ];
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(bad(format!("gamma {} must lie in [0, 1)", self.gamma)));
        }
        if self.trials == 0 {
            return Err(bad("trials must be at least 1"));
        }
        if self.step_sizes.is_empty() || self.step_sizes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(bad("step_sizes must be positive"));
        }
        if self.planner_rollouts == 0 || self.depth == 0 {
            return Err(bad("planner_rollouts and depth must be at least 1"));
        }
        if let Method::Learn(_) = self.method {
            self.loop_config(self.step_sizes[0])
                .validate()
                .map_err(|e| bad(e.to_string()))?;
        } else if self.iterations == 0 {
            return Err(bad("iterations must be at least 1"));
        }
        Ok(())
    }

    pub fn planner(&self) -> PlannerConfig {
        PlannerConfig::new(
            self.planner_rollouts,
            self.depth,
            self.gamma,
            BlindPolicy::uniform(NUM_ACTIONS),
        )
    }

    /// Training-loop configuration for one step size. Only meaningful for
    /// learning methods; baselines use DAgger-MC as a placeholder.
    pub fn loop_config(&self, step_size: f64) -> LoopConfig {
        let algorithm = match self.method {
            Method::Learn(a) => a,
            _ => Algorithm::DaggerMc,
        };
        let mut c = LoopConfig::new(algorithm, self.reward_mode, self.planner());
        c.iterations = self.iterations;
        c.rollouts_per_iteration = self.rollouts;
        c.reward_step_size = step_size;
        c.moving_bullseye = self.variant.moving_bullseye();
        c.neighborhood = self.neighborhood;
        c.unrolled = self.unrolled;
        match self.truncation {
            TruncationSetting::Auto if self.unrolled => c.truncation = None,
            TruncationSetting::Auto => {}
            TruncationSetting::None => c.truncation = None,
            TruncationSetting::Standard => c.truncation = Some(Truncation::STANDARD),
        }
        c
    }

    /// Whether the step size affects the results.
    pub fn learns_reward(&self) -> bool {
        matches!(self.method, Method::Learn(_)) && self.reward_mode != RewardMode::Perfect
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_protocol() {
        let c = ExperimentConfig::default();
        assert_eq!(c.variant, Variant::A);
        assert_eq!((c.planner_rollouts, c.depth, c.gamma, c.rollouts), (50, 20, 0.9, 500));
        assert_eq!((c.iterations, c.trials), (50, 50));
        assert_eq!(c.neighborhood, NeighborhoodSpec::new(7, 7).unwrap());
    }

    #[test]
    fn variant_sets_the_default_neighborhood_only() {
        let c = ExperimentConfig::parse("variant = c").unwrap();
        assert_eq!(c.neighborhood, NeighborhoodSpec::new(7, 5).unwrap());
        let c = ExperimentConfig::parse("neighborhood = 3x3\nvariant = c").unwrap();
        assert_eq!(c.neighborhood, NeighborhoodSpec::new(3, 3).unwrap());
        assert!(ExperimentConfig::parse("variant = b").unwrap().variant.moving_bullseye());
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "colour = red",
            "gamma = 1",
            "gamma = -0.1",
            "trials = 0",
            "neighborhood = 4x3",
            "step_sizes = 0.1,0",
            "algorithm = sarsa",
            "just words",
            "depth = 1",
        ] {
            assert!(matches!(ExperimentConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn overrides_win_and_comments_are_ignored() {
        let mut src = ConfigSource::default();
        src.read_text("# comment\ntrials = 3 # trailing\n\nseed = 4\n").unwrap();
        src.read_override("trials=7").unwrap();
        let c = src.build().unwrap();
        assert_eq!((c.trials, c.seed), (7, 4));
        assert!(src.read_override("trials").is_err());
    }

    #[test]
    fn truncation_follows_the_algorithm_unless_set() {
        let h = ExperimentConfig::parse("algorithm = h-dagger-mc").unwrap();
        assert_eq!(h.loop_config(0.1).truncation, Some(Truncation::STANDARD));
        let d = ExperimentConfig::parse("algorithm = dagger-mc").unwrap();
        assert_eq!(d.loop_config(0.1).truncation, None);
        let d = ExperimentConfig::parse("algorithm = dagger-mc\ntruncation = standard").unwrap();
        assert_eq!(d.loop_config(0.1).truncation, Some(Truncation::STANDARD));
        let u = ExperimentConfig::parse("unrolled = true").unwrap();
        assert!(u.loop_config(0.1).unrolled);
        assert_eq!(u.loop_config(0.1).truncation, None);
    }
}
