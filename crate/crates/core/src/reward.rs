//! Linear reward model over local 3×3 pixel configurations.
//!
//! Every grid position contributes one active binary feature: the pair
//! (position, configuration of the 3×3 window centred there), with cells
//! outside the grid read as `EMPTY`. A configuration is packed exactly into 27
//! bits (nine 3-bit symbols, raster order, first cell in the high bits), so
//! distinct features never collide.
//!
//! Weights are stored configuration-major: each configuration seen in
//! training owns a dense `positions × actions` block.
//!
//! The SGD step divides the learning rate by the number of active features,
//! `w_k += (α / n) · weight · (r - r̂)`, which keeps a grid-sized feature
//! vector stable across the usual step-size range.

use std::fmt::Write;

use rustc_hash::FxHashMap;

use crate::grid::{self, PixelGrid, Symbol, SYMBOL_BITS};
use crate::mdp::ActionId;
use crate::shooter;

/// One active feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureKey {
    pub position: u32,
    pub config: u32,
}

/// Active features of a grid, one per position in raster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureVector {
    configs: Vec<u32>,
}

impl FeatureVector {
    pub fn keys(&self) -> impl Iterator<Item = FeatureKey> + '_ {
        self.configs.iter().enumerate().map(|(p, &c)| FeatureKey {
            position: p as u32,
            config: c,
        })
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }
}

/// Packs the 3×3 window around `(x, y)`.
pub fn window_config(g: &PixelGrid, x: usize, y: usize) -> u32 {
    let mut code = 0u32;
    for dy in -1..=1 {
        for dx in -1..=1 {
            let s = g.get_or(x as isize + dx, y as isize + dy, grid::EMPTY);
            code = (code << SYMBOL_BITS) | s as u32;
        }
    }
    code
}

/// Inverse of [`window_config`], raster order.
pub fn decode_config(code: u32) -> [Symbol; 9] {
    let mut out = [0; 9];
    for (i, s) in out.iter_mut().enumerate() {
        *s = ((code >> (SYMBOL_BITS * (8 - i))) & 0b111) as Symbol;
    }
    out
}

pub fn featurize(g: &PixelGrid) -> FeatureVector {
    let mut configs = Vec::with_capacity(g.width() * g.height());
    for y in 0..g.height() {
        for x in 0..g.width() {
            configs.push(window_config(g, x, y));
        }
    }
    FeatureVector { configs }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearRewardModel {
    num_actions: usize,
    num_positions: usize,
    step_size: f64,
    weights: FxHashMap<u32, Vec<f64>>,
    updates: u64,
}

impl LinearRewardModel {
    pub fn new(num_positions: usize, num_actions: usize, step_size: f64) -> Self {
        assert!(step_size > 0.0 && step_size.is_finite(), "step size must be positive");
        Self {
            num_actions,
            num_positions,
            step_size,
            weights: FxHashMap::default(),
            updates: 0,
        }
    }

    pub fn for_shooter(step_size: f64) -> Self {
        Self::new(shooter::WIDTH * shooter::HEIGHT, shooter::NUM_ACTIONS, step_size)
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    /// SGD steps taken.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn weight(&self, key: FeatureKey, action: ActionId) -> f64 {
        self.weights
            .get(&key.config)
            .map_or(0.0, |w| w[key.position as usize * self.num_actions + action.0])
    }

    pub fn set_weight(&mut self, key: FeatureKey, action: ActionId, value: f64) {
        assert!(value.is_finite());
        let na = self.num_actions;
        self.block_mut(key.config)[key.position as usize * na + action.0] = value;
    }

    fn block_mut(&mut self, config: u32) -> &mut Vec<f64> {
        let n = self.num_positions * self.num_actions;
        self.weights.entry(config).or_insert_with(|| vec![0.0; n])
    }

    pub fn predict_keys(&self, keys: impl IntoIterator<Item = FeatureKey>, action: ActionId) -> f64 {
        keys.into_iter().map(|k| self.weight(k, action)).sum()
    }

    pub fn predict_features(&self, f: &FeatureVector, action: ActionId) -> f64 {
        let mut total = 0.0;
        for (p, c) in f.configs.iter().enumerate() {
            if let Some(w) = self.weights.get(c) {
                total += w[p * self.num_actions + action.0];
            }
        }
        total
    }

    pub fn predict(&self, g: &PixelGrid, action: ActionId) -> f64 {
        self.predict_features(&featurize(g), action)
    }

    /// One weighted SGD step on `½ (target - r̂)²` over an arbitrary active set.
    /// Returns the residual before the step.
    pub fn update_keys(&mut self, keys: &[FeatureKey], action: ActionId, target: f64, weight: f64) -> f64 {
        assert!(weight > 0.0 && weight <= 1.0, "example weight {weight} outside (0,1]");
        assert!(target.is_finite());
        let residual = target - self.predict_keys(keys.iter().copied(), action);
        self.updates += 1;
        if keys.is_empty() || residual == 0.0 {
            return residual;
        }
        let delta = self.step_size * weight * residual / keys.len() as f64;
        let na = self.num_actions;
        for k in keys {
            self.block_mut(k.config)[k.position as usize * na + action.0] += delta;
        }
        residual
    }

    pub fn update(&mut self, g: &PixelGrid, action: ActionId, target: f64, weight: f64) -> f64 {
        let keys: Vec<FeatureKey> = featurize(g).keys().collect();
        self.update_keys(&keys, action, target, weight)
    }

    /// Non-zero weights as `position config action weight` lines, sorted.
    pub fn export(&self) -> String {
        let mut configs: Vec<_> = self.weights.keys().copied().collect();
        configs.sort_unstable();
        let mut out = String::from("position config action weight\n");
        for c in configs {
            let w = &self.weights[&c];
            for p in 0..self.num_positions {
                for a in 0..self.num_actions {
                    let v = w[p * self.num_actions + a];
                    if v != 0.0 {
                        let _ = writeln!(out, "{p} {c:07x} {a} {v:e}");
                    }
                }
            }
        }
        out
    }
}

/// Which states the reward learner is trained on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RewardMode {
    /// No learning: the hand-written [`shooter::perfect_reward`].
    Perfect,
    /// Environment states paired with their rewards.
    Env,
    /// Model-rollout states paired with the parallel environment rewards.
    Hallucinated,
}

impl RewardMode {
    pub const ALL: [RewardMode; 3] = [RewardMode::Perfect, RewardMode::Env, RewardMode::Hallucinated];

    pub fn name(self) -> &'static str {
        match self {
            RewardMode::Perfect => "perfect",
            RewardMode::Env => "env",
            RewardMode::Hallucinated => "hallucinated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Chooses the input screen of a reward example at one rollout step:
    /// the environment screen or the model screen. `None` when no example is
    /// collected.
    pub fn training_input<'a>(self, env: &'a PixelGrid, model: &'a PixelGrid) -> Option<&'a PixelGrid> {
        match self {
            RewardMode::Perfect => None,
            RewardMode::Env => Some(env),
            RewardMode::Hallucinated => Some(model),
        }
    }
}

/// The reward function a planner consults.
#[derive(Clone, Debug, PartialEq)]
pub enum RewardSource {
    Perfect,
    Learned(LinearRewardModel),
}

impl RewardSource {
    pub fn for_mode(mode: RewardMode, step_size: f64) -> Self {
        match mode {
            RewardMode::Perfect => RewardSource::Perfect,
            _ => RewardSource::Learned(LinearRewardModel::for_shooter(step_size)),
        }
    }

    pub fn predict(&self, g: &PixelGrid, action: ActionId) -> f64 {
        match self {
            RewardSource::Perfect => shooter::perfect_reward(g, action),
            RewardSource::Learned(m) => m.predict(g, action),
        }
    }

    pub fn updates(&self) -> u64 {
        match self {
            RewardSource::Perfect => 0,
            RewardSource::Learned(m) => m.updates(),
        }
    }
}
