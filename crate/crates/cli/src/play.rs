//! Text transcript of one Shooter episode.

use std::fmt::Write as _;

use rand::Rng;

use hdmc_core::seed;
use hdmc_core::shooter::{Shooter, ACTION_NAMES, GAMMA, NUM_ACTIONS};
use hdmc_core::ActionId;

use crate::config::Variant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum PlayPolicy {
    Random,
    Expert,
}

/// Renders the initial frame and then each step's action, reward and frame,
/// followed by the undiscounted and discounted totals.
pub fn transcript(variant: Variant, policy: PlayPolicy, steps: usize, seed: u64) -> String {
    let env = Shooter::new(variant.moving_bullseye());
    let mut rng = seed::rng(seed);
    let mut s = env.initial_state();
    let mut out = String::new();
    let _ = writeln!(out, "step 0");
    out.push_str(&env.render_state(&s).to_ascii());
    let (mut total, mut discounted, mut discount) = (0.0, 0.0, 1.0);
    for t in 1..=steps {
        let a = match policy {
            PlayPolicy::Random => ActionId(rng.gen_range(0..NUM_ACTIONS)),
            PlayPolicy::Expert => env.expert_action(&s),
        };
        let r = env.reward(&s, a);
        total += r;
        discounted += discount * r;
        discount *= GAMMA;
        s = env.next_state(&s, a);
        let _ = writeln!(out, "step {t} action {} reward {r}", ACTION_NAMES[a.0]);
        out.push_str(&env.render_state(&s).to_ascii());
    }
    if steps > 0 {
        let _ = writeln!(out, "total {total} discounted {discounted}");
    }
    out
}
