use hdmc_core::dagger::{parallel_rollout, Algorithm, RewardExample, RolloutSpec, ScreenOracle};
use hdmc_core::grid::{PixelGrid, EMPTY};
use hdmc_core::mdp::BlindPolicy;
use hdmc_core::planner::SampleModel;
use hdmc_core::reward::{LinearRewardModel, RewardMode};
use hdmc_core::shooter::{perfect_reward, Shooter, ShooterState, EPISODE_LENGTH, NUM_ACTIONS};
use hdmc_core::ActionId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Expert half the time, uniform otherwise, so explosions of both kinds show
/// up often.
fn mixed_action(env: &Shooter, s: &ShooterState, rng: &mut ChaCha8Rng) -> ActionId {
    if rng.gen_bool(0.5) {
        env.expert_action(s)
    } else {
        ActionId(rng.gen_range(0..NUM_ACTIONS))
    }
}

#[test]
fn screens_determine_the_reward() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut paid = 0;
    for episode in 0..1000 {
        let env = Shooter::new(episode % 2 == 1);
        let mut s = env.initial_state();
        for _ in 0..EPISODE_LENGTH {
            let a = mixed_action(&env, &s, &mut rng);
            let r = env.reward(&s, a);
            assert_eq!(perfect_reward(&env.render_state(&s), a), r);
            paid += usize::from(r > 0.0);
            s = env.next_state(&s, a);
        }
    }
    assert!(paid > 1000);
}

#[test]
fn realizable_rewards_are_learned() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let env = Shooter::new(false);
    let mut data: Vec<(PixelGrid, ActionId, f64)> = Vec::new();
    let mut s = env.initial_state();
    while data.len() < 500 {
        let a = mixed_action(&env, &s, &mut rng);
        data.push((env.render_state(&s), a, env.reward(&s, a)));
        s = env.next_state(&s, a);
        if data.len().is_multiple_of(EPISODE_LENGTH) {
            s = env.initial_state();
        }
    }
    assert!(data.iter().any(|d| d.2 >= 10.0));

    let mut model = LinearRewardModel::for_shooter(0.5);
    let max_error = |m: &LinearRewardModel| {
        data.iter().map(|(g, a, r)| (m.predict(g, *a) - r).abs()).fold(0.0, f64::max)
    };
    let mut passes = 0;
    while max_error(&model) >= 0.1 && passes < 2000 {
        for (g, a, r) in &data {
            model.update(g, *a, *r, 1.0);
        }
        passes += 1;
    }
    assert!(max_error(&model) < 0.1, "max error {} after {passes} passes", max_error(&model));
}

/// Blanks the screen: every rollout diverges after the first step.
struct Blank;

impl SampleModel for Blank {
    type State = PixelGrid;

    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn sample_next(&self, g: &PixelGrid, _a: ActionId, _depth: usize, _rng: &mut dyn rand::RngCore) -> PixelGrid {
        PixelGrid::filled(g.width(), g.height(), EMPTY)
    }
}

fn reward_examples<M: SampleModel<State = PixelGrid>>(model: &M, mode: RewardMode, seed: u64) -> Vec<RewardExample> {
    let env = Shooter::new(false);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = BlindPolicy::uniform(NUM_ACTIONS);
    let spec = RolloutSpec {
        algorithm: Algorithm::HDaggerMc,
        reward_mode: mode,
        depth: 10,
        gamma: 0.9,
        dynamics_limit: 2,
    };
    let mut out = Vec::new();
    let mut s = env.initial_state();
    for _ in 0..40 {
        let b = mixed_action(&env, &s, &mut rng);
        out.extend(parallel_rollout(&env, model, &s, b, &rho, &spec, &mut rng).reward);
        s = env.next_state(&s, b);
    }
    out
}

fn train(examples: &[RewardExample]) -> LinearRewardModel {
    let mut m = LinearRewardModel::for_shooter(0.1);
    for ex in examples {
        m.update(&ex.input, ex.action, ex.reward, ex.weight);
    }
    m
}

#[test]
fn modes_separate_only_under_model_error() {
    let env_oracle = reward_examples(&ScreenOracle, RewardMode::Env, 3);
    let hal_oracle = reward_examples(&ScreenOracle, RewardMode::Hallucinated, 3);
    assert_eq!(env_oracle, hal_oracle);
    assert_eq!(train(&env_oracle).export(), train(&hal_oracle).export());

    let env_blank = reward_examples(&Blank, RewardMode::Env, 3);
    let hal_blank = reward_examples(&Blank, RewardMode::Hallucinated, 3);
    assert_eq!(env_blank.len(), hal_blank.len());
    assert_ne!(train(&env_blank).export(), train(&hal_blank).export());
    // same targets and weights, different inputs
    for (e, h) in env_blank.iter().zip(&hal_blank) {
        assert_eq!((e.action, e.reward, e.weight), (h.action, h.reward, h.weight));
    }
}

#[test]
fn example_weights_decay_geometrically() {
    let examples = reward_examples(&ScreenOracle, RewardMode::Env, 4);
    for chunk in examples.chunks(10) {
        for (t, ex) in chunk.iter().enumerate() {
            assert!((ex.weight - 0.9f64.powi(t as i32)).abs() < 1e-15);
        }
    }
    assert!(reward_examples(&ScreenOracle, RewardMode::Perfect, 4).is_empty());
}
