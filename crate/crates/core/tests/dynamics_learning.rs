use hdmc_core::dynamics::{CtsModel, ModelConfig, NeighborhoodSpec};
use hdmc_core::grid::{PixelGrid, Symbol, EMPTY};
use hdmc_core::shooter::{Shooter, NUM_ACTIONS};
use hdmc_core::ActionId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(w: usize, h: usize, alphabet: usize) -> ModelConfig {
    ModelConfig {
        neighborhood: NeighborhoodSpec::new(w, h).unwrap(),
        alphabet,
        padding: EMPTY,
        num_actions: 2,
    }
}

fn random_grid(w: usize, h: usize, alphabet: usize, rng: &mut ChaCha8Rng) -> PixelGrid {
    let cells = (0..w * h).map(|_| rng.gen_range(0..alphabet) as Symbol).collect();
    PixelGrid::from_cells(w, h, cells).unwrap()
}

/// Every possible next grid, in lexicographic order.
fn all_grids(w: usize, h: usize, alphabet: usize) -> Vec<PixelGrid> {
    let n = w * h;
    (0..alphabet.pow(n as u32))
        .map(|mut code| {
            let cells = (0..n)
                .map(|_| {
                    let s = (code % alphabet) as Symbol;
                    code /= alphabet;
                    s
                })
                .collect();
            PixelGrid::from_cells(w, h, cells).unwrap()
        })
        .collect()
}

#[test]
fn grid_probabilities_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (w, h, alphabet) in [(2, 1, 2), (1, 2, 3), (2, 2, 2), (2, 2, 3), (2, 2, 4)] {
        let mut model = CtsModel::new(config(3, 3, alphabet)).unwrap();
        for _ in 0..30 {
            let g = random_grid(w, h, alphabet, &mut rng);
            let next = random_grid(w, h, alphabet, &mut rng);
            model.update_transition(&g, ActionId(rng.gen_range(0..2)), &next);
        }
        for a in 0..2 {
            let g = random_grid(w, h, alphabet, &mut rng);
            let total: f64 = all_grids(w, h, alphabet)
                .iter()
                .map(|next| model.log_prob(&g, ActionId(a), next).exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "{w}x{h} alphabet {alphabet}: {total}");
        }
    }
}

#[test]
fn two_pixel_binary_grid_normalizes() {
    let mut model = CtsModel::new(config(1, 1, 2)).unwrap();
    let g = PixelGrid::from_cells(2, 1, vec![0, 1]).unwrap();
    model.update_transition(&g, ActionId(0), &PixelGrid::from_cells(2, 1, vec![1, 1]).unwrap());
    let total: f64 = all_grids(2, 1, 2).iter().map(|n| model.log_prob(&g, ActionId(0), n).exp()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn deterministic_stream_loss_vanishes() {
    // 200 random contexts, each always followed by the same symbol
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = config(3, 3, 7);
    let mut model = CtsModel::new(cfg).unwrap();
    let pool: Vec<_> = (0..200)
        .map(|_| {
            let g = random_grid(3, 3, 7, &mut rng);
            let a = rng.gen_range(0..2);
            let sym = ((g.cells().iter().map(|&c| c as usize).sum::<usize>() + a) % 7) as Symbol;
            (model.context(&g, 1, 1), sym, ActionId(a))
        })
        .collect();
    let steps = 100_000;
    let mut tail = 0.0;
    for i in 0..steps {
        let (key, sym, a) = &pool[rng.gen_range(0..pool.len())];
        if i >= steps - steps / 10 {
            tail -= model.predict_pixel(*a, key)[*sym as usize].ln();
        }
        model.update(*a, key, *sym);
    }
    let mean = tail / (steps / 10) as f64;
    assert!(mean < 0.02, "tail log-loss {mean}");
}

#[test]
fn deterministic_mapping_becomes_confident() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut model = CtsModel::new(config(3, 1, 4)).unwrap();
    let pool: Vec<_> = (0..20)
        .map(|_| {
            let g = random_grid(3, 1, 4, &mut rng);
            let sym = (g.cells().iter().map(|&c| c as usize).sum::<usize>() % 4) as Symbol;
            (model.context(&g, 1, 0), sym)
        })
        .collect();
    for _ in 0..10_000 {
        let (key, sym) = &pool[rng.gen_range(0..pool.len())];
        model.update(ActionId(0), key, *sym);
    }
    for (key, sym) in &pool {
        let p = model.predict_pixel(ActionId(0), key)[*sym as usize];
        assert!(p > 0.99, "{p}");
    }
}

#[test]
fn statistics_are_shared_across_positions() {
    // the same window content at (2,3) and at (9,9) of a larger grid
    let cfg = config(3, 3, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut g = PixelGrid::filled(12, 12, 0);
    let patch = random_grid(3, 3, 4, &mut rng);
    for dy in 0..3 {
        for dx in 0..3 {
            g.set(1 + dx, 2 + dy, patch.get(dx, dy));
            g.set(8 + dx, 8 + dy, patch.get(dx, dy));
        }
    }
    let mut model = CtsModel::new(cfg).unwrap();
    let here = model.context(&g, 2, 3);
    let there = model.context(&g, 9, 9);
    assert_eq!(here, there);
    let before = model.predict_pixel(ActionId(1), &there);
    model.update(ActionId(1), &here, 2);
    let after = model.predict_pixel(ActionId(1), &there);
    assert!(after[2] > before[2]);

    // two models fed one stream through different positions end identical
    let mut a = CtsModel::new(cfg).unwrap();
    let mut b = CtsModel::new(cfg).unwrap();
    for _ in 0..200 {
        let s = rng.gen_range(0..4);
        a.update(ActionId(0), &here, s);
        b.update(ActionId(0), &there, s);
    }
    assert_eq!(a.snapshot(), b.snapshot());
}

#[test]
fn trained_fixed_point_is_reproduced() {
    let env = Shooter::new(false);
    let g = env.render_state(&env.initial_state());
    let mut model = CtsModel::new(ModelConfig::shooter(NeighborhoodSpec::new(7, 7).unwrap())).unwrap();
    for _ in 0..200 {
        model.update_transition(&g, ActionId(0), &g);
    }
    for (d, &s) in model.predict_grid(&g, ActionId(0)).iter().zip(g.cells()) {
        assert!(d[s as usize] > 0.99);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let same = (0..20).filter(|_| model.sample_next_grid(&g, ActionId(0), &mut rng) == g).count();
    assert!(same >= 10);
}

#[test]
fn shooter_predictions_agree_with_per_pixel_queries() {
    // 7x7 model trained on expert play: whole-grid queries, per-pixel queries
    // and the grid log-probability must agree exactly
    let env = Shooter::new(false);
    let mut model = CtsModel::new(ModelConfig::shooter(NeighborhoodSpec::new(7, 7).unwrap())).unwrap();
    let mut state = env.initial_state();
    let mut screens = Vec::new();
    for _ in 0..30 {
        let a = env.expert_action(&state);
        let next = env.next_state(&state, a);
        let (g, gn) = (env.render_state(&state), env.render_state(&next));
        model.update_transition(&g, a, &gn);
        screens.push((g, a, gn));
        state = next;
    }
    for (g, a, gn) in screens.iter().step_by(5) {
        let grid = model.predict_grid(g, *a);
        let mut total = 0.0;
        for y in 0..g.height() {
            for x in 0..g.width() {
                let d = model.predict_pixel(*a, &model.context(g, x, y));
                assert_eq!(d, grid[y * g.width() + x]);
                let sum: f64 = d.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
                assert!(d[..7].iter().all(|&p| p > 0.0 && p < 1.0));
                total += d[gn.get(x, y) as usize].ln();
            }
        }
        assert_eq!(total, model.log_prob(g, *a, gn));
    }
}

#[test]
fn pixel_code_length_bounds_the_log_probability() {
    let env = Shooter::new(true);
    let mut model = CtsModel::new(ModelConfig::shooter(NeighborhoodSpec::new(5, 5).unwrap())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut state = env.initial_state();
    for _ in 0..40 {
        let a = ActionId(rng.gen_range(0..NUM_ACTIONS));
        let next = env.next_state(&state, a);
        let (g, gn) = (env.render_state(&state), env.render_state(&next));
        // learning pixel by pixel reproduces the transition's total exactly
        let mut stepwise = model.clone();
        let mut total = 0.0;
        for y in 0..g.height() {
            for x in 0..g.width() {
                let key = stepwise.context(&g, x, y);
                let exact = -stepwise.predict_pixel(a, &key)[gn.get(x, y) as usize].ln();
                let loss = stepwise.update(a, &key, gn.get(x, y));
                assert!(loss >= exact - 1e-12, "{loss} < {exact}");
                total += loss;
            }
        }
        let loss = model.update_transition(&g, a, &gn);
        assert!((loss - total).abs() <= 1e-9 * total.max(1.0));
        assert_eq!(model.snapshot(), stepwise.snapshot());
        state = next;
    }
}

#[test]
fn fresh_model_samples_uniformly() {
    let model = CtsModel::new(config(3, 3, 4)).unwrap();
    let g = PixelGrid::filled(1, 1, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = [0usize; 4];
    let n = 10_000;
    for _ in 0..n {
        counts[model.sample_next_grid(&g, ActionId(0), &mut rng).get(0, 0) as usize] += 1;
    }
    let e = n as f64 / 4.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 3 degrees of freedom, p = 0.001
    assert!(chi2 < 16.27, "chi-square {chi2}");
}
