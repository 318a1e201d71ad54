//! The Shooter arcade domain.
//!
//! Geometry (15 wide × 8 tall):
//!
//! ```text
//! row 0-1   explosion plume above each target
//! row 2     three 3-pixel targets centred on columns 2, 7, 12
//! row 3-6   bullet lane
//! row 7     ship (starts on column 7)
//! ```
//!
//! `SHOOT` places a bullet directly above the ship. Bullets rise one row per
//! step; a bullet moving into row 2 under a live target destroys it and the
//! target's 3×3 block (rows 0-2) shows an explosion for exactly one step. The
//! explosion is a bullseye explosion iff some hitting bullet was in the
//! bullseye column.
//!
//! Rewards are a function of the current screen and action: each explosion
//! visible in `s` pays 20 (bullseye) or 10 (hit), and `SHOOT` costs 1. So the
//! payoff for a hit arrives on the step after the bullet connects, and
//! [`perfect_reward`] applied to `render(s)` reproduces `R(s, a)` exactly.

use rand::Rng;

use crate::grid::{self, PixelGrid};
use crate::mdp::{ActionId, Environment};

pub const WIDTH: usize = 15;
pub const HEIGHT: usize = 8;
pub const TARGET_ROW: usize = 2;
pub const SHIP_ROW: usize = HEIGHT - 1;
pub const TARGET_CENTERS: [usize; 3] = [2, 7, 12];
pub const SHIP_START: usize = 7;
pub const EPISODE_LENGTH: usize = 30;
pub const GAMMA: f64 = 0.9;

pub const NOOP: ActionId = ActionId(0);
pub const LEFT: ActionId = ActionId(1);
pub const RIGHT: ActionId = ActionId(2);
pub const SHOOT: ActionId = ActionId(3);
pub const NUM_ACTIONS: usize = 4;
pub const ACTION_NAMES: [&str; NUM_ACTIONS] = ["noop", "left", "right", "shoot"];

pub const HIT_REWARD: f64 = 10.0;
pub const BULLSEYE_REWARD: f64 = 20.0;
pub const SHOOT_COST: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Explosion {
    None,
    Hit,
    Bullseye,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Target {
    pub alive: bool,
    /// Bullseye column relative to the centre, in `-1..=1`.
    pub bullseye_offset: i8,
    /// Direction of the next bullseye move (moving variant only).
    pub bullseye_dir: i8,
    pub explosion_timer: u8,
    pub explosion: Explosion,
}

impl Target {
    fn fresh() -> Self {
        Self {
            alive: true,
            bullseye_offset: 0,
            bullseye_dir: 1,
            explosion_timer: 0,
            explosion: Explosion::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ShooterState {
    pub ship_x: usize,
    /// `(x, y)` positions, sorted by row then column.
    pub bullets: Vec<(usize, usize)>,
    pub targets: [Target; 3],
}

impl ShooterState {
    pub fn explosions(&self) -> usize {
        self.targets.iter().filter(|t| t.explosion_timer > 0).count()
    }

    pub fn alive_targets(&self) -> usize {
        self.targets.iter().filter(|t| t.alive).count()
    }
}

/// Variant flags. The neighbourhood restriction lives in the model, not here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Shooter {
    pub moving_bullseye: bool,
}

fn next_bullseye(offset: i8, dir: i8) -> (i8, i8) {
    let dir = if (offset + dir).abs() > 1 { -dir } else { dir };
    (offset + dir, dir)
}

fn target_at(x: usize) -> Option<usize> {
    TARGET_CENTERS
        .iter()
        .position(|&c| x + 1 >= c && x <= c + 1)
}

fn explosion_value(state: &ShooterState) -> f64 {
    state
        .targets
        .iter()
        .filter(|t| t.explosion_timer > 0)
        .map(|t| match t.explosion {
            Explosion::Bullseye => BULLSEYE_REWARD,
            Explosion::Hit => HIT_REWARD,
            Explosion::None => 0.0,
        })
        .fold(0.0, |a, b| a + b)
}

fn action_cost(action: ActionId) -> f64 {
    if action == SHOOT {
        SHOOT_COST
    } else {
        0.0
    }
}

impl Shooter {
    pub fn new(moving_bullseye: bool) -> Self {
        Self { moving_bullseye }
    }

    pub fn initial_state(&self) -> ShooterState {
        ShooterState {
            ship_x: SHIP_START,
            bullets: Vec::new(),
            targets: [Target::fresh(); 3],
        }
    }

    /// `R(s, a)`.
    pub fn reward(&self, state: &ShooterState, action: ActionId) -> f64 {
        explosion_value(state) - action_cost(action)
    }

    pub fn next_state(&self, state: &ShooterState, action: ActionId) -> ShooterState {
        let mut targets = state.targets;
        for t in &mut targets {
            if t.explosion_timer > 0 {
                t.explosion_timer -= 1;
                if t.explosion_timer == 0 {
                    t.explosion = Explosion::None;
                }
            }
        }

        let ship_x = match action {
            LEFT => state.ship_x.saturating_sub(1),
            RIGHT => (state.ship_x + 1).min(WIDTH - 1),
            _ => state.ship_x,
        };

        let mut hits: [Option<Explosion>; 3] = [None; 3];
        let mut bullets = Vec::with_capacity(state.bullets.len() + 1);
        for &(x, y) in &state.bullets {
            if y == 0 {
                continue;
            }
            let ny = y - 1;
            if ny == TARGET_ROW {
                if let Some(i) = target_at(x).filter(|&i| targets[i].alive) {
                    let bullseye_x = (TARGET_CENTERS[i] as isize
                        + targets[i].bullseye_offset as isize) as usize;
                    let kind = if x == bullseye_x {
                        Explosion::Bullseye
                    } else {
                        Explosion::Hit
                    };
                    hits[i] = match (hits[i], kind) {
                        (Some(Explosion::Bullseye), _) => Some(Explosion::Bullseye),
                        _ => Some(kind),
                    };
                    continue;
                }
            }
            bullets.push((x, ny));
        }
        for (t, hit) in targets.iter_mut().zip(hits) {
            if let Some(kind) = hit {
                t.alive = false;
                t.explosion_timer = 1;
                t.explosion = kind;
            }
        }

        if self.moving_bullseye {
            for t in targets.iter_mut().filter(|t| t.alive) {
                let (o, d) = next_bullseye(t.bullseye_offset, t.bullseye_dir);
                t.bullseye_offset = o;
                t.bullseye_dir = d;
            }
        }

        if action == SHOOT {
            bullets.push((ship_x, SHIP_ROW - 1));
        }
        bullets.sort_by_key(|&(x, y)| (y, x));
        bullets.dedup();

        ShooterState {
            ship_x,
            bullets,
            targets,
        }
    }

    pub fn render_state(&self, state: &ShooterState) -> PixelGrid {
        let mut g = PixelGrid::filled(WIDTH, HEIGHT, grid::EMPTY);
        for (t, &c) in state.targets.iter().zip(&TARGET_CENTERS) {
            if t.alive {
                for x in c - 1..=c + 1 {
                    g.set(x, TARGET_ROW, grid::TARGET);
                }
                let bx = (c as isize + t.bullseye_offset as isize) as usize;
                g.set(bx, TARGET_ROW, grid::BULLSEYE);
            }
        }
        for &(x, y) in &state.bullets {
            g.set(x, y, grid::BULLET);
        }
        for (t, &c) in state.targets.iter().zip(&TARGET_CENTERS) {
            if t.explosion_timer > 0 {
                let sym = match t.explosion {
                    Explosion::Bullseye => grid::EXPLODE_BULLSEYE,
                    _ => grid::EXPLODE_HIT,
                };
                for y in 0..=TARGET_ROW {
                    for x in c - 1..=c + 1 {
                        g.set(x, y, sym);
                    }
                }
            }
        }
        g.set(state.ship_x, SHIP_ROW, grid::SHIP);
        g
    }

    /// Scripted near-optimal play: aim at the reachable live target whose
    /// bullseye will be under a fresh bullet at impact time, shoot when
    /// aligned, and wait when every live target already has a bullet coming.
    pub fn expert_action(&self, state: &ShooterState) -> ActionId {
        let mut best: Option<(usize, usize)> = None;
        for (i, t) in state.targets.iter().enumerate() {
            if !t.alive {
                continue;
            }
            let c = TARGET_CENTERS[i];
            let claimed = state
                .bullets
                .iter()
                .any(|&(x, y)| y > TARGET_ROW && target_at(x) == Some(i));
            if claimed {
                continue;
            }
            // a bullet fired now sits in row SHIP_ROW-1 next step and enters
            // the target row after SHIP_ROW-1-TARGET_ROW further moves
            let (mut o, mut d) = (t.bullseye_offset, t.bullseye_dir);
            if self.moving_bullseye {
                for _ in 0..SHIP_ROW - 1 - TARGET_ROW {
                    (o, d) = next_bullseye(o, d);
                }
            }
            let aim = (c as isize + o as isize) as usize;
            let dist = aim.abs_diff(state.ship_x);
            if best.is_none_or(|(bd, _)| dist < bd) {
                best = Some((dist, aim));
            }
        }
        match best {
            None => NOOP,
            Some((0, _)) => SHOOT,
            Some((_, aim)) if aim < state.ship_x => LEFT,
            Some(_) => RIGHT,
        }
    }
}

impl Environment for Shooter {
    type State = ShooterState;
    type Observation = PixelGrid;

    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn reset<R: Rng + ?Sized>(&self, _rng: &mut R) -> ShooterState {
        self.initial_state()
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &ShooterState,
        action: ActionId,
        _rng: &mut R,
    ) -> (ShooterState, f64) {
        (self.next_state(state, action), self.reward(state, action))
    }

    fn render(&self, state: &ShooterState) -> PixelGrid {
        self.render_state(state)
    }
}

/// Hand-written reward: 20 or 10 for each target block fully covered by a
/// bullseye or hit explosion, minus 1 for shooting. Only the target blocks are
/// inspected.
pub fn perfect_reward(g: &PixelGrid, action: ActionId) -> f64 {
    let mut total = 0.0 - action_cost(action);
    if g.width() != WIDTH || g.height() != HEIGHT {
        return total;
    }
    for &c in &TARGET_CENTERS {
        let first = g.get(c - 1, 0);
        let uniform = (0..=TARGET_ROW).all(|y| (c - 1..=c + 1).all(|x| g.get(x, y) == first));
        if uniform {
            match first {
                grid::EXPLODE_BULLSEYE => total += BULLSEYE_REWARD,
                grid::EXPLODE_HIT => total += HIT_REWARD,
                _ => {}
            }
        }
    }
    total
}

/// Recovers the latent state of a static-bullseye screen. Returns `None` for
/// screens no static-bullseye state renders to.
pub fn decode_grid(g: &PixelGrid) -> Option<ShooterState> {
    if g.width() != WIDTH || g.height() != HEIGHT {
        return None;
    }
    let ship_cells: Vec<usize> = (0..WIDTH).filter(|&x| g.get(x, SHIP_ROW) == grid::SHIP).collect();
    if ship_cells.len() != 1 || (0..WIDTH).any(|x| !matches!(g.get(x, SHIP_ROW), grid::SHIP | grid::EMPTY)) {
        return None;
    }
    let mut targets = [Target::fresh(); 3];
    let mut covered = [[false; WIDTH]; HEIGHT];
    for (t, &c) in targets.iter_mut().zip(&TARGET_CENTERS) {
        let first = g.get(c - 1, 0);
        let block_uniform =
            (0..=TARGET_ROW).all(|y| (c - 1..=c + 1).all(|x| g.get(x, y) == first));
        let row: Vec<_> = (c - 1..=c + 1).map(|x| g.get(x, TARGET_ROW)).collect();
        if block_uniform && matches!(first, grid::EXPLODE_HIT | grid::EXPLODE_BULLSEYE) {
            t.alive = false;
            t.explosion_timer = 1;
            t.explosion = if first == grid::EXPLODE_BULLSEYE {
                Explosion::Bullseye
            } else {
                Explosion::Hit
            };
            for row in covered.iter_mut().take(TARGET_ROW + 1) {
                row[c - 1..=c + 1].fill(true);
            }
        } else if row.iter().all(|&s| matches!(s, grid::TARGET | grid::BULLSEYE)) {
            let eyes: Vec<usize> = (0..3).filter(|&i| row[i] == grid::BULLSEYE).collect();
            if eyes.len() != 1 {
                return None;
            }
            t.bullseye_offset = eyes[0] as i8 - 1;
            covered[TARGET_ROW][c - 1..=c + 1].fill(true);
        } else {
            t.alive = false;
        }
    }
    let mut bullets = Vec::new();
    for y in 0..SHIP_ROW {
        for x in 0..WIDTH {
            if covered[y][x] {
                continue;
            }
            match g.get(x, y) {
                grid::EMPTY => {}
                grid::BULLET => bullets.push((x, y)),
                _ => return None,
            }
        }
    }
    Some(ShooterState {
        ship_x: ship_cells[0],
        bullets,
        targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn random_walk(env: &Shooter, steps: usize, seed: u64) -> Vec<ShooterState> {
        let mut rng = seed::rng(seed);
        let mut s = env.initial_state();
        let mut out = vec![s.clone()];
        for _ in 0..steps {
            let a = if rng.gen_bool(0.5) {
                env.expert_action(&s)
            } else {
                ActionId(rng.gen_range(0..NUM_ACTIONS))
            };
            s = env.next_state(&s, a);
            out.push(s.clone());
        }
        out
    }

    #[test]
    fn reset_renders_three_targets_and_one_ship() {
        let env = Shooter::new(false);
        let g = env.render(&env.reset(&mut seed::rng(0)));
        assert_eq!(g.count(grid::SHIP), 1);
        assert_eq!(g.count(grid::BULLSEYE), 3);
        assert_eq!(g.count(grid::TARGET), 6);
        let moving = Shooter::new(true).initial_state();
        assert!(moving.targets.iter().all(|t| t.bullseye_offset == 0 && t.bullseye_dir == 1));
    }

    #[test]
    fn shooting_costs_one() {
        let env = Shooter::new(false);
        let s = env.initial_state();
        assert_eq!(env.reward(&s, SHOOT), -1.0);
        assert_eq!(env.reward(&s, NOOP), 0.0);
        assert_eq!(env.next_state(&s, NOOP), s);
    }

    #[test]
    fn centre_shot_pays_bullseye_after_impact() {
        let env = Shooter::new(false);
        let mut s = env.initial_state();
        let mut rewards = vec![];
        for a in [SHOOT, NOOP, NOOP, NOOP, NOOP, NOOP] {
            rewards.push(env.reward(&s, a));
            s = env.next_state(&s, a);
        }
        // fired at t=1, bullet in rows 6..3 for t=2..5, explosion visible at t=6
        assert_eq!(rewards, vec![-1.0, 0.0, 0.0, 0.0, 0.0, 20.0]);
        assert_eq!(env.reward(&s, SHOOT), -1.0);
        assert!(!s.targets[1].alive);
        assert_eq!(s.explosions(), 0);
    }

    #[test]
    fn off_centre_shot_is_a_hit() {
        let env = Shooter::new(false);
        let mut s = env.next_state(&env.initial_state(), RIGHT);
        s = env.next_state(&s, SHOOT);
        for _ in 0..4 {
            s = env.next_state(&s, NOOP);
        }
        assert_eq!(s.targets[1].explosion, Explosion::Hit);
        assert_eq!(env.reward(&s, NOOP), 10.0);
        assert_eq!(env.reward(&s, SHOOT), 9.0);
        let g = env.render(&s);
        assert_eq!(g.count(grid::EXPLODE_HIT), 9);
        assert_eq!(perfect_reward(&g, NOOP), 10.0);
    }

    #[test]
    fn moving_bullseye_bounces() {
        let mut o = (0i8, 1i8);
        let mut seen = vec![];
        for _ in 0..6 {
            o = next_bullseye(o.0, o.1);
            seen.push(o.0);
        }
        assert_eq!(seen, vec![1, 0, -1, 0, 1, 0]);
    }

    #[test]
    fn expert_rules() {
        let env = Shooter::new(false);
        let s = env.initial_state();
        assert_eq!(env.expert_action(&s), SHOOT);
        let mut left = s.clone();
        left.ship_x = 5;
        assert_eq!(env.expert_action(&left), RIGHT);
        let mut done = s.clone();
        for t in &mut done.targets {
            t.alive = false;
        }
        assert_eq!(env.expert_action(&done), NOOP);
    }

    #[test]
    fn perfect_reward_ignores_everything_outside_target_blocks() {
        let mut g = PixelGrid::filled(WIDTH, HEIGHT, grid::EMPTY);
        for x in 0..WIDTH {
            g.set(x, 5, grid::EXPLODE_BULLSEYE);
        }
        g.set(0, 0, grid::EXPLODE_HIT);
        assert_eq!(perfect_reward(&g, NOOP), 0.0);
        assert_eq!(perfect_reward(&g, SHOOT), -1.0);
    }

    #[test]
    fn decode_inverts_render_on_reachable_states() {
        let env = Shooter::new(false);
        for seed in 0..20 {
            for s in random_walk(&env, 40, seed) {
                assert_eq!(decode_grid(&env.render(&s)).as_ref(), Some(&s));
            }
        }
    }

    #[test]
    fn step_is_pure() {
        let env = Shooter::new(true);
        let states = random_walk(&env, 200, 5);
        for s in &states {
            for a in 0..NUM_ACTIONS {
                let a = ActionId(a);
                assert_eq!(env.next_state(s, a), env.next_state(s, a));
                assert_eq!(env.reward(s, a).to_bits(), env.reward(s, a).to_bits());
            }
        }
    }
}
