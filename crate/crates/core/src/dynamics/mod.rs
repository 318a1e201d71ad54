//! Factored per-pixel dynamics model.
//!
//! Each next-frame pixel is predicted independently from the `w × h`
//! neighbourhood around the same position in the previous frame. One set of
//! predictors is shared by every position, with a disjoint set per action.
//!
//! A context is the neighbourhood's symbols listed nearest-first (by squared
//! distance, then row, then column), each written MSB-first in `symbol_bits`
//! bits. Cells outside the grid read as the configured padding symbol. The
//! next symbol is predicted bit by bit; the binary predictor for bit `i` is
//! chosen by the `i` bits already fixed, giving `2^bits - 1` predictors per
//! action. Codes at or above the alphabet size are dropped and the rest
//! renormalised.
//!
//! Snapshot format (text, one record per line):
//!
//! ```text
//! hdmc-dynamics v1
//! predictor <cts|kt>
//! neighborhood <w> <h>
//! alphabet <n> padding <sym> actions <a>
//! updates <count>
//! <predictor blocks, action-major then predictor index>
//! ```

pub mod cts;
pub mod kt;

use std::sync::Mutex;

use rand::Rng;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::grid::{self, PixelGrid, Symbol};
use crate::mdp::ActionId;

pub use cts::{kt_prob, ContextTree};
pub use kt::KtContextTable;

/// Packed context bits; bit `d` lives at word `d / 64`, position `d % 64`.
pub type ContextKey = [u64; 4];

pub const MAX_CONTEXT_BITS: usize = 256;
const MAX_CODES: usize = 8;
const CACHE_LIMIT: usize = 1 << 21;
const SNAPSHOT_MAGIC: &str = "hdmc-dynamics v1";

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("neighbourhood {width}x{height} must have odd, positive sides")]
    BadNeighborhood { width: usize, height: usize },
    #[error("context needs {0} bits, more than the supported {MAX_CONTEXT_BITS}")]
    ContextTooLong(usize),
    #[error("alphabet size {0} must be in 1..=7")]
    BadAlphabet(usize),
    #[error("padding symbol {0} must be below 8")]
    BadPadding(Symbol),
    #[error("model needs at least one action")]
    NoActions,
}

#[derive(Debug, Error, PartialEq)]
pub enum SnapshotError {
    #[error("snapshot ended early")]
    Truncated,
    #[error("malformed snapshot line: {0}")]
    Malformed(String),
    #[error("unsupported snapshot header: {0}")]
    Version(String),
    #[error("snapshot predictor {found} does not match {expected}")]
    Predictor { expected: String, found: String },
    #[error(transparent)]
    Config(#[from] DynamicsError),
}

fn push_bits(key: &mut ContextKey, pos: usize, value: u64, n: usize) {
    let (w, o) = (pos >> 6, pos & 63);
    key[w] |= value << o;
    if o + n > 64 {
        key[w + 1] |= value >> (64 - o);
    }
}

fn get_bits(key: &ContextKey, pos: usize, n: usize) -> u64 {
    let (w, o) = (pos >> 6, pos & 63);
    let mut v = key[w] >> o;
    if o + n > 64 {
        v |= key[w + 1] << (64 - o);
    }
    v & ((1u64 << n) - 1)
}

/// Online binary sequence predictor indexed by a fixed-length context.
pub trait BitPredictor: Clone + Send + Sync {
    const NAME: &'static str;
    fn new(depth: usize) -> Self;
    /// Probability that the next bit in this context is 1; always in (0,1).
    fn prob_one(&self, key: &ContextKey) -> f64;
    /// Learns `bit` in this context. Returns the probability assigned to `bit`
    /// just before the update.
    fn update(&mut self, key: &ContextKey, bit: bool) -> f64;
    fn write_snapshot(&self, out: &mut String);
    fn read_snapshot<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Result<Self, SnapshotError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NeighborhoodSpec {
    pub width: usize,
    pub height: usize,
}

impl NeighborhoodSpec {
    pub fn new(width: usize, height: usize) -> Result<Self, DynamicsError> {
        if width == 0 || height == 0 || width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(DynamicsError::BadNeighborhood { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    /// `(dx, dy)` offsets, nearest first.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let (hw, hh) = ((self.width / 2) as isize, (self.height / 2) as isize);
        let mut v: Vec<(isize, isize)> = (-hh..=hh)
            .flat_map(|dy| (-hw..=hw).map(move |dx| (dx, dy)))
            .collect();
        v.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub neighborhood: NeighborhoodSpec,
    /// Number of predictable symbols `0..alphabet`.
    pub alphabet: usize,
    pub padding: Symbol,
    pub num_actions: usize,
}

impl ModelConfig {
    /// Shooter screens: seven symbols, walls visible as `BORDER`.
    pub fn shooter(neighborhood: NeighborhoodSpec) -> Self {
        Self {
            neighborhood,
            alphabet: grid::NUM_SYMBOLS,
            padding: grid::BORDER,
            num_actions: crate::shooter::NUM_ACTIONS,
        }
    }

    pub fn symbol_bits(&self) -> usize {
        let codes = self.alphabet.max(self.padding as usize + 1);
        (usize::BITS - (codes - 1).leading_zeros()).max(1) as usize
    }

    pub fn context_bits(&self) -> usize {
        self.neighborhood.cells() * self.symbol_bits()
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        NeighborhoodSpec::new(self.neighborhood.width, self.neighborhood.height)?;
        if self.alphabet == 0 || self.alphabet > grid::NUM_SYMBOLS {
            return Err(DynamicsError::BadAlphabet(self.alphabet));
        }
        if self.padding as usize >= MAX_CODES {
            return Err(DynamicsError::BadPadding(self.padding));
        }
        if self.num_actions == 0 {
            return Err(DynamicsError::NoActions);
        }
        if self.context_bits() > MAX_CONTEXT_BITS || self.neighborhood.width * self.symbol_bits() > 64 {
            return Err(DynamicsError::ContextTooLong(self.context_bits()));
        }
        Ok(())
    }
}

/// Next-frame distribution over pixel symbols; entries at or beyond the
/// alphabet size are zero.
pub type SymbolDist = [f64; MAX_CODES];

pub struct FactoredModel<B: BitPredictor = ContextTree> {
    config: ModelConfig,
    offsets: Vec<(isize, isize)>,
    /// Bit offset, inside a window key, of each nearest-first context cell.
    window_pos: Vec<usize>,
    /// Symbol codes with their `bits` low bits reversed.
    reversed: Vec<u64>,
    bits: usize,
    predictors: Vec<B>,
    updates: u64,
    cache: Mutex<FxHashMap<(usize, ContextKey), SymbolDist>>,
}

pub type CtsModel = FactoredModel<ContextTree>;

impl<B: BitPredictor> Clone for FactoredModel<B> {
    fn clone(&self) -> Self {
        Self {
            config: self.config,
            offsets: self.offsets.clone(),
            window_pos: self.window_pos.clone(),
            reversed: self.reversed.clone(),
            bits: self.bits,
            predictors: self.predictors.clone(),
            updates: self.updates,
            cache: Mutex::new(FxHashMap::default()),
        }
    }
}

impl<B: BitPredictor> std::fmt::Debug for FactoredModel<B> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FactoredModel")
            .field("predictor", &B::NAME)
            .field("config", &self.config)
            .field("updates", &self.updates)
            .finish()
    }
}

impl<B: BitPredictor> FactoredModel<B> {
    pub fn new(config: ModelConfig) -> Result<Self, DynamicsError> {
        config.validate()?;
        let bits = config.symbol_bits();
        let per_action = (1 << bits) - 1;
        let depth = config.context_bits();
        let nb = config.neighborhood;
        let (hw, hh) = ((nb.width / 2) as isize, (nb.height / 2) as isize);
        let offsets = nb.offsets();
        let window_pos = offsets
            .iter()
            .map(|&(dx, dy)| {
                let (col, row) = ((dx + hw) as usize, (dy + hh) as usize);
                row * nb.width * bits + (nb.width - 1 - col) * bits
            })
            .collect();
        let reversed = (0..1u64 << bits)
            .map(|v| v.reverse_bits() >> (64 - bits))
            .collect();
        Ok(Self {
            config,
            offsets,
            window_pos,
            reversed,
            bits,
            predictors: (0..per_action * config.num_actions)
                .map(|_| B::new(depth))
                .collect(),
            updates: 0,
            cache: Mutex::new(FxHashMap::default()),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Symbol updates applied so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn predictor(&self, action: ActionId, index: usize) -> &B {
        &self.predictors[action.0 * ((1 << self.bits) - 1) + index]
    }

    /// Tree context of the pixel at `(x, y)`.
    pub fn context(&self, g: &PixelGrid, x: usize, y: usize) -> ContextKey {
        let mut key = [0u64; 4];
        let mut pos = 0;
        for &(dx, dy) in &self.offsets {
            let s = g.get_or(x as isize + dx, y as isize + dy, self.config.padding) as u64;
            for i in (0..self.bits).rev() {
                key[pos >> 6] |= ((s >> i) & 1) << (pos & 63);
                pos += 1;
            }
        }
        key
    }

    /// Raster-packed neighbourhood of every pixel, in raster order. Each
    /// window row is a `width * bits` code with the leftmost cell in the high
    /// bits; rows are concatenated top to bottom. Cheap to build by sliding,
    /// and a bijection of the tree context, so it serves as the cache key.
    fn window_keys(&self, g: &PixelGrid) -> Vec<ContextKey> {
        let nb = self.config.neighborhood;
        let (hw, hh) = (nb.width / 2, nb.height / 2);
        let (gw, gh) = (g.width(), g.height());
        let pw = gw + 2 * hw;
        let mut padded = vec![self.config.padding; pw * (gh + 2 * hh)];
        for y in 0..gh {
            let row = &mut padded[(y + hh) * pw + hw..(y + hh) * pw + hw + gw];
            row.copy_from_slice(&g.cells()[y * gw..(y + 1) * gw]);
        }
        let row_bits = nb.width * self.bits;
        let mask = if row_bits == 64 { !0 } else { (1u64 << row_bits) - 1 };
        let mut keys = vec![[0u64; 4]; gw * gh];
        let mut codes = vec![0u64; nb.height];
        for y in 0..gh {
            for (k, code) in codes.iter_mut().enumerate() {
                let row = &padded[(y + k) * pw..(y + k + 1) * pw];
                *code = row[..nb.width - 1]
                    .iter()
                    .fold(0u64, |c, &s| (c << self.bits) | s as u64);
            }
            for x in 0..gw {
                let key = &mut keys[y * gw + x];
                let mut pos = 0;
                for (k, code) in codes.iter_mut().enumerate() {
                    let s = padded[(y + k) * pw + x + nb.width - 1] as u64;
                    *code = ((*code << self.bits) | s) & mask;
                    push_bits(key, pos, *code, row_bits);
                    pos += row_bits;
                }
            }
        }
        keys
    }

    /// Converts a window key to the nearest-first tree context.
    fn tree_key(&self, window: &ContextKey) -> ContextKey {
        let mut key = [0u64; 4];
        let mut pos = 0;
        for &wp in &self.window_pos {
            let s = get_bits(window, wp, self.bits);
            // most significant symbol bit first
            push_bits(&mut key, pos, self.reversed[s as usize], self.bits);
            pos += self.bits;
        }
        key
    }

    fn compute_dist(&self, action: ActionId, key: &ContextKey) -> SymbolDist {
        let base = action.0 * ((1 << self.bits) - 1);
        let mut dist = [0.0; MAX_CODES];
        // probability of each prefix, level by level
        let mut level = vec![1.0];
        for i in 0..self.bits {
            let mut next = Vec::with_capacity(level.len() * 2);
            for (prefix, &p) in level.iter().enumerate() {
                let q = self.predictors[base + (1 << i) - 1 + prefix].prob_one(key);
                next.push(p * (1.0 - q));
                next.push(p * q);
            }
            level = next;
        }
        let total: f64 = level[..self.config.alphabet].iter().sum();
        for (d, p) in dist.iter_mut().zip(&level[..self.config.alphabet]) {
            *d = p / total;
        }
        dist
    }

    /// Predictive distribution for one pixel given its tree context;
    /// strictly positive on the alphabet.
    pub fn predict_pixel(&self, action: ActionId, key: &ContextKey) -> SymbolDist {
        self.compute_dist(action, key)
    }

    /// Predictive distribution for every pixel of `g`, in raster order.
    pub fn predict_grid(&self, g: &PixelGrid, action: ActionId) -> Vec<SymbolDist> {
        let mut cache = self.cache.lock().expect("prediction cache poisoned");
        self.window_keys(g)
            .iter()
            .map(|w| self.cached(&mut cache, action, w))
            .collect()
    }

    fn cached(
        &self,
        cache: &mut FxHashMap<(usize, ContextKey), SymbolDist>,
        action: ActionId,
        window: &ContextKey,
    ) -> SymbolDist {
        if let Some(d) = cache.get(&(action.0, *window)) {
            return *d;
        }
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        let d = self.compute_dist(action, &self.tree_key(window));
        cache.insert((action.0, *window), d);
        d
    }

    /// Learns one pixel. Returns the bitwise code length of `symbol` before
    /// the update, in nats. The code length ignores renormalization over the
    /// alphabet, so it bounds `-ln` of the predicted probability from above.
    pub fn update(&mut self, action: ActionId, key: &ContextKey, symbol: Symbol) -> f64 {
        let loss = self.learn(action, key, symbol);
        self.clear_cache();
        loss
    }

    fn learn(&mut self, action: ActionId, key: &ContextKey, symbol: Symbol) -> f64 {
        assert!((symbol as usize) < self.config.alphabet, "symbol {symbol} outside alphabet");
        let base = action.0 * ((1 << self.bits) - 1);
        let mut prefix = 0usize;
        let mut loss = 0.0;
        for i in 0..self.bits {
            let bit = (symbol >> (self.bits - 1 - i)) & 1 == 1;
            loss -= self.predictors[base + (1 << i) - 1 + prefix].update(key, bit).ln();
            prefix = (prefix << 1) | bit as usize;
        }
        self.updates += 1;
        loss
    }

    fn clear_cache(&mut self) {
        let cache = self.cache.get_mut().expect("prediction cache poisoned");
        if !cache.is_empty() {
            cache.clear();
        }
    }

    /// Trains on every pixel of one observed transition, in raster order.
    /// Returns the summed per-pixel code lengths (see [`Self::update`]). Each
    /// pixel is coded after the earlier pixels were learned, so the total can
    /// fall below `-ln` of the grid probability taken before the call.
    pub fn update_transition(&mut self, g: &PixelGrid, action: ActionId, next: &PixelGrid) -> f64 {
        assert_eq!((g.width(), g.height()), (next.width(), next.height()));
        let mut loss = 0.0;
        for (w, &sym) in self.window_keys(g).iter().zip(next.cells()) {
            let key = self.tree_key(w);
            loss += self.learn(action, &key, sym);
        }
        self.clear_cache();
        loss
    }

    /// Samples every pixel independently, one uniform draw per pixel in raster
    /// order.
    pub fn sample_next_grid<R: Rng + ?Sized>(
        &self,
        g: &PixelGrid,
        action: ActionId,
        rng: &mut R,
    ) -> PixelGrid {
        let mut cache = self.cache.lock().expect("prediction cache poisoned");
        let alphabet = self.config.alphabet;
        let cells = self
            .window_keys(g)
            .iter()
            .map(|w| {
                let dist = self.cached(&mut cache, action, w);
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (s, &p) in dist[..alphabet].iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return s as Symbol;
                    }
                }
                (alphabet - 1) as Symbol
            })
            .collect();
        PixelGrid::from_cells(g.width(), g.height(), cells).expect("alphabet symbols are storable")
    }

    /// `ln P̂(next | g, action)`.
    pub fn log_prob(&self, g: &PixelGrid, action: ActionId, next: &PixelGrid) -> f64 {
        self.predict_grid(g, action)
            .iter()
            .zip(next.cells())
            .map(|(d, &s)| d[s as usize].ln())
            .sum()
    }

    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        out.push_str(SNAPSHOT_MAGIC);
        out.push('\n');
        out.push_str(&format!("predictor {}\n", B::NAME));
        out.push_str(&format!(
            "neighborhood {} {}\n",
            c.neighborhood.width, c.neighborhood.height
        ));
        out.push_str(&format!(
            "alphabet {} padding {} actions {}\n",
            c.alphabet, c.padding, c.num_actions
        ));
        out.push_str(&format!("updates {}\n", self.updates));
        for p in &self.predictors {
            p.write_snapshot(&mut out);
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self, SnapshotError> {
        let mut lines = text.lines();
        let mut next = || lines.next().ok_or(SnapshotError::Truncated);
        let magic = next()?;
        if magic != SNAPSHOT_MAGIC {
            return Err(SnapshotError::Version(magic.to_string()));
        }
        let pred = next()?;
        let found = pred.strip_prefix("predictor ").unwrap_or(pred);
        if found != B::NAME {
            return Err(SnapshotError::Predictor {
                expected: B::NAME.to_string(),
                found: found.to_string(),
            });
        }
        let fields = |line: &str, n: usize| -> Result<Vec<u64>, SnapshotError> {
            let v: Vec<u64> = line
                .split_whitespace()
                .skip(1)
                .step_by(2)
                .map(|s| s.parse())
                .collect::<Result<_, _>>()
                .map_err(|_| SnapshotError::Malformed(line.to_string()))?;
            if v.len() != n {
                return Err(SnapshotError::Malformed(line.to_string()));
            }
            Ok(v)
        };
        let nb = next()?;
        let wh: Vec<usize> = nb
            .split_whitespace()
            .skip(1)
            .map(|s| s.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| SnapshotError::Malformed(nb.to_string()))?;
        if wh.len() != 2 {
            return Err(SnapshotError::Malformed(nb.to_string()));
        }
        let a = fields(next()?, 3)?;
        let u = fields(next()?, 1)?;
        let config = ModelConfig {
            neighborhood: NeighborhoodSpec::new(wh[0], wh[1])?,
            alphabet: a[0] as usize,
            padding: a[1] as Symbol,
            num_actions: a[2] as usize,
        };
        let mut model = Self::new(config)?;
        model.updates = u[0];
        for p in model.predictors.iter_mut() {
            *p = B::read_snapshot(&mut lines)?;
        }
        Ok(model)
    }
}

/// Dynamics used along a rollout: one shared model, or a separate model for
/// each rollout step `1..T` where step `t`'s model predicts from step `t`'s
/// (model-generated) input.
#[derive(Clone, Debug)]
pub struct UnrolledModel<B: BitPredictor = ContextTree> {
    models: Vec<FactoredModel<B>>,
    shared: bool,
}

impl<B: BitPredictor> UnrolledModel<B> {
    pub fn shared(model: FactoredModel<B>) -> Self {
        Self {
            models: vec![model],
            shared: true,
        }
    }

    /// `horizon - 1` independent models.
    pub fn unrolled(config: ModelConfig, horizon: usize) -> Result<Self, DynamicsError> {
        assert!(horizon >= 2, "an unrolled model needs horizon >= 2");
        Ok(Self {
            models: (1..horizon)
                .map(|_| FactoredModel::new(config))
                .collect::<Result<_, _>>()?,
            shared: false,
        })
    }

    pub fn is_unrolled(&self) -> bool {
        !self.shared
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    fn index(&self, t: usize) -> usize {
        assert!(t >= 1, "rollout steps are 1-based");
        if self.shared {
            0
        } else {
            (t - 1).min(self.models.len() - 1)
        }
    }

    /// Model producing the state after rollout step `t`.
    pub fn at(&self, t: usize) -> &FactoredModel<B> {
        &self.models[self.index(t)]
    }

    pub fn at_mut(&mut self, t: usize) -> &mut FactoredModel<B> {
        let i = self.index(t);
        &mut self.models[i]
    }

    pub fn total_updates(&self) -> u64 {
        self.models.iter().map(|m| m.updates()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn binary(w: usize, h: usize) -> ModelConfig {
        ModelConfig {
            neighborhood: NeighborhoodSpec::new(w, h).unwrap(),
            alphabet: 2,
            padding: 0,
            num_actions: 1,
        }
    }

    #[test]
    fn neighborhood_validation_and_order() {
        assert!(NeighborhoodSpec::new(4, 3).is_err());
        assert!(NeighborhoodSpec::new(0, 1).is_err());
        let o = NeighborhoodSpec::new(3, 3).unwrap().offsets();
        assert_eq!(o[0], (0, 0));
        assert_eq!(&o[1..5], &[(0, -1), (-1, 0), (1, 0), (0, 1)]);
        assert_eq!(o.len(), 9);
    }

    #[test]
    fn shooter_config_bits() {
        let c = ModelConfig::shooter(NeighborhoodSpec::new(7, 7).unwrap());
        assert_eq!(c.symbol_bits(), 3);
        assert_eq!(c.context_bits(), 147);
        assert_eq!(binary(1, 1).symbol_bits(), 1);
        let too_big = ModelConfig::shooter(NeighborhoodSpec::new(11, 9).unwrap());
        assert!(matches!(too_big.validate(), Err(DynamicsError::ContextTooLong(297))));
    }

    #[test]
    fn fresh_model_is_uniform() {
        let m = CtsModel::new(ModelConfig::shooter(NeighborhoodSpec::new(7, 5).unwrap())).unwrap();
        let g = PixelGrid::filled(5, 4, grid::EMPTY);
        let d = m.predict_pixel(ActionId(2), &m.context(&g, 1, 1));
        for &p in &d[..7] {
            assert!((p - 1.0 / 7.0).abs() < 1e-15);
        }
        assert_eq!(d[7], 0.0);
    }

    #[test]
    fn single_binary_pixel_log_prob() {
        let m = CtsModel::new(binary(1, 1)).unwrap();
        let g = PixelGrid::from_cells(1, 1, vec![1]).unwrap();
        let n = PixelGrid::from_cells(1, 1, vec![0]).unwrap();
        assert!((m.log_prob(&g, ActionId(0), &n) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn context_packs_msb_first_nearest_first() {
        let c = ModelConfig {
            neighborhood: NeighborhoodSpec::new(3, 1).unwrap(),
            alphabet: 7,
            padding: grid::BORDER,
            num_actions: 1,
        };
        let m = CtsModel::new(c).unwrap();
        let g = PixelGrid::from_cells(2, 1, vec![grid::BULLET, grid::SHIP]).unwrap();
        // order: centre, left (border), right
        let k = m.context(&g, 0, 0);
        let bits: Vec<usize> = (0..9).map(|d| cts::key_bit(&k, d)).collect();
        assert_eq!(bits, vec![0, 1, 0, 1, 1, 1, 0, 0, 1]);
    }

    #[test]
    fn window_keys_agree_with_direct_contexts() {
        let m = CtsModel::new(ModelConfig::shooter(NeighborhoodSpec::new(7, 5).unwrap())).unwrap();
        let env = crate::shooter::Shooter::new(false);
        let mut s = env.initial_state();
        for a in [3, 1, 3, 0, 0, 2, 2, 3, 0] {
            s = env.next_state(&s, ActionId(a));
        }
        let g = env.render_state(&s);
        let windows = m.window_keys(&g);
        for y in 0..g.height() {
            for x in 0..g.width() {
                assert_eq!(m.tree_key(&windows[y * g.width() + x]), m.context(&g, x, y));
            }
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let m = CtsModel::new(ModelConfig::shooter(NeighborhoodSpec::new(3, 3).unwrap())).unwrap();
        let g = PixelGrid::filled(6, 4, grid::EMPTY);
        let a = m.sample_next_grid(&g, ActionId(1), &mut seed::rng(4));
        let b = m.sample_next_grid(&g, ActionId(1), &mut seed::rng(4));
        assert_eq!(a, b);
    }

    #[test]
    fn unrolled_indexing() {
        let c = binary(1, 1);
        let u = UnrolledModel::<ContextTree>::unrolled(c, 4).unwrap();
        assert_eq!(u.len(), 3);
        assert!(u.is_unrolled());
        let s = UnrolledModel::shared(CtsModel::new(c).unwrap());
        assert_eq!(s.len(), 1);
        assert!(std::ptr::eq(s.at(1), s.at(7)));
    }
}
