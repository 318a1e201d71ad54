//! Binary context tree switching over a fixed-depth context.
//!
//! Node `n` at depth `d` covers every context sharing the first `d` bits. It
//! mixes its own KT estimate with the mixture of the child selected by bit
//! `d`, using a normalised switching weight `w` (prior 1/2) updated with rate
//! `α = 1/(n+1)` where `n` counts the node's updates so far, this one included.
//!
//! Chains visited by a single context are stored compressed as a tail: every
//! node on such a chain has the same counts, and because its KT estimate
//! equals its child's prediction the switching weight never leaves 1/2, so
//! the whole chain predicts like one KT estimator. A tail is split into
//! explicit nodes the first time a different context diverges inside it.

use super::{BitPredictor, ContextKey, SnapshotError, MAX_CONTEXT_BITS};

const NIL: u32 = u32::MAX;
const TAIL: u32 = 1 << 31;

#[derive(Clone, Debug, PartialEq)]
struct Inner {
    zeros: u32,
    ones: u32,
    w: f64,
    child: [u32; 2],
}

#[derive(Clone, Debug, PartialEq)]
struct Tail {
    zeros: u32,
    ones: u32,
    depth: u32,
    key: ContextKey,
}

/// KT probability of `bit` after `zeros` zeros and `ones` ones.
pub fn kt_prob(zeros: u32, ones: u32, bit: bool) -> f64 {
    let c = if bit { ones } else { zeros };
    (c as f64 + 0.5) / ((zeros + ones) as f64 + 1.0)
}

#[inline]
pub(crate) fn key_bit(key: &ContextKey, d: usize) -> usize {
    ((key[d >> 6] >> (d & 63)) & 1) as usize
}

/// First bit position in `from..to` where the keys differ.
fn first_diff(a: &ContextKey, b: &ContextKey, from: usize, to: usize) -> Option<usize> {
    let mut word = from >> 6;
    let mut mask = !0u64 << (from & 63);
    while word * 64 < to {
        let x = (a[word] ^ b[word]) & mask;
        if x != 0 {
            let j = word * 64 + x.trailing_zeros() as usize;
            return (j < to).then_some(j);
        }
        word += 1;
        mask = !0;
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContextTree {
    depth: usize,
    root: u32,
    inner: Vec<Inner>,
    tails: Vec<Tail>,
}

impl ContextTree {
    pub fn node_count(&self) -> usize {
        self.inner.len() + self.tails.len()
    }

    /// KT counts `(zeros, ones)` at the root, i.e. over all updates.
    pub fn root_counts(&self) -> (u32, u32) {
        match self.root {
            NIL => (0, 0),
            r if r & TAIL != 0 => {
                let t = &self.tails[(r & !TAIL) as usize];
                (t.zeros, t.ones)
            }
            r => {
                let n = &self.inner[r as usize];
                (n.zeros, n.ones)
            }
        }
    }

    fn set_slot(&mut self, parent: Option<(u32, usize)>, value: u32) {
        match parent {
            None => self.root = value,
            Some((p, b)) => self.inner[p as usize].child[b] = value,
        }
    }

    /// Replaces the tail at `slot` (depth `d`) by explicit nodes down to the
    /// divergence point `j`; returns the first new node.
    fn split_tail(&mut self, tail: u32, d: usize, j: usize, key: &ContextKey) -> u32 {
        let ti = (tail & !TAIL) as usize;
        let (zeros, ones, tkey) = {
            let t = &self.tails[ti];
            (t.zeros, t.ones, t.key)
        };
        let first = self.inner.len() as u32;
        for depth in d..=j {
            let mut child = [NIL; 2];
            if depth < j {
                child[key_bit(&tkey, depth)] = self.inner.len() as u32 + 1;
            } else {
                child[key_bit(&tkey, j)] = tail;
                debug_assert_ne!(key_bit(&tkey, j), key_bit(key, j));
            }
            self.inner.push(Inner {
                zeros,
                ones,
                w: 0.5,
                child,
            });
        }
        self.tails[ti].depth = j as u32 + 1;
        first
    }
}

impl BitPredictor for ContextTree {
    const NAME: &'static str = "cts";

    fn new(depth: usize) -> Self {
        assert!(depth <= 256, "context depth {depth} exceeds key capacity");
        Self {
            depth,
            root: NIL,
            inner: Vec::new(),
            tails: Vec::new(),
        }
    }

    fn prob_one(&self, key: &ContextKey) -> f64 {
        // unrolled form of m_d = w_d p_d + (1 - w_d) m_{d+1}
        let mut acc = 0.0;
        let mut coef = 1.0;
        let mut r = self.root;
        let mut d = 0;
        let m = loop {
            if r == NIL {
                break 0.5;
            }
            if r & TAIL != 0 {
                let t = &self.tails[(r & !TAIL) as usize];
                let p = kt_prob(t.zeros, t.ones, true);
                break match first_diff(&t.key, key, d, self.depth) {
                    None => p,
                    // shared chain of j-d+1 nodes above a fresh child
                    Some(j) => p + (0.5 - p) * 0.5f64.powi((j - d + 1) as i32),
                };
            }
            let n = &self.inner[r as usize];
            let p = kt_prob(n.zeros, n.ones, true);
            if d == self.depth {
                break p;
            }
            acc += coef * n.w * p;
            coef *= 1.0 - n.w;
            r = n.child[key_bit(key, d)];
            d += 1;
        };
        acc + coef * m
    }

    fn update(&mut self, key: &ContextKey, bit: bool) -> f64 {
        let mut path = [0u32; MAX_CONTEXT_BITS];
        let mut len = 0;
        let mut parent: Option<(u32, usize)> = None;
        let mut r = self.root;
        let mut d = 0;
        let tail = loop {
            if r == NIL {
                let t = TAIL | self.tails.len() as u32;
                self.tails.push(Tail {
                    zeros: 0,
                    ones: 0,
                    depth: d as u32,
                    key: *key,
                });
                self.set_slot(parent, t);
                break t;
            }
            if r & TAIL != 0 {
                let tkey = self.tails[(r & !TAIL) as usize].key;
                match first_diff(&tkey, key, d, self.depth) {
                    None => break r,
                    Some(j) => {
                        let first = self.split_tail(r, d, j, key);
                        self.set_slot(parent, first);
                        r = first;
                        continue;
                    }
                }
            }
            debug_assert!(d < self.depth, "inner nodes sit above the leaves");
            path[len] = r;
            len += 1;
            let b = key_bit(key, d);
            parent = Some((r, b));
            r = self.inner[r as usize].child[b];
            d += 1;
        };

        let t = &mut self.tails[(tail & !TAIL) as usize];
        let mut m = kt_prob(t.zeros, t.ones, bit);
        if bit {
            t.ones += 1;
        } else {
            t.zeros += 1;
        }
        for &i in path[..len].iter().rev() {
            let n = &mut self.inner[i as usize];
            let pa = kt_prob(n.zeros, n.ones, bit);
            let mix = n.w * pa + (1.0 - n.w) * m;
            let alpha = 1.0 / ((n.zeros + n.ones) as f64 + 2.0);
            n.w = ((1.0 - alpha) * n.w * pa + alpha * (1.0 - n.w) * m) / mix;
            if bit {
                n.ones += 1;
            } else {
                n.zeros += 1;
            }
            m = mix;
        }
        m
    }

    fn write_snapshot(&self, out: &mut String) {
        use std::fmt::Write;
        let _ = writeln!(
            out,
            "tree {} {} {} {}",
            self.depth,
            self.root,
            self.inner.len(),
            self.tails.len()
        );
        for n in &self.inner {
            let _ = writeln!(
                out,
                "i {} {} {:016x} {} {}",
                n.zeros,
                n.ones,
                n.w.to_bits(),
                n.child[0],
                n.child[1]
            );
        }
        for t in &self.tails {
            let _ = writeln!(
                out,
                "t {} {} {} {:016x} {:016x} {:016x} {:016x}",
                t.zeros, t.ones, t.depth, t.key[0], t.key[1], t.key[2], t.key[3]
            );
        }
    }

    fn read_snapshot<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Result<Self, SnapshotError> {
        let head = lines.next().ok_or(SnapshotError::Truncated)?;
        let f: Vec<&str> = head.split_whitespace().collect();
        if f.len() != 5 || f[0] != "tree" {
            return Err(SnapshotError::Malformed(head.to_string()));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| SnapshotError::Malformed(head.to_string()));
        let depth = num(f[1])? as usize;
        let root = num(f[2])? as u32;
        let (ni, nt) = (num(f[3])? as usize, num(f[4])? as usize);
        let mut tree = ContextTree::new(depth);
        tree.root = root;
        for _ in 0..ni {
            let line = lines.next().ok_or(SnapshotError::Truncated)?;
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || SnapshotError::Malformed(line.to_string());
            if f.len() != 6 || f[0] != "i" {
                return Err(bad());
            }
            tree.inner.push(Inner {
                zeros: f[1].parse().map_err(|_| bad())?,
                ones: f[2].parse().map_err(|_| bad())?,
                w: f64::from_bits(u64::from_str_radix(f[3], 16).map_err(|_| bad())?),
                child: [f[4].parse().map_err(|_| bad())?, f[5].parse().map_err(|_| bad())?],
            });
        }
        for _ in 0..nt {
            let line = lines.next().ok_or(SnapshotError::Truncated)?;
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || SnapshotError::Malformed(line.to_string());
            if f.len() != 8 || f[0] != "t" {
                return Err(bad());
            }
            let mut key = [0u64; 4];
            for (k, s) in key.iter_mut().zip(&f[4..8]) {
                *k = u64::from_str_radix(s, 16).map_err(|_| bad())?;
            }
            tree.tails.push(Tail {
                zeros: f[1].parse().map_err(|_| bad())?,
                ones: f[2].parse().map_err(|_| bad())?,
                depth: f[3].parse().map_err(|_| bad())?,
                key,
            });
        }
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    /// Uncompressed reference: every node on every visited path is explicit.
    #[derive(Default)]
    struct NaiveCts {
        depth: usize,
        nodes: HashMap<(usize, Vec<usize>), (u32, u32, f64)>,
    }

    impl NaiveCts {
        fn prefix(key: &ContextKey, d: usize) -> Vec<usize> {
            (0..d).map(|i| key_bit(key, i)).collect()
        }

        fn prob_one(&self, key: &ContextKey) -> f64 {
            let mut m = 0.5;
            for d in (0..=self.depth).rev() {
                if let Some(&(z, o, w)) = self.nodes.get(&(d, Self::prefix(key, d))) {
                    let p = kt_prob(z, o, true);
                    m = if d == self.depth { p } else { w * p + (1.0 - w) * m };
                } else {
                    m = 0.5;
                }
            }
            m
        }

        fn update(&mut self, key: &ContextKey, bit: bool) -> f64 {
            let mut m = 0.5;
            for d in (0..=self.depth).rev() {
                let e = self
                    .nodes
                    .entry((d, Self::prefix(key, d)))
                    .or_insert((0, 0, 0.5));
                let pa = kt_prob(e.0, e.1, bit);
                let mix = if d == self.depth {
                    pa
                } else {
                    let mix = e.2 * pa + (1.0 - e.2) * m;
                    let alpha = 1.0 / ((e.0 + e.1) as f64 + 2.0);
                    e.2 = ((1.0 - alpha) * e.2 * pa + alpha * (1.0 - e.2) * m) / mix;
                    mix
                };
                if bit {
                    e.1 += 1;
                } else {
                    e.0 += 1;
                }
                m = mix;
            }
            m
        }
    }

    fn key_from_bits(bits: &[bool]) -> ContextKey {
        let mut k = [0u64; 4];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                k[i >> 6] |= 1 << (i & 63);
            }
        }
        k
    }

    #[test]
    fn kt_after_one_zero() {
        assert_eq!(kt_prob(1, 0, false), 0.75);
        assert_eq!(kt_prob(0, 0, true), 0.5);
    }

    #[test]
    fn fresh_tree_is_uniform() {
        let t = ContextTree::new(12);
        assert_eq!(t.prob_one(&[5, 0, 0, 0]), 0.5);
    }

    #[test]
    fn first_diff_spans_words() {
        let a = [0u64, 0, 0, 0];
        let mut b = a;
        b[1] = 1 << 3;
        assert_eq!(first_diff(&a, &b, 0, 200), Some(67));
        assert_eq!(first_diff(&a, &b, 68, 200), None);
        assert_eq!(first_diff(&a, &b, 0, 67), None);
    }

    #[test]
    fn update_raises_probability_of_observed_bit() {
        let mut t = ContextTree::new(6);
        let k = [0b101101, 0, 0, 0];
        let before = t.prob_one(&k);
        t.update(&k, true);
        assert!(t.prob_one(&k) > before);
        assert_eq!(t.root_counts(), (0, 1));
    }

    #[test]
    fn deterministic_stream_converges() {
        let mut t = ContextTree::new(8);
        for i in 0..4000u64 {
            let k = [i % 16, 0, 0, 0];
            t.update(&k, (i % 16) & 1 == 1);
        }
        for c in 0..16u64 {
            let p1 = t.prob_one(&[c, 0, 0, 0]);
            let p = if c & 1 == 1 { p1 } else { 1.0 - p1 };
            assert!(p > 0.99, "context {c}: {p}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn compressed_tree_matches_naive_reference(
            depth in 1usize..20,
            stream in proptest::collection::vec((proptest::collection::vec(any::<bool>(), 20), any::<bool>()), 1..80),
            probes in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 20), 1..8),
        ) {
            let mut fast = ContextTree::new(depth);
            let mut slow = NaiveCts { depth, ..Default::default() };
            for (bits, b) in &stream {
                let k = key_from_bits(&bits[..depth]);
                let p1 = fast.prob_one(&k);
                prop_assert!((p1 - slow.prob_one(&k)).abs() < 1e-12);
                let expected = if *b { p1 } else { 1.0 - p1 };
                let (pf, ps) = (fast.update(&k, *b), slow.update(&k, *b));
                prop_assert!((pf - expected).abs() < 1e-12, "{pf} vs {expected}");
                prop_assert!((ps - expected).abs() < 1e-12);
            }
            for bits in probes.iter().chain(stream.iter().map(|(b, _)| b)) {
                let k = key_from_bits(&bits[..depth]);
                let (p, q) = (fast.prob_one(&k), slow.prob_one(&k));
                prop_assert!((p - q).abs() < 1e-12, "{p} vs {q}");
                prop_assert!(p > 0.0 && p < 1.0);
            }
        }

        #[test]
        fn snapshot_round_trip(stream in proptest::collection::vec((any::<u64>(), any::<bool>()), 0..60)) {
            let mut t = ContextTree::new(40);
            for (k, b) in &stream {
                t.update(&[k & ((1 << 40) - 1), 0, 0, 0], *b);
            }
            let mut s = String::new();
            t.write_snapshot(&mut s);
            let back = ContextTree::read_snapshot(&mut s.lines()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
