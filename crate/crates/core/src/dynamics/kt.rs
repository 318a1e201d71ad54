//! Plain KT estimator per full context, with no tree and no switching. Kept
//! as an ablation baseline for [`super::ContextTree`].

use rustc_hash::FxHashMap;

use super::cts::kt_prob;
use super::{BitPredictor, ContextKey, SnapshotError};

#[derive(Clone, Debug, PartialEq)]
pub struct KtContextTable {
    depth: usize,
    counts: FxHashMap<ContextKey, (u32, u32)>,
}

impl KtContextTable {
    pub fn contexts(&self) -> usize {
        self.counts.len()
    }
}

impl BitPredictor for KtContextTable {
    const NAME: &'static str = "kt";

    fn new(depth: usize) -> Self {
        Self {
            depth,
            counts: FxHashMap::default(),
        }
    }

    fn prob_one(&self, key: &ContextKey) -> f64 {
        let (z, o) = self.counts.get(key).copied().unwrap_or((0, 0));
        kt_prob(z, o, true)
    }

    fn update(&mut self, key: &ContextKey, bit: bool) -> f64 {
        let e = self.counts.entry(*key).or_insert((0, 0));
        let p = kt_prob(e.0, e.1, bit);
        if bit {
            e.1 += 1;
        } else {
            e.0 += 1;
        }
        p
    }

    fn write_snapshot(&self, out: &mut String) {
        use std::fmt::Write;
        let mut rows: Vec<_> = self.counts.iter().collect();
        rows.sort();
        let _ = writeln!(out, "table {} {}", self.depth, rows.len());
        for (k, (z, o)) in rows {
            let _ = writeln!(
                out,
                "k {:016x} {:016x} {:016x} {:016x} {z} {o}",
                k[0], k[1], k[2], k[3]
            );
        }
    }

    fn read_snapshot<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Result<Self, SnapshotError> {
        let head = lines.next().ok_or(SnapshotError::Truncated)?;
        let f: Vec<&str> = head.split_whitespace().collect();
        let bad = |l: &str| SnapshotError::Malformed(l.to_string());
        if f.len() != 3 || f[0] != "table" {
            return Err(bad(head));
        }
        let depth = f[1].parse().map_err(|_| bad(head))?;
        let n: usize = f[2].parse().map_err(|_| bad(head))?;
        let mut t = Self::new(depth);
        for _ in 0..n {
            let line = lines.next().ok_or(SnapshotError::Truncated)?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 7 || f[0] != "k" {
                return Err(bad(line));
            }
            let mut key = [0u64; 4];
            for (k, s) in key.iter_mut().zip(&f[1..5]) {
                *k = u64::from_str_radix(s, 16).map_err(|_| bad(line))?;
            }
            let z = f[5].parse().map_err(|_| bad(line))?;
            let o = f[6].parse().map_err(|_| bad(line))?;
            t.counts.insert(key, (z, o));
        }
        Ok(t)
    }
}
