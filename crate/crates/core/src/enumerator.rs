//! Brute-force enumeration of domain wall configurations.
//!
//! Edges are stored as bit words. Horizontal edge `h(i, j)` sits in row `i`
//! to the left of vertex `(i, j)` (so `j = N` is the right boundary) and is
//! set when its arrow points right. Vertical edge `v(i, j)` sits in column
//! `j` above vertex `(i, j)` (so `i = N` is the bottom boundary) and is set
//! when its arrow points up.
//!
//! Vertex types, left/right/top/bottom arrows:
//!
//! ```text
//!   1        2        3        4        5        6
//!   ↑        ↓        ↓        ↑        ↓        ↑
//! → · →    ← · ←    → · →    ← · ←    ← · →    → · ←
//!   ↑        ↓        ↓        ↑        ↑        ↓
//! ```
//!
//! Types 5 and 6 map to the `+1` and `-1` entries of the alternating sign
//! matrix.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{powi, Scalar};

pub const N_MAX_DEFAULT: usize = 8;
const N_HARD_LIMIT: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Transition {
    /// Horizontal edges of the row, bit `j` for `j = 0..=N`.
    hrow: u16,
    /// Vertical edges below the row.
    next: u16,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    n: usize,
    h: Vec<u16>,
    v: Vec<u16>,
}

impl Configuration {
    pub fn size(&self) -> usize {
        self.n
    }

    /// Arrow on horizontal edge `(i, j)` points right.
    pub fn h(&self, i: usize, j: usize) -> bool {
        self.h[i] >> j & 1 == 1
    }

    /// Arrow on vertical edge `(i, j)` points up.
    pub fn v(&self, i: usize, j: usize) -> bool {
        self.v[i] >> j & 1 == 1
    }

    /// Builds a configuration from explicit edge arrays and validates the
    /// ice rule and domain wall boundary.
    pub fn from_edges(h: &[Vec<bool>], v: &[Vec<bool>]) -> Option<Self> {
        let n = h.len();
        if n == 0 || n > N_HARD_LIMIT || v.len() != n + 1 {
            return None;
        }
        if h.iter().any(|r| r.len() != n + 1) || v.iter().any(|r| r.len() != n) {
            return None;
        }
        let pack = |bits: &[bool]| {
            bits.iter()
                .enumerate()
                .fold(0u16, |w, (j, &b)| w | (b as u16) << j)
        };
        let cfg = Configuration {
            n,
            h: h.iter().map(|r| pack(r)).collect(),
            v: v.iter().map(|r| pack(r)).collect(),
        };
        cfg.is_valid_dwbc().then_some(cfg)
    }

    pub fn is_valid_dwbc(&self) -> bool {
        let n = self.n;
        let full = (1u16 << n) - 1;
        if self.v[0] != 0 || self.v[n] != full {
            return false;
        }
        for i in 0..n {
            if self.h(i, 0) || !self.h(i, n) {
                return false;
            }
            for j in 0..n {
                if vertex_kind(self.h(i, j), self.h(i, j + 1), self.v(i, j), self.v(i + 1, j))
                    .is_none()
                {
                    return false;
                }
            }
        }
        true
    }
}

/// Type of a vertex from its left, right, top and bottom arrows, `None`
/// when the ice rule fails.
fn vertex_kind(l: bool, r: bool, t: bool, b: bool) -> Option<u8> {
    match (l, r, t, b) {
        (true, true, true, true) => Some(1),
        (false, false, false, false) => Some(2),
        (true, true, false, false) => Some(3),
        (false, false, true, true) => Some(4),
        (false, true, false, true) => Some(5),
        (true, false, true, false) => Some(6),
        _ => None,
    }
}

pub fn vertex_type(cfg: &Configuration, i: usize, j: usize) -> u8 {
    vertex_kind(cfg.h(i, j), cfg.h(i, j + 1), cfg.v(i, j), cfg.v(i + 1, j))
        .expect("configuration violates the ice rule")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TypeCounts(pub [u32; 6]);

impl TypeCounts {
    /// `N_k` for `k` in `1..=6`.
    pub fn get(&self, k: usize) -> u32 {
        self.0[k - 1]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// The four conservation laws on an `N x N` domain wall lattice.
    pub fn satisfies_conservation(&self, n: usize) -> bool {
        let c = &self.0;
        self.total() as usize == n * n
            && c[4] as i64 - c[5] as i64 == n as i64
            && c[0] == c[1]
            && c[2] == c[3]
    }
}

pub fn type_counts(cfg: &Configuration) -> TypeCounts {
    let mut counts = [0u32; 6];
    for i in 0..cfg.n {
        for j in 0..cfg.n {
            counts[vertex_type(cfg, i, j) as usize - 1] += 1;
        }
    }
    TypeCounts(counts)
}

/// Fixed by the 180 degree rotation, which maps an edge to its image and
/// reverses the arrow.
pub fn is_half_turn_symmetric(cfg: &Configuration) -> bool {
    let n = cfg.n;
    for i in 0..n {
        for j in 0..=n {
            if cfg.h(i, j) == cfg.h(n - 1 - i, n - j) {
                return false;
            }
        }
    }
    for i in 0..=n {
        for j in 0..n {
            if cfg.v(i, j) == cfg.v(n - i, n - 1 - j) {
                return false;
            }
        }
    }
    true
}

pub fn config_to_asm(cfg: &Configuration) -> Vec<Vec<i8>> {
    (0..cfg.n)
        .map(|i| {
            (0..cfg.n)
                .map(|j| match vertex_type(cfg, i, j) {
                    5 => 1,
                    6 => -1,
                    _ => 0,
                })
                .collect()
        })
        .collect()
}

/// One line of the dump format: row-major entries separated by commas.
pub fn asm_dump_line(asm: &[Vec<i8>]) -> String {
    asm.iter()
        .flatten()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Rows and columns sum to one and their nonzero entries alternate.
pub fn is_alternating_sign_matrix(a: &[Vec<i8>]) -> bool {
    let n = a.len();
    let line_ok = |it: &mut dyn Iterator<Item = i8>| {
        let mut partial = 0i32;
        for x in it {
            if !(-1..=1).contains(&x) {
                return false;
            }
            partial += x as i32;
            if !(0..=1).contains(&partial) {
                return false;
            }
        }
        partial == 1
    };
    a.iter().all(|r| r.len() == n)
        && (0..n).all(|i| line_ok(&mut a[i].iter().copied()))
        && (0..n).all(|j| line_ok(&mut (0..n).map(|i| a[i][j])))
}

/// Number of `n x n` alternating sign matrices, `prod_{k<n} (3k+1)!/(n+k)!`.
pub fn asm_count(n: usize) -> u128 {
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for k in 0..n {
        for m in 1..=(3 * k + 1) {
            num *= m as u64;
        }
        for m in 1..=(n + k) {
            den *= m as u64;
        }
    }
    (num / den).to_u128().unwrap_or(u128::MAX)
}

fn row_transitions(n: usize, top: u16) -> Vec<Transition> {
    fn walk(n: usize, top: u16, j: usize, l: bool, hrow: u16, next: u16, out: &mut Vec<Transition>) {
        if j == n {
            if l {
                out.push(Transition { hrow, next });
            }
            return;
        }
        let t = top >> j & 1 == 1;
        for (r, b) in [(true, true), (true, false), (false, true), (false, false)] {
            if vertex_kind(l, r, t, b).is_some() {
                walk(
                    n,
                    top,
                    j + 1,
                    r,
                    hrow | (r as u16) << (j + 1),
                    next | (b as u16) << j,
                    out,
                );
            }
        }
    }
    let mut out = Vec::new();
    walk(n, top, 0, false, 0, 0, &mut out);
    out
}

fn transition_table(n: usize) -> Arc<Vec<Vec<Transition>>> {
    Arc::new((0..1u32 << n).map(|w| row_transitions(n, w as u16)).collect())
}

/// Depth-first stream of domain wall configurations, one row of vertices
/// per level.
pub struct DwbcIter {
    n: usize,
    table: Arc<Vec<Vec<Transition>>>,
    base: usize,
    rows: Vec<Transition>,
    cursor: Vec<usize>,
    done: bool,
}

impl DwbcIter {
    fn new(n: usize, table: Arc<Vec<Vec<Transition>>>, prefix: Vec<Transition>) -> Self {
        DwbcIter {
            n,
            table,
            base: prefix.len(),
            rows: prefix,
            cursor: Vec::new(),
            done: false,
        }
    }

    fn materialize(&self) -> Configuration {
        let mut v = Vec::with_capacity(self.n + 1);
        v.push(0);
        v.extend(self.rows.iter().map(|r| r.next));
        Configuration {
            n: self.n,
            h: self.rows.iter().map(|r| r.hrow).collect(),
            v,
        }
    }
}

impl Iterator for DwbcIter {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        while !self.done {
            let depth = self.rows.len();
            if depth == self.n {
                let cfg = self.materialize();
                if depth == self.base {
                    self.done = true;
                } else {
                    self.rows.pop();
                }
                return Some(cfg);
            }
            let word = self.rows.last().map_or(0, |r| r.next) as usize;
            let level = depth - self.base;
            if self.cursor.len() == level {
                self.cursor.push(0);
            }
            let choices = &self.table[word];
            if self.cursor[level] < choices.len() {
                let tr = choices[self.cursor[level]];
                self.cursor[level] += 1;
                self.rows.push(tr);
            } else {
                self.cursor.pop();
                if depth == self.base {
                    self.done = true;
                } else {
                    self.rows.pop();
                }
            }
        }
        None
    }
}

fn check_size(n: usize, n_max: usize) -> Result<()> {
    let limit = n_max.min(N_HARD_LIMIT);
    if n == 0 || n > limit {
        return Err(Error::ResourceLimit {
            what: "enumeration lattice size",
            requested: n as u64,
            limit: limit as u64,
        });
    }
    Ok(())
}

pub fn enumerate_dwbc(n: usize) -> Result<DwbcIter> {
    enumerate_dwbc_with_limit(n, N_MAX_DEFAULT)
}

pub fn enumerate_dwbc_with_limit(n: usize, n_max: usize) -> Result<DwbcIter> {
    check_size(n, n_max)?;
    Ok(DwbcIter::new(n, transition_table(n), Vec::new()))
}

/// Multiplicities of each type-count vector over all domain wall
/// configurations, optionally restricted to half-turn symmetric ones.
///
/// Subtrees below the first row are explored in parallel.
pub fn type_histogram(
    n: usize,
    symmetric_only: bool,
    n_max: usize,
) -> Result<BTreeMap<TypeCounts, u64>> {
    check_size(n, n_max)?;
    let table = transition_table(n);
    let first = table[0].clone();
    let merged = first
        .into_par_iter()
        .map(|tr| {
            let mut hist = BTreeMap::new();
            for cfg in DwbcIter::new(n, table.clone(), vec![tr]) {
                if !symmetric_only || is_half_turn_symmetric(&cfg) {
                    *hist.entry(type_counts(&cfg)).or_insert(0u64) += 1;
                }
            }
            hist
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, m) in b {
                *a.entry(k).or_insert(0) += m;
            }
            a
        });
    Ok(merged)
}

pub fn count_configurations(n: usize, symmetric_only: bool) -> Result<u64> {
    Ok(type_histogram(n, symmetric_only, N_MAX_DEFAULT)?.values().sum())
}

fn weighted_sum<S: Scalar>(hist: &BTreeMap<TypeCounts, u64>, w: &[S; 6]) -> Result<S> {
    for (i, x) in w.iter().enumerate() {
        if !x.is_positive() {
            return Err(Error::NonPositiveWeight { index: i + 1 });
        }
    }
    let mut total = w[0].zero_like();
    for (counts, &mult) in hist {
        let mut term = w[0].from_i64_like(mult as i64);
        for (k, x) in w.iter().enumerate() {
            term = term * powi(x, counts.0[k] as i64);
        }
        total = total + term;
    }
    Ok(total)
}

/// Sum over half-turn symmetric domain wall configurations of
/// `prod w_i^{N_i}`.
pub fn partition_ht<S: Scalar>(n: usize, w: &[S; 6]) -> Result<S> {
    partition_ht_with_limit(n, w, N_MAX_DEFAULT)
}

pub fn partition_ht_with_limit<S: Scalar>(n: usize, w: &[S; 6], n_max: usize) -> Result<S> {
    if n % 2 == 1 {
        return Err(Error::OddLattice(n));
    }
    weighted_sum(&type_histogram(n, true, n_max)?, w)
}

pub fn partition_dwbc<S: Scalar>(n: usize, w: &[S; 6]) -> Result<S> {
    partition_dwbc_with_limit(n, w, N_MAX_DEFAULT)
}

pub fn partition_dwbc_with_limit<S: Scalar>(n: usize, w: &[S; 6], n_max: usize) -> Result<S> {
    weighted_sum(&type_histogram(n, false, n_max)?, w)
}
