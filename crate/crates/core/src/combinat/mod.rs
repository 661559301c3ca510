//! Set-partition combinatorics: Stirling numbers, restricted growth strings,
//! combinations, and the scoped partition problem over variable pools.

mod plan;
mod scoped;

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use plan::{count_plan, CountReport, FamilyCount};
pub use scoped::{
    complete_count, paper_count, partition_scope, FamilyProblem, Mode, PoolSpec, ScopedPartition, ScopedPartitions,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CombinatError {
    #[error("cannot choose {k} of {n} elements")]
    ChooseTooMany { n: usize, k: usize },
    #[error("paper mode supports one level of local scopes; hole {hole} is nested {depth} levels deep")]
    NestedScopes { hole: usize, depth: usize },
}

/// Stirling number of the second kind: partitions of `n` labeled elements
/// into exactly `k` non-empty blocks.
pub fn stirling2(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    if k == 0 {
        return if n == 0 { BigUint::one() } else { BigUint::zero() };
    }
    // Row-by-row recurrence, keeping only columns 0..=k.
    let mut row = vec![BigUint::zero(); k + 1];
    row[0] = BigUint::one();
    for m in 1..=n {
        for j in (1..=k.min(m)).rev() {
            let stay = &row[j] * BigUint::from(j);
            row[j] = stay + &row[j - 1];
        }
        row[0] = BigUint::zero();
    }
    row.swap_remove(k)
}

/// Number of partitions of `n` elements into at most `k` non-empty blocks.
///
/// For `k > n` this is the Bell number of `n`; the empty set has one partition.
pub fn partitions_at_most_count(n: usize, k: usize) -> BigUint {
    if n == 0 {
        return BigUint::one();
    }
    (1..=k.min(n)).map(|i| stirling2(n, i)).sum()
}

/// A restricted growth string `a_1 .. a_n`: `a_1 = 0` and each digit is at
/// most one more than the maximum of the digits before it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RGString(pub Vec<u16>);

impl RGString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn digits(&self) -> &[u16] {
        &self.0
    }

    pub fn block_count(&self) -> usize {
        self.0.iter().max().map_or(0, |&m| m as usize + 1)
    }

    pub fn is_valid(&self) -> bool {
        let mut next = 0u16;
        for &d in &self.0 {
            if d > next {
                return false;
            }
            if d == next {
                next += 1;
            }
        }
        true
    }

    /// Blocks as lists of positions, in block-number order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.block_count()];
        for (i, &d) in self.0.iter().enumerate() {
            out[d as usize].push(i);
        }
        out
    }

    /// Canonical string of a labeling: equal labels share a block, blocks
    /// numbered by first occurrence.
    pub fn from_labels<T: PartialEq>(labels: &[T]) -> RGString {
        let mut seen: Vec<&T> = Vec::new();
        let digits = labels
            .iter()
            .map(|l| match seen.iter().position(|s| *s == l) {
                Some(i) => i as u16,
                None => {
                    seen.push(l);
                    (seen.len() - 1) as u16
                }
            })
            .collect();
        RGString(digits)
    }
}

impl fmt::Display for RGString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&d| d < 10) {
            for d in &self.0 {
                write!(f, "{d}")?;
            }
            Ok(())
        } else {
            write!(f, "{}", self.0.iter().join("."))
        }
    }
}

#[derive(Debug, Error)]
#[error("invalid restricted growth string `{0}`")]
pub struct ParseRgsError(String);

impl FromStr for RGString {
    type Err = ParseRgsError;

    fn from_str(s: &str) -> Result<RGString, ParseRgsError> {
        let err = || ParseRgsError(s.to_string());
        let digits: Vec<u16> = if s.contains('.') {
            s.split('.')
                .map(|p| p.parse().map_err(|_| err()))
                .collect::<Result<_, _>>()?
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|d| d as u16).ok_or_else(err))
                .collect::<Result<_, _>>()?
        };
        let r = RGString(digits);
        if r.is_valid() {
            Ok(r)
        } else {
            Err(err())
        }
    }
}

/// Characteristic-vector to restricted growth string.
pub fn rgs_of_vector<T: PartialEq>(vec: &[T]) -> RGString {
    RGString::from_labels(vec)
}

/// Lexicographic generator of restricted growth strings of length `n` whose
/// block count lies in `min_blocks..=max_blocks`.
#[derive(Clone, Debug)]
pub struct RgsIter {
    n: usize,
    min_blocks: usize,
    max_blocks: usize,
    current: Option<Vec<u16>>,
    started: bool,
}

impl RgsIter {
    pub fn new(n: usize, min_blocks: usize, max_blocks: usize) -> RgsIter {
        RgsIter {
            n,
            min_blocks,
            max_blocks,
            current: None,
            started: false,
        }
    }

    pub fn reset(&mut self) {
        self.current = None;
        self.started = false;
    }

    fn first(&self) -> Option<Vec<u16>> {
        let n = self.n;
        if n == 0 {
            return (self.min_blocks == 0).then(Vec::new);
        }
        let lo = self.min_blocks.max(1);
        if lo > n || lo > self.max_blocks {
            return None;
        }
        let mut a = vec![0u16; n];
        fill_tail(&mut a, 1, 1, lo);
        Some(a)
    }

    /// Advance `a` in place to its lexicographic successor.
    fn advance(&self, a: &mut [u16]) -> bool {
        let n = a.len();
        let lo = self.min_blocks.max(1);
        let mut prefix_max = vec![0u16; n];
        for i in 1..n {
            prefix_max[i] = prefix_max[i - 1].max(a[i - 1]);
        }
        for i in (1..n).rev() {
            let m = prefix_max[i];
            let remaining = n - 1 - i;
            let top = (m as usize + 1).min(self.max_blocks.saturating_sub(1));
            // Values up to `m` keep the block count; `m + 1` opens a new block.
            let first = a[i] as usize + 1;
            for v in [first, m as usize + 1] {
                if v < first || v > top {
                    continue;
                }
                let blocks = (m as usize).max(v) + 1;
                if lo <= blocks + remaining {
                    a[i] = v as u16;
                    fill_tail(a, i + 1, blocks, lo);
                    return true;
                }
            }
        }
        false
    }
}

/// Minimal completion of `a[from..]` given `blocks` already open: zeros,
/// then just enough fresh blocks at the end to reach `lo`.
fn fill_tail(a: &mut [u16], from: usize, blocks: usize, lo: usize) {
    let n = a.len();
    let need = lo.saturating_sub(blocks);
    for x in &mut a[from..n - need] {
        *x = 0;
    }
    for (j, x) in a[n - need..].iter_mut().enumerate() {
        *x = (blocks + j) as u16;
    }
}

impl Iterator for RgsIter {
    type Item = RGString;

    fn next(&mut self) -> Option<RGString> {
        if !self.started {
            self.started = true;
            self.current = self.first();
        } else if let Some(mut a) = self.current.take() {
            if self.advance(&mut a) {
                self.current = Some(a);
            }
        }
        self.current.clone().map(RGString)
    }
}

/// All partitions of `elems` into at most `k` blocks (capped at `|elems|`),
/// in lexicographic order. `k = 0` yields only the empty partition of an
/// empty set.
pub fn partitions_at_most<T>(elems: &[T], k: usize) -> RgsIter {
    RgsIter::new(elems.len(), 0, k)
}

/// All partitions of `elems` into exactly `k` non-empty blocks, in
/// lexicographic order; empty when `k > |elems|` or `k = 0 < |elems|`.
pub fn partitions_exact<T>(elems: &[T], k: usize) -> RgsIter {
    if elems.is_empty() {
        return RgsIter::new(0, k, k);
    }
    if k == 0 {
        return RgsIter::new(elems.len(), 1, 0);
    }
    RgsIter::new(elems.len(), k, k)
}

/// All `k`-subsets of `elems` in lexicographic order of element positions.
pub fn combinations<T: Clone>(elems: &[T], k: usize) -> Result<Vec<Vec<T>>, CombinatError> {
    if k > elems.len() {
        return Err(CombinatError::ChooseTooMany { n: elems.len(), k });
    }
    Ok(elems.iter().cloned().combinations(k).collect())
}

/// Binomial coefficient as a big integer.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}
