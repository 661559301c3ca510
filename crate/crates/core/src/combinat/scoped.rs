//! Scoped partitions: holes that may be filled from a chain of nested
//! variable pools, counted and enumerated up to renaming within each pool.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{binomial, partitions_at_most_count, stirling2, CombinatError, RGString, RgsIter};

/// One pool of interchangeable variables. Pool 0 is the root; every other
/// pool names a parent with a smaller index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSpec {
    pub parent: Option<usize>,
    pub vars: usize,
    pub depth: usize,
}

/// A family of holes sharing one type. `holes[i]` is the innermost pool
/// visible at hole `i`; the hole may also take any ancestor pool.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyProblem {
    pub pools: Vec<PoolSpec>,
    pub holes: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Promote local holes scope by scope and give the outer pool exactly as
    /// many blocks as it has variables; one level of local scopes only.
    Paper,
    /// Every pool configuration, each with its at-most partitions per pool.
    #[default]
    Complete,
}

/// One solution: the pool each hole draws from and, per pool, the
/// partition of that pool's holes (taken in hole order).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScopedPartition {
    pub config: Vec<usize>,
    pub blocks: Vec<RGString>,
}

impl ScopedPartition {
    /// `(pool, block)` for every hole.
    pub fn labels(&self) -> Vec<(usize, u16)> {
        let mut seen = vec![0usize; self.blocks.len()];
        self.config
            .iter()
            .map(|&p| {
                let b = self.blocks[p].digits()[seen[p]];
                seen[p] += 1;
                (p, b)
            })
            .collect()
    }
}

impl FamilyProblem {
    fn validate(&self) {
        assert!(!self.pools.is_empty(), "family without a root pool");
        for (i, p) in self.pools.iter().enumerate().skip(1) {
            let parent = p.parent.expect("non-root pool without parent");
            assert!(parent < i, "pool {i} has parent {parent}");
        }
        for &h in &self.holes {
            assert!(h < self.pools.len(), "hole refers to missing pool {h}");
        }
    }

    /// Pools a hole may take, outermost first, skipping empty pools.
    pub fn candidates(&self, hole: usize) -> Vec<usize> {
        let mut chain = Vec::new();
        let mut cur = Some(self.holes[hole]);
        while let Some(p) = cur {
            if self.pools[p].vars > 0 {
                chain.push(p);
            }
            cur = self.pools[p].parent;
        }
        chain.reverse();
        chain
    }

    /// Innermost non-empty pool of each hole, or `None` if it has none.
    fn effective(&self) -> Vec<Option<usize>> {
        (0..self.holes.len())
            .map(|h| self.candidates(h).last().copied())
            .collect()
    }
}

/// Count of scoped partitions in complete mode without enumerating them.
pub fn complete_count(fam: &FamilyProblem) -> BigUint {
    fam.validate();
    let n = fam.pools.len();
    let mut own = vec![0usize; n];
    for &h in &fam.holes {
        own[h] += 1;
    }
    // up[s][p]: ways to settle the subtree of `s` with `p` holes left to
    // ancestors. Children have larger indices, so a reverse sweep is bottom-up.
    let mut up: Vec<Vec<BigUint>> = vec![Vec::new(); n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        children[fam.pools[i].parent.unwrap()].push(i);
    }
    for s in (0..n).rev() {
        let mut reach = vec![BigUint::zero(); own[s] + 1];
        reach[own[s]] = BigUint::one();
        for &c in &children[s] {
            reach = convolve(&reach, &up[c]);
        }
        let k = fam.pools[s].vars;
        let mut out = vec![BigUint::zero(); reach.len()];
        for (t, ways) in reach.iter().enumerate() {
            if ways.is_zero() {
                continue;
            }
            for r in 0..=t {
                let keep = partitions_at_most_count(r, k);
                if keep.is_zero() {
                    continue;
                }
                out[t - r] += ways * binomial(t, r) * keep;
            }
        }
        up[s] = out;
    }
    up[0][0].clone()
}

fn convolve(a: &[BigUint], b: &[BigUint]) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Local scopes with holes, in pool order: `(pool, holes, vars)`.
struct PaperShape {
    globals: Vec<usize>,
    scopes: Vec<(usize, Vec<usize>, usize)>,
    global_vars: usize,
}

fn paper_shape(fam: &FamilyProblem) -> Result<Option<PaperShape>, CombinatError> {
    fam.validate();
    let eff = fam.effective();
    if eff.iter().any(Option::is_none) {
        return Ok(None);
    }
    let mut globals = Vec::new();
    let mut scopes: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    for (h, p) in eff.into_iter().map(Option::unwrap).enumerate() {
        let depth = fam.pools[p].depth;
        if p == 0 {
            globals.push(h);
        } else if depth == 1 {
            match scopes.iter_mut().find(|s| s.0 == p) {
                Some(s) => s.1.push(h),
                None => scopes.push((p, vec![h], fam.pools[p].vars)),
            }
        } else {
            return Err(CombinatError::NestedScopes { hole: h, depth });
        }
    }
    scopes.sort_by_key(|s| s.0);
    Ok(Some(PaperShape {
        globals,
        scopes,
        global_vars: fam.pools[0].vars,
    }))
}

/// Count of the paper-mode solution set.
pub fn paper_count(fam: &FamilyProblem) -> Result<BigUint, CombinatError> {
    let Some(shape) = paper_shape(fam)? else {
        return Ok(BigUint::zero());
    };
    let all = fam.holes.len();
    let mut total = partitions_at_most_count(all, shape.global_vars);
    if shape.scopes.is_empty() {
        return Ok(total);
    }
    // Polynomial in the number of promoted holes.
    let mut poly = vec![BigUint::one()];
    for (_, holes, v) in &shape.scopes {
        let u = holes.len();
        let term: Vec<BigUint> = (0..u)
            .map(|k| binomial(u, k) * (1..=*v).map(|j| stirling2(u - k, j)).sum::<BigUint>())
            .collect();
        poly = convolve(&poly, &term);
    }
    let g = shape.globals.len();
    for (m, c) in poly.iter().enumerate() {
        total += c * stirling2(g + m, shape.global_vars);
    }
    Ok(total)
}

/// Lazily enumerate the scoped partitions of a family.
pub fn partition_scope(fam: &FamilyProblem, mode: Mode) -> Result<ScopedPartitions, CombinatError> {
    match mode {
        Mode::Complete => {
            fam.validate();
            Ok(ScopedPartitions::Complete(CompleteIter::new(fam)))
        }
        Mode::Paper => Ok(ScopedPartitions::Paper(PaperIter::new(fam, paper_shape(fam)?))),
    }
}

pub enum ScopedPartitions {
    Complete(CompleteIter),
    Paper(PaperIter),
}

impl Iterator for ScopedPartitions {
    type Item = ScopedPartition;

    fn next(&mut self) -> Option<ScopedPartition> {
        match self {
            ScopedPartitions::Complete(it) => it.next(),
            ScopedPartitions::Paper(it) => it.next(),
        }
    }
}

/// Odometer over a product of partition generators, last one fastest.
struct Product {
    iters: Vec<RgsIter>,
    current: Vec<RGString>,
    started: bool,
    done: bool,
}

impl Product {
    fn new(iters: Vec<RgsIter>) -> Product {
        Product {
            iters,
            current: Vec::new(),
            started: false,
            done: false,
        }
    }

    fn next(&mut self) -> Option<&[RGString]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            for it in &mut self.iters {
                match it.next() {
                    Some(r) => self.current.push(r),
                    None => {
                        self.done = true;
                        return None;
                    }
                }
            }
            return Some(&self.current);
        }
        for i in (0..self.iters.len()).rev() {
            if let Some(r) = self.iters[i].next() {
                self.current[i] = r;
                return Some(&self.current);
            }
            self.iters[i].reset();
            self.current[i] = self.iters[i].next().expect("non-empty generator");
        }
        self.done = true;
        None
    }
}

pub struct CompleteIter {
    pools: Vec<usize>,
    choices: Vec<Vec<usize>>,
    pick: Vec<usize>,
    inner: Option<Product>,
    exhausted: bool,
}

impl CompleteIter {
    fn new(fam: &FamilyProblem) -> CompleteIter {
        let choices: Vec<Vec<usize>> = (0..fam.holes.len()).map(|h| fam.candidates(h)).collect();
        let exhausted = choices.iter().any(Vec::is_empty);
        let mut it = CompleteIter {
            pools: fam.pools.iter().map(|p| p.vars).collect(),
            pick: vec![0; choices.len()],
            choices,
            inner: None,
            exhausted,
        };
        if !it.exhausted {
            it.inner = Some(it.pool_product());
        }
        it
    }

    fn config(&self) -> Vec<usize> {
        self.pick.iter().zip(&self.choices).map(|(&i, c)| c[i]).collect()
    }

    fn pool_product(&self) -> Product {
        let config = self.config();
        let iters = self
            .pools
            .iter()
            .enumerate()
            .map(|(p, &k)| RgsIter::new(config.iter().filter(|&&c| c == p).count(), 0, k))
            .collect();
        Product::new(iters)
    }

    fn next_config(&mut self) -> bool {
        for h in (0..self.pick.len()).rev() {
            if self.pick[h] + 1 < self.choices[h].len() {
                self.pick[h] += 1;
                return true;
            }
            self.pick[h] = 0;
        }
        false
    }
}

impl Iterator for CompleteIter {
    type Item = ScopedPartition;

    fn next(&mut self) -> Option<ScopedPartition> {
        while !self.exhausted {
            if let Some(blocks) = self.inner.as_mut().and_then(|p| p.next()) {
                let blocks = blocks.to_vec();
                return Some(ScopedPartition {
                    config: self.config(),
                    blocks,
                });
            }
            if self.next_config() {
                self.inner = Some(self.pool_product());
            } else {
                self.exhausted = true;
            }
        }
        None
    }
}

/// Position of one local scope in the promotion procedure: how many holes
/// are promoted, which ones, and the exact block count for the rest.
#[derive(Clone, Debug)]
struct ScopeCursor {
    u: usize,
    v: usize,
    combo: Vec<usize>,
    j: usize,
}

impl ScopeCursor {
    fn new(u: usize, v: usize) -> ScopeCursor {
        ScopeCursor {
            u,
            v,
            combo: Vec::new(),
            j: 1,
        }
    }

    fn advance(&mut self) -> bool {
        if self.j < self.v {
            self.j += 1;
            return true;
        }
        self.j = 1;
        if next_combination(&mut self.combo, self.u) {
            return true;
        }
        let k = self.combo.len() + 1;
        if k < self.u {
            self.combo = (0..k).collect();
            return true;
        }
        false
    }
}

/// Lexicographic successor of a sorted k-subset of `0..n`.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub struct PaperIter {
    holes: usize,
    pools: usize,
    shape: Option<PaperShape>,
    cursors: Vec<ScopeCursor>,
    plan: Option<(Vec<usize>, Product)>,
    in_procedure: bool,
    tail: Option<Product>,
}

impl PaperIter {
    fn new(fam: &FamilyProblem, shape: Option<PaperShape>) -> PaperIter {
        let mut it = PaperIter {
            holes: fam.holes.len(),
            pools: fam.pools.len(),
            cursors: Vec::new(),
            plan: None,
            in_procedure: false,
            tail: None,
            shape,
        };
        if let Some(shape) = &it.shape {
            it.cursors = shape
                .scopes
                .iter()
                .map(|(_, h, v)| ScopeCursor::new(h.len(), *v))
                .collect();
            it.in_procedure = !it.cursors.is_empty();
            it.tail = Some(Product::new(vec![RgsIter::new(it.holes, 0, shape.global_vars)]));
            if it.in_procedure {
                it.plan = Some(it.build_plan());
            }
        }
        it
    }

    /// Hole-to-pool map and generators for the current cursor positions.
    fn build_plan(&self) -> (Vec<usize>, Product) {
        let shape = self.shape.as_ref().unwrap();
        let mut config = vec![0usize; self.holes];
        let mut promoted = shape.globals.len();
        let mut locals = Vec::new();
        for ((pool, holes, _), cur) in shape.scopes.iter().zip(&self.cursors) {
            for (i, &h) in holes.iter().enumerate() {
                if !cur.combo.contains(&i) {
                    config[h] = *pool;
                }
            }
            promoted += cur.combo.len();
            locals.push(RgsIter::new(holes.len() - cur.combo.len(), cur.j, cur.j));
        }
        let mut iters = vec![RgsIter::new(promoted, shape.global_vars, shape.global_vars)];
        iters.extend(locals);
        (config, Product::new(iters))
    }

    fn advance_cursors(&mut self) -> bool {
        for i in (0..self.cursors.len()).rev() {
            if self.cursors[i].advance() {
                return true;
            }
            let c = &self.cursors[i];
            self.cursors[i] = ScopeCursor::new(c.u, c.v);
        }
        false
    }

    fn assemble(&self, config: &[usize], parts: &[RGString]) -> ScopedPartition {
        let shape = self.shape.as_ref().unwrap();
        // The i-th element of each generated partition is the i-th hole
        // (in hole order) assigned to that pool.
        let mut blocks = vec![RGString::default(); self.pools];
        blocks[0] = parts[0].clone();
        for ((pool, _, _), r) in shape.scopes.iter().zip(&parts[1..]) {
            blocks[*pool] = r.clone();
        }
        ScopedPartition {
            config: config.to_vec(),
            blocks,
        }
    }
}

impl Iterator for PaperIter {
    type Item = ScopedPartition;

    fn next(&mut self) -> Option<ScopedPartition> {
        while self.in_procedure {
            let (config, product) = self.plan.as_mut().unwrap();
            if let Some(parts) = product.next() {
                let parts = parts.to_vec();
                let config = config.clone();
                return Some(self.assemble(&config, &parts));
            }
            if self.advance_cursors() {
                self.plan = Some(self.build_plan());
            } else {
                self.in_procedure = false;
            }
        }
        let parts = self.tail.as_mut()?.next()?.to_vec();
        let mut blocks = vec![RGString::default(); self.pools];
        blocks[0] = parts[0].clone();
        Some(ScopedPartition {
            config: vec![0; self.holes],
            blocks,
        })
    }
}
