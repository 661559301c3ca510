//! From scoped partitions to concrete assignments and programs, plus the
//! α-equivalence decision procedure and the naive oracle.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::combinat::{partition_scope, CombinatError, Mode, RGString, ScopedPartition, ScopedPartitions};
use crate::minilang::{self, Program};
use crate::skeleton::{families, Family, Skeleton, SkeletonError};

pub use crate::skeleton::{Assignment, Granularity};

#[derive(Debug, Error)]
pub enum EnumError {
    #[error(transparent)]
    Combinat(#[from] CombinatError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error("naive search space has {count} assignments, above the cap of {cap}")]
    CapExceeded { count: BigUint, cap: u64 },
}

#[derive(Debug, Error)]
pub enum RealizeError {
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    /// The filled template is not a valid program (decl-holes collisions).
    #[error("invalid variant: {0}")]
    Invalid(minilang::Error),
}

/// Lazy stream of representative assignments: the row-major product of
/// every family's partition stream.
pub struct Enumeration {
    n: usize,
    mode: Mode,
    families: Vec<Family>,
    streams: Vec<ScopedPartitions>,
    current: Vec<ScopedPartition>,
    started: bool,
    done: bool,
}

pub fn enumerate(s: &Skeleton, mode: Mode, g: Granularity) -> Result<Enumeration, EnumError> {
    let families = families(s, g);
    let streams = families
        .iter()
        .map(|f| partition_scope(&f.problem, mode))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Enumeration {
        n: s.n(),
        mode,
        families,
        streams,
        current: Vec::new(),
        started: false,
        done: false,
    })
}

impl Enumeration {
    fn restart(&self, i: usize) -> ScopedPartitions {
        partition_scope(&self.families[i].problem, self.mode).expect("checked at construction")
    }

    fn build(&self) -> Assignment {
        let mut a = vec![usize::MAX; self.n];
        for (fam, part) in self.families.iter().zip(&self.current) {
            for (i, (pool, block)) in part.labels().into_iter().enumerate() {
                a[fam.holes[i]] = fam.pool_vars[pool][block as usize];
            }
        }
        Assignment(a)
    }
}

impl Iterator for Enumeration {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            for s in &mut self.streams {
                match s.next() {
                    Some(p) => self.current.push(p),
                    None => {
                        self.done = true;
                        return None;
                    }
                }
            }
            return Some(self.build());
        }
        for i in (0..self.streams.len()).rev() {
            if let Some(p) = self.streams[i].next() {
                self.current[i] = p;
                return Some(self.build());
            }
            self.streams[i] = self.restart(i);
            self.current[i] = self.streams[i].next().expect("stream was non-empty");
        }
        self.done = true;
        None
    }
}

/// Fill the template and re-validate it as a program.
pub fn realize(s: &Skeleton, a: &Assignment) -> Result<Program, RealizeError> {
    s.check(a)?;
    minilang::resolve(s.fill(a)).map_err(RealizeError::Invalid)
}

/// One family's share of a canonical signature.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FamilySignature {
    pub family: String,
    /// Pool index per hole of the family.
    pub config: Vec<usize>,
    /// Partition of the family's holes by filling variable.
    pub rgs: RGString,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CanonicalSignature(pub Vec<FamilySignature>);

impl fmt::Display for CanonicalSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, fam) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            let config: Vec<String> = fam.config.iter().map(usize::to_string).collect();
            write!(f, "{}[{}]{}", fam.family, config.join(","), fam.rgs)?;
        }
        Ok(())
    }
}

pub fn canonical_signature(s: &Skeleton, a: &Assignment, g: Granularity) -> Result<CanonicalSignature, SkeletonError> {
    s.check(a)?;
    Ok(CanonicalSignature(
        families(s, g)
            .iter()
            .map(|fam| {
                let vars: Vec<usize> = fam.holes.iter().map(|&h| a.0[h]).collect();
                FamilySignature {
                    family: fam.label(s),
                    config: vars
                        .iter()
                        .map(|&v| fam.pool_of_var(v).expect("var_set within pools"))
                        .collect(),
                    rgs: RGString::from_labels(&vars),
                }
            })
            .collect(),
    ))
}

pub fn alpha_equivalent(s: &Skeleton, a1: &Assignment, a2: &Assignment, g: Granularity) -> Result<bool, SkeletonError> {
    Ok(canonical_signature(s, a1, g)? == canonical_signature(s, a2, g)?)
}

/// The member of `a`'s orbit that complete-mode enumeration emits: within
/// each pool, variables are used in declaration order of first occurrence.
pub fn representative(s: &Skeleton, a: &Assignment, g: Granularity) -> Result<Assignment, SkeletonError> {
    s.check(a)?;
    let mut out = a.clone();
    for fam in families(s, g) {
        let mut seen: Vec<Vec<usize>> = vec![Vec::new(); fam.pool_vars.len()];
        for &h in &fam.holes {
            let v = a.0[h];
            let pool = fam.pool_of_var(v).expect("var_set within pools");
            let rank = match seen[pool].iter().position(|&x| x == v) {
                Some(r) => r,
                None => {
                    seen[pool].push(v);
                    seen[pool].len() - 1
                }
            };
            out.0[h] = fam.pool_vars[pool][rank];
        }
    }
    Ok(out)
}

/// File stem of a variant: `<stem>__v<seq>`, the position zero-padded to
/// the width of the largest position among `total` (at least four digits).
pub fn variant_name(stem: &str, seq: usize, total: usize) -> String {
    let width = total.saturating_sub(1).to_string().len().max(4);
    format!("{stem}__v{seq:0width$}")
}

pub fn naive_count(s: &Skeleton) -> BigUint {
    s.holes.iter().map(|h| BigUint::from(h.vars.len())).product()
}

/// Every assignment, lexicographic in var_set order with hole 1 slowest.
pub fn naive_enumerate(s: &Skeleton, cap: u64) -> Result<NaiveIter, EnumError> {
    let count = naive_count(s);
    if count > BigUint::from(cap) {
        return Err(EnumError::CapExceeded { count, cap });
    }
    Ok(NaiveIter {
        sets: s.holes.iter().map(|h| h.vars.clone()).collect(),
        pick: vec![0; s.n()],
        done: count < BigUint::one(),
    })
}

pub struct NaiveIter {
    sets: Vec<Vec<usize>>,
    pick: Vec<usize>,
    done: bool,
}

impl Iterator for NaiveIter {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.done {
            return None;
        }
        let a = Assignment(self.pick.iter().zip(&self.sets).map(|(&i, s)| s[i]).collect());
        self.done = true;
        for h in (0..self.pick.len()).rev() {
            self.pick[h] += 1;
            if self.pick[h] < self.sets[h].len() {
                self.done = false;
                break;
            }
            self.pick[h] = 0;
        }
        Some(a)
    }
}
