//! Variant counts for a whole skeleton, computed without enumeration.

use num_bigint::BigUint;
use num_traits::One;
use serde::{Serialize, Serializer};

use super::{complete_count, paper_count, Mode};
use crate::minilang::ScopeKind;
use crate::skeleton::{families, Granularity, Skeleton};

fn decimal<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

fn decimal_opt<S: Serializer>(n: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
    match n {
        Some(n) => s.serialize_str(&n.to_string()),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyCount {
    pub family: String,
    pub holes: usize,
    #[serde(serialize_with = "decimal")]
    pub naive: BigUint,
    #[serde(serialize_with = "decimal_opt")]
    pub paper: Option<BigUint>,
    #[serde(serialize_with = "decimal")]
    pub complete: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountReport {
    pub holes: usize,
    /// Product of every hole's var_set size.
    #[serde(serialize_with = "decimal")]
    pub naive: BigUint,
    /// Product over holes of every same-type variable of the hole's
    /// function and the globals, ignoring block visibility.
    #[serde(serialize_with = "decimal")]
    pub scope_blind_naive: BigUint,
    /// `None` when paper mode does not apply (nested scopes).
    #[serde(serialize_with = "decimal_opt")]
    pub paper: Option<BigUint>,
    #[serde(serialize_with = "decimal")]
    pub complete: BigUint,
    pub families: Vec<FamilyCount>,
}

impl CountReport {
    pub fn selected(&self, mode: Mode) -> Option<&BigUint> {
        match mode {
            Mode::Paper => self.paper.as_ref(),
            Mode::Complete => Some(&self.complete),
        }
    }
}

pub fn count_plan(s: &Skeleton, g: Granularity) -> CountReport {
    let p = &s.program;
    let mut fams = Vec::new();
    for fam in families(s, g) {
        fams.push(FamilyCount {
            family: fam.label(s),
            holes: fam.holes.len(),
            naive: fam
                .holes
                .iter()
                .map(|&h| BigUint::from(s.holes[h].vars.len()))
                .product(),
            paper: paper_count(&fam.problem).ok(),
            complete: complete_count(&fam.problem),
        });
    }
    let scope_blind = s
        .holes
        .iter()
        .map(|h| {
            let visible = p
                .scopes
                .nodes
                .iter()
                .filter(|n| n.kind == ScopeKind::Global || n.function == Some(h.function))
                .flat_map(|n| n.vars.iter())
                .filter(|&&v| p.vars[v].ty == h.ty)
                .count();
            BigUint::from(visible)
        })
        .product();
    CountReport {
        holes: s.n(),
        naive: fams.iter().map(|f| f.naive.clone()).product(),
        scope_blind_naive: scope_blind,
        paper: fams
            .iter()
            .try_fold(BigUint::one(), |acc, f| f.paper.as_ref().map(|c| acc * c)),
        complete: fams.iter().map(|f| f.complete.clone()).product(),
        families: fams,
    }
}
