//! Skeleton extraction: every variable occurrence becomes a hole annotated
//! with its scope chain, type and the set of variables able to fill it.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinat::{FamilyProblem, Mode, PoolSpec};
use crate::minilang::{self, BaseType, Program, ScopeId, ScopeKind, SlotKind, Storage, TranslationUnit, VarId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    /// Treat declaration names of locals and parameters as holes too.
    pub decl_holes: bool,
}

/// Whether partition problems are solved per function or for the whole program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[default]
    Intra,
    Inter,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarRef {
    pub name: String,
    pub scope: ScopeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Hole {
    /// 1-based, in source order.
    pub index: usize,
    /// Function scope down to the scope the hole appears in.
    pub scope_path: Vec<ScopeId>,
    #[serde(rename = "type")]
    pub ty: BaseType,
    pub var_set: Vec<VarRef>,
    #[serde(skip)]
    pub vars: Vec<VarId>,
    #[serde(skip)]
    pub kind: SlotKind,
    #[serde(skip)]
    pub function: usize,
    /// Position among all identifier slots of the unit.
    #[serde(skip)]
    pub slot: usize,
}

impl Hole {
    pub fn scope(&self) -> ScopeId {
        *self.scope_path.last().expect("holes live inside functions")
    }
}

/// Total map from holes to variables, in hole order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(pub Vec<VarId>);

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FunctionRange {
    pub function: String,
    /// First hole index of the function (1-based); `len` holes follow.
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug)]
pub struct Skeleton {
    /// The program the holes refer to, after renaming shadowing declarations.
    pub program: Program,
    pub holes: Vec<Hole>,
    pub per_function_ranges: Vec<FunctionRange>,
    pub origin: Assignment,
    pub decl_holes: bool,
    /// `(original, fresh)` names of declarations renamed during extraction.
    pub renamed: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SkeletonError {
    #[error("assignment has {found} entries for {expected} holes")]
    Partial { expected: usize, found: usize },
    #[error("hole {hole} cannot take variable `{var}`")]
    OutOfSet { hole: usize, var: String },
    #[error("no function named `{0}`")]
    UnknownFunction(String),
    #[error("paper mode supports one level of local scopes; hole {hole} is nested {depth} levels deep")]
    NestedScopes { hole: usize, depth: usize },
}

/// Rename every declaration that hides a same-named variable of an enclosing scope.
fn unshadow(p: Program) -> (Program, Vec<(String, String)>) {
    let shadowing: Vec<VarId> = (0..p.vars.len())
        .filter(|&v| {
            let var = &p.vars[v];
            let mut cur = p.scopes.node(var.scope).parent;
            while let Some(s) = cur {
                if p.scopes.node(s).vars.iter().any(|&o| p.vars[o].name == var.name) {
                    return true;
                }
                cur = p.scopes.node(s).parent;
            }
            false
        })
        .collect();
    if shadowing.is_empty() {
        return (p, Vec::new());
    }
    let mut taken: HashSet<String> = p.vars.iter().map(|v| v.name.clone()).collect();
    taken.extend(p.functions.iter().map(|f| f.name.clone()));
    let mut fresh = vec![None; p.vars.len()];
    let mut renamed = Vec::new();
    for &v in &shadowing {
        let base = &p.vars[v].name;
        let name = (1..)
            .map(|k| format!("{base}_{k}"))
            .find(|n| !taken.contains(n))
            .unwrap();
        taken.insert(name.clone());
        renamed.push((base.clone(), name.clone()));
        fresh[v] = Some(name);
    }
    let mut unit = p.unit.clone();
    let mut i = 0;
    unit.visit_slots_mut(&mut |_, id| {
        if let Some(n) = &fresh[p.occurrences[i].var] {
            id.name = n.clone();
        }
        i += 1;
    });
    let p = minilang::resolve(unit).expect("renaming preserves validity");
    (p, renamed)
}

/// Turn a program into its skeleton.
pub fn extract(p: &Program, opts: ExtractOptions) -> Skeleton {
    let (program, renamed) = unshadow(p.clone());
    let p = &program;
    let mut holes = Vec::new();
    let mut origin = Vec::new();
    for (slot, occ) in p.occurrences.iter().enumerate() {
        let var = &p.vars[occ.var];
        let is_hole = match occ.kind {
            SlotKind::Use => true,
            SlotKind::Decl => opts.decl_holes && var.storage != Storage::Global,
        };
        if !is_hole {
            continue;
        }
        let function = occ.function.expect("non-global slots are inside functions");
        let full = p.scopes.path(occ.scope);
        let vars: Vec<VarId> = full
            .iter()
            .flat_map(|&s| p.scopes.node(s).vars.iter().copied())
            .filter(|&v| p.vars[v].ty == var.ty)
            .collect();
        holes.push(Hole {
            index: holes.len() + 1,
            scope_path: full.into_iter().filter(|&s| s != ScopeId::GLOBAL).collect(),
            ty: var.ty,
            var_set: vars.iter().map(|&v| var_ref(p, v)).collect(),
            vars,
            kind: occ.kind,
            function,
            slot,
        });
        origin.push(occ.var);
    }
    let per_function_ranges = p
        .functions
        .iter()
        .enumerate()
        .map(|(f, info)| {
            let mine: Vec<usize> = holes.iter().filter(|h| h.function == f).map(|h| h.index).collect();
            FunctionRange {
                function: info.name.clone(),
                start: mine.first().copied().unwrap_or(holes.len() + 1),
                len: mine.len(),
            }
        })
        .collect();
    Skeleton {
        holes,
        per_function_ranges,
        origin: Assignment(origin),
        decl_holes: opts.decl_holes,
        renamed,
        program,
    }
}

fn var_ref(p: &Program, v: VarId) -> VarRef {
    VarRef {
        name: p.vars[v].name.clone(),
        scope: p.vars[v].scope,
    }
}

#[derive(Serialize)]
struct SkeletonDoc<'a> {
    holes: &'a [Hole],
    n: usize,
    per_function_ranges: &'a [FunctionRange],
    origin_vector: Vec<VarRef>,
}

impl Skeleton {
    pub fn n(&self) -> usize {
        self.holes.len()
    }

    pub fn var(&self, v: VarId) -> VarRef {
        var_ref(&self.program, v)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(SkeletonDoc {
            holes: &self.holes,
            n: self.n(),
            per_function_ranges: &self.per_function_ranges,
            origin_vector: self.origin.0.iter().map(|&v| self.var(v)).collect(),
        })
        .expect("skeleton serializes")
    }

    pub fn check(&self, a: &Assignment) -> Result<(), SkeletonError> {
        if a.0.len() != self.holes.len() {
            return Err(SkeletonError::Partial {
                expected: self.holes.len(),
                found: a.0.len(),
            });
        }
        for (h, &v) in self.holes.iter().zip(&a.0) {
            if !h.vars.contains(&v) {
                return Err(SkeletonError::OutOfSet {
                    hole: h.index,
                    var: self
                        .program
                        .vars
                        .get(v)
                        .map_or_else(|| format!("#{v}"), |x| x.name.clone()),
                });
            }
        }
        Ok(())
    }

    /// The template with every hole filled by its assigned variable's name.
    pub fn fill(&self, a: &Assignment) -> TranslationUnit {
        let mut names: Vec<Option<&str>> = vec![None; self.program.occurrences.len()];
        for (h, &v) in self.holes.iter().zip(&a.0) {
            names[h.slot] = Some(&self.program.vars[v].name);
        }
        let mut unit = self.program.unit.clone();
        let mut i = 0;
        unit.visit_slots_mut(&mut |_, id| {
            if let Some(n) = names[i] {
                id.name = n.to_string();
            }
            i += 1;
        });
        unit
    }

    /// Indices (0-based) of holes of function `f` in source order.
    pub fn function_holes(&self, f: usize) -> Vec<usize> {
        (0..self.holes.len()).filter(|&h| self.holes[h].function == f).collect()
    }

    /// Distinct hole types in name order.
    pub fn types(&self) -> Vec<BaseType> {
        let mut t: Vec<BaseType> = self.holes.iter().map(|h| h.ty).collect();
        t.sort_by_key(|t| t.c_name());
        t.dedup();
        t
    }
}

/// Variable list of a hole assignment, in hole order.
pub fn characteristic_vector(s: &Skeleton, a: &Assignment) -> Result<Vec<VarRef>, SkeletonError> {
    s.check(a)?;
    Ok(a.0.iter().map(|&v| s.var(v)).collect())
}

/// One independent partition problem: holes of one type within one
/// function (intra) or the whole program (inter).
#[derive(Clone, Debug)]
pub struct Family {
    pub function: Option<usize>,
    pub ty: BaseType,
    /// 0-based hole indices in source order.
    pub holes: Vec<usize>,
    /// Variables of each pool in declaration order; pool 0 is the outermost.
    pub pool_vars: Vec<Vec<VarId>>,
    pub pool_scopes: Vec<Vec<ScopeId>>,
    pub problem: FamilyProblem,
}

/// Families ordered by function, then type name.
pub fn families(s: &Skeleton, g: Granularity) -> Vec<Family> {
    let p = &s.program;
    let mut out = Vec::new();
    let groups: Vec<(Option<usize>, Vec<usize>)> = match g {
        Granularity::Intra => (0..p.functions.len()).map(|f| (Some(f), s.function_holes(f))).collect(),
        Granularity::Inter => vec![(None, (0..s.holes.len()).collect())],
    };
    for (function, holes) in groups {
        for ty in s.types() {
            let holes: Vec<usize> = holes.iter().copied().filter(|&h| s.holes[h].ty == ty).collect();
            if holes.is_empty() {
                continue;
            }
            out.push(family(s, function, ty, holes));
        }
    }
    out
}

fn family(s: &Skeleton, function: Option<usize>, ty: BaseType, holes: Vec<usize>) -> Family {
    let p = &s.program;
    // Pool of every scope that participates; intra merges globals into the function scope.
    let mut pool_of: Vec<Option<usize>> = vec![None; p.scopes.nodes.len()];
    let mut pool_scopes: Vec<Vec<ScopeId>> = Vec::new();
    let mut pools: Vec<PoolSpec> = Vec::new();
    for (i, node) in p.scopes.nodes.iter().enumerate() {
        let mine = match function {
            Some(f) => node.kind == ScopeKind::Global || node.function == Some(f),
            None => true,
        };
        if !mine {
            continue;
        }
        let merged = function.is_some() && node.kind == ScopeKind::Function;
        if merged {
            pool_of[i] = Some(0);
            pool_scopes[0].push(ScopeId(i));
            continue;
        }
        let parent = node.parent.map(|q| pool_of[q.0].expect("parents precede children"));
        let depth = match parent {
            None => 0,
            Some(q) => pools[q].depth + 1,
        };
        pool_of[i] = Some(pools.len());
        pools.push(PoolSpec { parent, vars: 0, depth });
        pool_scopes.push(vec![ScopeId(i)]);
    }
    let pool_vars: Vec<Vec<VarId>> = pool_scopes
        .iter()
        .map(|scopes| {
            scopes
                .iter()
                .flat_map(|&sc| p.scopes.node(sc).vars.iter().copied())
                .filter(|&v| p.vars[v].ty == ty)
                .collect()
        })
        .collect();
    for (spec, vars) in pools.iter_mut().zip(&pool_vars) {
        spec.vars = vars.len();
    }
    let problem = FamilyProblem {
        holes: holes.iter().map(|&h| pool_of[s.holes[h].scope().0].unwrap()).collect(),
        pools,
    };
    Family {
        function,
        ty,
        holes,
        pool_vars,
        pool_scopes,
        problem,
    }
}

impl Family {
    pub fn label(&self, s: &Skeleton) -> String {
        match self.function {
            Some(f) => format!("{}:{}", s.program.functions[f].name, self.ty.c_name()),
            None => format!("*:{}", self.ty.c_name()),
        }
    }

    /// Pool holding variable `v`, if any.
    pub fn pool_of_var(&self, v: VarId) -> Option<usize> {
        self.pool_vars.iter().position(|vars| vars.contains(&v))
    }
}

/// Holes of one type in a function, grouped global-first then per local scope.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TypeFamilies {
    #[serde(rename = "type")]
    pub ty: BaseType,
    /// 1-based hole indices drawing at most from the function-level pool.
    pub global: Vec<usize>,
    pub locals: Vec<LocalFamily>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalFamily {
    pub scope: ScopeId,
    pub depth: usize,
    pub holes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormalForm {
    pub function: String,
    pub types: Vec<TypeFamilies>,
    /// Normal-form position to original 1-based hole index.
    pub permutation: Vec<usize>,
}

impl NormalForm {
    pub fn inverse(&self) -> Vec<(usize, usize)> {
        let mut inv: Vec<(usize, usize)> = self.permutation.iter().enumerate().map(|(pos, &h)| (h, pos)).collect();
        inv.sort();
        inv
    }
}

/// Normal form of function `f`: per type, holes whose innermost non-empty
/// pool is the function-level pool first, then each block's holes.
pub fn normalize(s: &Skeleton, f: &str, mode: Mode) -> Result<NormalForm, SkeletonError> {
    let fi = s
        .program
        .function_index(f)
        .ok_or_else(|| SkeletonError::UnknownFunction(f.to_string()))?;
    let mut types = Vec::new();
    let mut permutation = Vec::new();
    for fam in families(s, Granularity::Intra)
        .into_iter()
        .filter(|x| x.function == Some(fi))
    {
        let mut global = Vec::new();
        let mut locals: Vec<LocalFamily> = Vec::new();
        for (i, &h) in fam.holes.iter().enumerate() {
            let index = s.holes[h].index;
            match fam.problem.candidates(i).last() {
                None | Some(0) => global.push(index),
                Some(&pool) => {
                    let depth = fam.problem.pools[pool].depth;
                    if mode == Mode::Paper && depth > 1 {
                        return Err(SkeletonError::NestedScopes { hole: index, depth });
                    }
                    let scope = fam.pool_scopes[pool][0];
                    match locals.iter_mut().find(|l| l.scope == scope) {
                        Some(l) => l.holes.push(index),
                        None => locals.push(LocalFamily {
                            scope,
                            depth,
                            holes: vec![index],
                        }),
                    }
                }
            }
        }
        locals.sort_by_key(|l| l.scope);
        permutation.extend(&global);
        for l in &locals {
            permutation.extend(&l.holes);
        }
        types.push(TypeFamilies {
            ty: fam.ty,
            global,
            locals,
        });
    }
    Ok(NormalForm {
        function: f.to_string(),
        types,
        permutation,
    })
}
