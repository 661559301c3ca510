//! Shared test support: a random MiniC generator and an orbit oracle that
//! groups variables by itself instead of trusting the skeleton's pools.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use spe::enumerator::{naive_enumerate, Assignment};
use spe::minilang::{BaseType, ScopeId, ScopeKind, Storage};
use spe::skeleton::Skeleton;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_src(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn has_tool(name: &str) -> bool {
    Command::new(name)
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

pub const MAX_HOLES: usize = 8;

#[derive(Clone, Copy)]
struct Var {
    ty: BaseType,
    scope: usize,
}

struct Gen {
    rng: StdRng,
    vars: Vec<Var>,
    /// Scope 0 is the global scope, 1 the body of `main`, then blocks.
    parents: Vec<Option<usize>>,
    holes_left: usize,
    homogeneous: bool,
}

impl Gen {
    fn name(i: usize) -> String {
        format!("v{i}")
    }

    fn visible(&self, scope: usize, ty: BaseType) -> Vec<usize> {
        let mut path = vec![scope];
        let mut cur = scope;
        while let Some(p) = self.parents[cur] {
            path.push(p);
            cur = p;
        }
        (0..self.vars.len())
            .filter(|&v| self.vars[v].ty == ty && path.contains(&self.vars[v].scope))
            .collect()
    }

    fn constant(&mut self, ty: BaseType) -> String {
        let c: u32 = self.rng.gen_range(1..8);
        match ty {
            BaseType::Int => c.to_string(),
            BaseType::Unsigned => format!("{c}u"),
        }
    }

    fn use_var(&mut self, scope: usize, ty: BaseType) -> Option<String> {
        let vis = self.visible(scope, ty);
        if vis.is_empty() || self.holes_left == 0 {
            return None;
        }
        self.holes_left -= 1;
        Some(Self::name(vis[self.rng.gen_range(0..vis.len())]))
    }

    fn expr(&mut self, scope: usize, ty: BaseType, depth: u32) -> String {
        if depth < 2 && self.rng.gen_bool(0.4) {
            let op = ["+", "-", "*", "/", "%", "^", "&", "|"][self.rng.gen_range(0..8)];
            let l = self.expr(scope, ty, depth + 1);
            let r = self.expr(scope, ty, depth + 1);
            let literal = |e: &str| e.starts_with(|c: char| c.is_ascii_digit());
            // clang flags `2 ^ 1` as a likely typo for a power
            let op = if op == "^" && literal(&l) && literal(&r) {
                "+"
            } else {
                op
            };
            return format!("({l} {op} {r})");
        }
        if self.rng.gen_bool(0.75) {
            if let Some(v) = self.use_var(scope, ty) {
                return v;
            }
        }
        self.constant(ty)
    }

    fn any_type(&mut self, scope: usize) -> BaseType {
        let tys: Vec<BaseType> = [BaseType::Int, BaseType::Unsigned]
            .into_iter()
            .filter(|&t| !self.visible(scope, t).is_empty())
            .collect();
        if tys.is_empty() {
            BaseType::Int
        } else {
            tys[self.rng.gen_range(0..tys.len())]
        }
    }

    fn stmt(&mut self, scope: usize, out: &mut String, indent: usize) {
        let kind = self.rng.gen_range(0..10);
        self.stmt_of(kind, scope, out, indent);
    }

    /// `if` arms are simple statements, so no `else` ever dangles.
    fn simple_stmt(&mut self, scope: usize, out: &mut String, indent: usize) {
        let kind = self.rng.gen_range(0..8);
        self.stmt_of(kind, scope, out, indent);
    }

    fn stmt_of(&mut self, kind: u32, scope: usize, out: &mut String, indent: usize) {
        let pad = "    ".repeat(indent);
        let ty = self.any_type(scope);
        let before = out.len();
        self.stmt_kind(kind, scope, ty, out, indent);
        if out.len() == before {
            out.push_str(&format!("{pad}printf(\"%d\\n\", {});\n", self.constant(ty)));
        }
    }

    fn stmt_kind(&mut self, kind: u32, scope: usize, ty: BaseType, out: &mut String, indent: usize) {
        let pad = "    ".repeat(indent);
        match kind {
            0..=5 => {
                if let Some(t) = self.use_var(scope, ty) {
                    let e = self.expr(scope, ty, 0);
                    out.push_str(&format!("{pad}{t} = {e};\n"));
                }
            }
            6 | 7 => {
                let e = self.expr(scope, ty, 0);
                out.push_str(&format!("{pad}printf(\"%d\\n\", {e});\n"));
            }
            8 => {
                let c = self.expr(scope, ty, 1);
                out.push_str(&format!("{pad}if ({c})\n"));
                self.simple_stmt(scope, out, indent + 1);
                if self.rng.gen_bool(0.5) {
                    out.push_str(&format!("{pad}else\n"));
                    self.simple_stmt(scope, out, indent + 1);
                }
            }
            _ => {
                // `while (v) w = w - 1;` takes three holes
                if self.holes_left < 3 {
                    return;
                }
                let (Some(v), Some(w)) = (self.use_var(scope, ty), self.use_var(scope, ty)) else {
                    return;
                };
                self.holes_left -= 1;
                let one = if ty == BaseType::Unsigned { "1u" } else { "1" };
                out.push_str(&format!("{pad}while ({v})\n{pad}    {w} = {w} - {one};\n"));
            }
        }
    }

    fn decls(&mut self, scope: usize, out: &mut String, indent: usize) {
        let pad = "    ".repeat(indent);
        for (i, v) in self.vars.clone().iter().enumerate() {
            if v.scope != scope {
                continue;
            }
            let init = if self.homogeneous {
                match v.ty {
                    BaseType::Int => " = 3".to_string(),
                    BaseType::Unsigned => " = 5u".to_string(),
                }
            } else if self.rng.gen_bool(0.8) {
                format!(" = {}", self.constant(v.ty))
            } else {
                String::new()
            };
            out.push_str(&format!("{pad}{} {}{init};\n", v.ty.c_name(), Self::name(i)));
        }
    }

    fn body(&mut self, scope: usize, children: &[usize], out: &mut String, indent: usize, blocks: &[Vec<usize>]) {
        self.decls(scope, out, indent);
        let n = self.rng.gen_range(1..=3);
        let at = self.rng.gen_range(0..=n);
        for i in 0..=n {
            if i == at {
                for &c in children {
                    out.push_str(&format!("{}{{\n", "    ".repeat(indent)));
                    self.body(c, &blocks[c], out, indent + 1, blocks);
                    out.push_str(&format!("{}}}\n", "    ".repeat(indent)));
                }
            }
            if i < n {
                self.stmt(scope, out, indent);
            }
        }
    }
}

/// A random single-`main` program with at most [`MAX_HOLES`] variable uses,
/// four variables, three variable scopes and two types. With
/// `homogeneous`, every variable of a type starts from the same constant,
/// so variables sharing a scope are interchangeable.
pub fn random_program(seed: u64, homogeneous: bool) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let two_types = rng.gen_bool(0.5);
    let globals = rng.gen_bool(0.3);
    let blocks = rng.gen_range(0..=if globals { 1 } else { 2 });
    let mut parents = vec![None, Some(0)];
    for b in 0..blocks {
        // a second block is either nested in the first or its sibling
        let parent = if b == 1 && rng.gen_bool(0.5) { 2 } else { 1 };
        parents.push(Some(parent));
    }
    let scopes: Vec<usize> = if globals { vec![0, 1] } else { vec![1] }
        .into_iter()
        .chain(2..2 + blocks)
        .collect();
    let nvars = rng.gen_range(1..=4);
    let vars = (0..nvars)
        .map(|_| Var {
            ty: if two_types && rng.gen_bool(0.5) {
                BaseType::Unsigned
            } else {
                BaseType::Int
            },
            scope: scopes[rng.gen_range(0..scopes.len())],
        })
        .collect();
    let mut g = Gen {
        rng,
        vars,
        parents: parents.clone(),
        holes_left: MAX_HOLES,
        homogeneous,
    };
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); parents.len()];
    for (s, p) in parents.iter().enumerate().skip(2) {
        children[p.unwrap()].push(s);
    }
    let mut out = String::from("#include <stdio.h>\n\n");
    g.decls(0, &mut out, 0);
    out.push_str("\nint main(void) {\n");
    g.body(1, &children[1].clone(), &mut out, 1, &children);
    let ret = g.expr(1, BaseType::Int, 1);
    out.push_str(&format!("    return {ret};\n}}\n"));
    out
}

/// Orbit id of every naive assignment under renamings that permute
/// variables of one type within one scope, where globals count as part of
/// the single function's top scope.
pub struct Orbits {
    pub ids: HashMap<Vec<usize>, usize>,
    pub count: usize,
}

pub fn orbits(s: &Skeleton) -> Orbits {
    let p = &s.program;
    let main_scope = p
        .scopes
        .nodes
        .iter()
        .position(|n| n.kind == ScopeKind::Function)
        .map(ScopeId);
    let group = |v: usize| {
        let var = &p.vars[v];
        let scope = if var.storage == Storage::Global {
            main_scope.unwrap_or(ScopeId::GLOBAL)
        } else {
            var.scope
        };
        (scope, var.ty)
    };
    let swaps: Vec<(usize, usize)> = (0..p.vars.len())
        .flat_map(|x| (x + 1..p.vars.len()).map(move |y| (x, y)))
        .filter(|&(x, y)| group(x) == group(y))
        .collect();
    let all: Vec<Assignment> = naive_enumerate(s, 1 << 20).unwrap().collect();
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut count = 0;
    for a in &all {
        if ids.contains_key(&a.0) {
            continue;
        }
        let mut stack = vec![a.0.clone()];
        ids.insert(a.0.clone(), count);
        while let Some(cur) = stack.pop() {
            for &(x, y) in &swaps {
                let next: Vec<usize> = cur
                    .iter()
                    .map(|&v| {
                        if v == x {
                            y
                        } else if v == y {
                            x
                        } else {
                            v
                        }
                    })
                    .collect();
                if !ids.contains_key(&next) {
                    ids.insert(next.clone(), count);
                    stack.push(next);
                }
            }
        }
        count += 1;
    }
    assert_eq!(ids.len(), all.len(), "renamings left the naive space");
    Orbits { ids, count }
}

pub struct PartitionCheck {
    pub holes: usize,
    pub naive: usize,
    pub orbits: usize,
    pub complete: usize,
    /// None when paper mode rejects nested scopes.
    pub paper: Option<usize>,
}

/// Check the complete stream against the orbit oracle on one random
/// program: pairwise inequivalent, covering every orbit, and the paper
/// stream also pairwise inequivalent.
pub fn check_partitions(seed: u64) -> Result<PartitionCheck, String> {
    use spe::combinat::Mode;
    use spe::enumerator::enumerate;
    use spe::skeleton::{extract, ExtractOptions, Granularity};

    let src = random_program(seed, false);
    let prog =
        spe::minilang::parse(&src).map_err(|e| format!("seed {seed}: generated program rejected: {e}\n{src}"))?;
    let s = extract(&prog, ExtractOptions::default());
    if s.n() > MAX_HOLES || prog.vars.len() > 4 {
        return Err(format!("seed {seed}: generator exceeded its bounds"));
    }
    let o = orbits(&s);
    let distinct = |mode: Mode| -> Result<Option<usize>, String> {
        let stream: Vec<Assignment> = match enumerate(&s, mode, Granularity::Intra) {
            Ok(e) => e.collect(),
            Err(_) if mode == Mode::Paper => return Ok(None),
            Err(e) => return Err(format!("seed {seed}: {e}")),
        };
        let mut hit = vec![false; o.count];
        for a in &stream {
            let id = *o
                .ids
                .get(&a.0)
                .ok_or_else(|| format!("seed {seed}: {mode:?} emitted an assignment outside the naive space"))?;
            if std::mem::replace(&mut hit[id], true) {
                return Err(format!("seed {seed}: {mode:?} emitted two members of one orbit\n{src}"));
            }
        }
        if mode == Mode::Complete && hit.iter().any(|h| !h) {
            return Err(format!(
                "seed {seed}: complete stream misses {} orbits\n{src}",
                hit.iter().filter(|h| !**h).count()
            ));
        }
        Ok(Some(stream.len()))
    };
    let complete = distinct(Mode::Complete)?.expect("complete mode always applies");
    let paper = distinct(Mode::Paper)?;
    Ok(PartitionCheck {
        holes: s.n(),
        naive: o.ids.len(),
        orbits: o.count,
        complete,
        paper,
    })
}

/// Interpret every member of up to `per_program` orbits of one
/// homogeneous random program and compare each with its representative.
/// Returns the number of orbits checked.
pub fn check_semantics(seed: u64, per_program: usize) -> Result<usize, String> {
    use spe::enumerator::{realize, representative};
    use spe::minilang::interpret;
    use spe::skeleton::{extract, ExtractOptions, Granularity};

    const BUDGET: u64 = 20_000;
    let src = random_program(seed, true);
    let prog = spe::minilang::parse(&src).map_err(|e| format!("seed {seed}: {e}"))?;
    let s = extract(&prog, ExtractOptions::default());
    let o = orbits(&s);
    let mut members: Vec<Vec<Vec<usize>>> = vec![Vec::new(); o.count];
    let mut sorted: Vec<_> = o.ids.iter().collect();
    sorted.sort();
    for (a, &id) in sorted {
        members[id].push(a.clone());
    }
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    let mut picked: Vec<usize> = (0..o.count).collect();
    for i in (1..picked.len()).rev() {
        picked.swap(i, rng.gen_range(0..=i));
    }
    picked.truncate(per_program);
    for &id in &picked {
        let first = Assignment(members[id][0].clone());
        let rep = representative(&s, &first, Granularity::Intra).map_err(|e| e.to_string())?;
        let observe = |a: &Assignment| {
            let r = interpret(&realize(&s, a).expect("valid fill"), BUDGET);
            (r.status, r.exit_code, r.stdout)
        };
        let want = observe(&rep);
        for m in &members[id] {
            let got = observe(&Assignment(m.clone()));
            if got != want {
                return Err(format!(
                    "seed {seed}: {m:?} behaves as {got:?}, representative {:?} as {want:?}\n{src}",
                    rep.0
                ));
            }
        }
    }
    Ok(picked.len())
}
