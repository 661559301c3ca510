//! Scope and type resolution.

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::{Error, ErrorKind};

pub type VarId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScopeId(pub usize);

impl ScopeId {
    pub const GLOBAL: ScopeId = ScopeId(0);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Storage {
    Global,
    Param,
    Local,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub ty: BaseType,
    pub scope: ScopeId,
    pub init: Option<Const>,
    pub storage: Storage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScopeKind {
    Global,
    /// Parameters plus the top-level declarations of a function body.
    Function,
    Block,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScopeNode {
    pub parent: Option<ScopeId>,
    pub kind: ScopeKind,
    /// Index of the enclosing function in [`Program::functions`].
    pub function: Option<usize>,
    /// Global scope is depth 0, function scopes depth 1, blocks deeper.
    pub depth: usize,
    /// Variables in declaration order.
    pub vars: Vec<VarId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScopeTree {
    pub nodes: Vec<ScopeNode>,
}

impl ScopeTree {
    pub fn node(&self, id: ScopeId) -> &ScopeNode {
        &self.nodes[id.0]
    }

    /// Scopes from the global root down to `id`, inclusive.
    pub fn path(&self, id: ScopeId) -> Vec<ScopeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.node(cur).parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn is_ancestor_or_self(&self, anc: ScopeId, id: ScopeId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == anc {
                return true;
            }
            cur = self.node(c).parent;
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncInfo {
    pub name: String,
    pub ret: BaseType,
    pub params: Vec<VarId>,
    pub scope: ScopeId,
}

/// A resolved variable slot (see [`TranslationUnit::visit_slots_mut`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub kind: SlotKind,
    pub var: VarId,
    /// Scope in which the slot appears.
    pub scope: ScopeId,
    pub function: Option<usize>,
}

/// A parsed, scope-resolved and type-checked MiniC program.
#[derive(Clone, Debug)]
pub struct Program {
    pub unit: TranslationUnit,
    pub scopes: ScopeTree,
    pub vars: Vec<VarInfo>,
    pub functions: Vec<FuncInfo>,
    /// Every variable slot in source order.
    pub occurrences: Vec<Occurrence>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Program) -> bool {
        self.unit == other.unit
    }
}

impl Program {
    pub fn globals(&self) -> impl Iterator<Item = &Declaration> {
        self.unit.globals()
    }

    pub fn function_defs(&self) -> impl Iterator<Item = &FuncDef> {
        self.unit.functions()
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }
}

struct Checker {
    scopes: ScopeTree,
    vars: Vec<VarInfo>,
    functions: Vec<FuncInfo>,
    occurrences: Vec<Occurrence>,
    /// Innermost scope first.
    stack: Vec<ScopeId>,
    current_fn: Option<usize>,
}

/// Type of a checked expression; constants adapt to the other operand.
#[derive(Clone, Copy)]
struct ExprTy {
    ty: BaseType,
    constant: bool,
}

impl Checker {
    fn scope(&self) -> ScopeId {
        *self.stack.last().expect("scope stack is never empty")
    }

    fn push_scope(&mut self, kind: ScopeKind) -> ScopeId {
        let parent = self.scope();
        let id = ScopeId(self.scopes.nodes.len());
        self.scopes.nodes.push(ScopeNode {
            parent: Some(parent),
            kind,
            function: self.current_fn,
            depth: self.scopes.node(parent).depth + 1,
            vars: Vec::new(),
        });
        self.stack.push(id);
        id
    }

    fn declare(&mut self, ident: &Ident, ty: BaseType, init: Option<Const>, storage: Storage) -> Result<VarId, Error> {
        let scope = self.scope();
        let clash = self
            .scopes
            .node(scope)
            .vars
            .iter()
            .any(|&v| self.vars[v].name == ident.name);
        if clash {
            return Err(Error::new(ErrorKind::Redeclared(ident.name.clone()), ident.span));
        }
        if self.functions.iter().any(|f| f.name == ident.name) {
            return Err(Error::new(ErrorKind::NameConflict(ident.name.clone()), ident.span));
        }
        let id = self.vars.len();
        self.vars.push(VarInfo {
            name: ident.name.clone(),
            ty,
            scope,
            init,
            storage,
        });
        self.scopes.nodes[scope.0].vars.push(id);
        self.occurrences.push(Occurrence {
            kind: SlotKind::Decl,
            var: id,
            scope,
            function: self.current_fn,
        });
        Ok(id)
    }

    fn lookup(&self, name: &str) -> Option<VarId> {
        self.stack.iter().rev().find_map(|&s| {
            self.scopes
                .node(s)
                .vars
                .iter()
                .rev()
                .copied()
                .find(|&v| self.vars[v].name == name)
        })
    }

    fn use_var(&mut self, ident: &Ident) -> Result<BaseType, Error> {
        let var = self
            .lookup(&ident.name)
            .ok_or_else(|| Error::new(ErrorKind::Undeclared(ident.name.clone()), ident.span))?;
        self.occurrences.push(Occurrence {
            kind: SlotKind::Use,
            var,
            scope: self.scope(),
            function: self.current_fn,
        });
        Ok(self.vars[var].ty)
    }

    fn declaration(&mut self, d: &Declaration, storage: Storage) -> Result<(), Error> {
        for dl in &d.declarators {
            if let Some(c) = dl.init {
                if d.ty == BaseType::Int && c.literal.unsigned {
                    return Err(Error::new(
                        ErrorKind::TypeMismatch {
                            expected: BaseType::Int,
                            found: BaseType::Unsigned,
                        },
                        dl.name.span,
                    ));
                }
            }
            self.declare(&dl.name, d.ty, dl.init, storage)?;
        }
        Ok(())
    }

    fn unit(&mut self, unit: &TranslationUnit) -> Result<(), Error> {
        for item in &unit.items {
            match item {
                Item::Global(d) => self.declaration(d, Storage::Global)?,
                Item::Func(f) => self.function(f)?,
            }
        }
        let main = self
            .functions
            .iter()
            .position(|f| f.name == "main")
            .ok_or_else(|| Error::new(ErrorKind::MissingMain, Span::default()))?;
        let info = &self.functions[main];
        if !info.params.is_empty() || info.ret != BaseType::Int {
            let span = unit
                .functions()
                .find(|f| f.name.name == "main")
                .map(|f| f.name.span)
                .unwrap_or_default();
            return Err(Error::new(ErrorKind::BadMain, span));
        }
        Ok(())
    }

    fn function(&mut self, f: &FuncDef) -> Result<(), Error> {
        if self.functions.iter().any(|g| g.name == f.name.name) {
            return Err(Error::new(ErrorKind::Redeclared(f.name.name.clone()), f.name.span));
        }
        if self
            .vars
            .iter()
            .any(|v| v.scope == ScopeId::GLOBAL && v.name == f.name.name)
        {
            return Err(Error::new(ErrorKind::NameConflict(f.name.name.clone()), f.name.span));
        }
        let index = self.functions.len();
        self.current_fn = Some(index);
        let scope = self.push_scope(ScopeKind::Function);
        self.functions.push(FuncInfo {
            name: f.name.name.clone(),
            ret: f.ret,
            params: Vec::new(),
            scope,
        });
        for p in &f.params {
            let id = self.declare(&p.name, p.ty, None, Storage::Param)?;
            self.functions[index].params.push(id);
        }
        for d in &f.body.decls {
            self.declaration(d, Storage::Local)?;
        }
        for s in &f.body.stmts {
            self.stmt(s, f.ret)?;
        }
        self.stack.pop();
        self.current_fn = None;
        Ok(())
    }

    fn block(&mut self, b: &Block, ret: BaseType) -> Result<(), Error> {
        self.push_scope(ScopeKind::Block);
        for d in &b.decls {
            self.declaration(d, Storage::Local)?;
        }
        for s in &b.stmts {
            self.stmt(s, ret)?;
        }
        self.stack.pop();
        Ok(())
    }

    fn expect_ty(&self, expected: BaseType, got: ExprTy, span: Span) -> Result<(), Error> {
        if !got.constant && got.ty != expected {
            return Err(Error::new(
                ErrorKind::TypeMismatch {
                    expected,
                    found: got.ty,
                },
                span,
            ));
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt, ret: BaseType) -> Result<(), Error> {
        match s {
            Stmt::Assign(target, e) => {
                let ty = self.use_var(target)?;
                let et = self.expr(e)?;
                self.expect_ty(ty, et, target.span)
            }
            Stmt::If(c, t, e) => {
                self.expr(c)?;
                self.stmt(t, ret)?;
                if let Some(e) = e {
                    self.stmt(e, ret)?;
                }
                Ok(())
            }
            Stmt::While(c, body) => {
                self.expr(c)?;
                self.stmt(body, ret)
            }
            Stmt::Block(b) => self.block(b, ret),
            Stmt::Return(e) => {
                let et = self.expr(e)?;
                self.expect_ty(ret, et, expr_span(e))
            }
            Stmt::Print { expr, .. } => self.expr(expr).map(|_| ()),
            Stmt::Call(name, args) => self.call(name, args).map(|_| ()),
        }
    }

    fn call(&mut self, name: &Ident, args: &[Expr]) -> Result<BaseType, Error> {
        let idx = self
            .functions
            .iter()
            .position(|f| f.name == name.name)
            .ok_or_else(|| Error::new(ErrorKind::UnknownFunction(name.name.clone()), name.span))?;
        let (params, ret) = {
            let f = &self.functions[idx];
            (f.params.iter().map(|&p| self.vars[p].ty).collect::<Vec<_>>(), f.ret)
        };
        if params.len() != args.len() {
            return Err(Error::new(
                ErrorKind::ArityMismatch {
                    function: name.name.clone(),
                    expected: params.len(),
                    found: args.len(),
                },
                name.span,
            ));
        }
        for (a, ty) in args.iter().zip(params) {
            let at = self.expr(a)?;
            self.expect_ty(ty, at, expr_span(a))?;
        }
        Ok(ret)
    }

    fn expr(&mut self, e: &Expr) -> Result<ExprTy, Error> {
        match e {
            Expr::Lit(l) => Ok(ExprTy {
                ty: l.ty(),
                constant: true,
            }),
            Expr::Var(id) => Ok(ExprTy {
                ty: self.use_var(id)?,
                constant: false,
            }),
            Expr::Unary(op, inner) => {
                let t = self.expr(inner)?;
                Ok(match op {
                    UnOp::Not => ExprTy {
                        ty: BaseType::Int,
                        constant: t.constant,
                    },
                    UnOp::Neg | UnOp::BitNot => t,
                })
            }
            Expr::Binary(op, l, r) => {
                let lt = self.expr(l)?;
                let rt = self.expr(r)?;
                let constant = lt.constant && rt.constant;
                if op.is_logical() {
                    return Ok(ExprTy {
                        ty: BaseType::Int,
                        constant,
                    });
                }
                if !lt.constant && !rt.constant && lt.ty != rt.ty {
                    return Err(Error::new(
                        ErrorKind::TypeMismatch {
                            expected: lt.ty,
                            found: rt.ty,
                        },
                        expr_span(r),
                    ));
                }
                let common = if lt.ty == BaseType::Unsigned || rt.ty == BaseType::Unsigned {
                    BaseType::Unsigned
                } else {
                    BaseType::Int
                };
                Ok(ExprTy {
                    ty: if op.is_comparison() { BaseType::Int } else { common },
                    constant,
                })
            }
            Expr::Call(name, args) => Ok(ExprTy {
                ty: self.call(name, args)?,
                constant: false,
            }),
        }
    }
}

pub(crate) fn expr_span(e: &Expr) -> Span {
    match e {
        Expr::Lit(_) => Span::default(),
        Expr::Var(id) | Expr::Call(id, _) => id.span,
        Expr::Unary(_, e) => expr_span(e),
        Expr::Binary(_, l, r) => {
            let s = expr_span(l);
            if s.line == 0 {
                expr_span(r)
            } else {
                s
            }
        }
    }
}

/// Resolve scopes and types of a syntax tree.
pub fn check(unit: TranslationUnit) -> Result<Program, Error> {
    let mut c = Checker {
        scopes: ScopeTree {
            nodes: vec![ScopeNode {
                parent: None,
                kind: ScopeKind::Global,
                function: None,
                depth: 0,
                vars: Vec::new(),
            }],
        },
        vars: Vec::new(),
        functions: Vec::new(),
        occurrences: Vec::new(),
        stack: vec![ScopeId::GLOBAL],
        current_fn: None,
    };
    c.unit(&unit)?;
    Ok(Program {
        unit,
        scopes: c.scopes,
        vars: c.vars,
        functions: c.functions,
        occurrences: c.occurrences,
    })
}
