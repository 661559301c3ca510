//! Syntax tree for MiniC.
//!
//! Nodes carry source spans for diagnostics only; spans never take part in
//! equality, so a re-parsed rendering compares equal to the original tree.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Source position (1-based line and column).
#[derive(Clone, Copy, Debug, Default, Eq, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// The two scalar types of MiniC.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseType {
    /// Signed 32-bit `int`.
    Int,
    /// Unsigned 32-bit `unsigned`.
    Unsigned,
}

impl BaseType {
    pub fn c_name(self) -> &'static str {
        match self {
            BaseType::Int => "int",
            BaseType::Unsigned => "unsigned",
        }
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.c_name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Ident {
        Ident {
            name: name.into(),
            span: Span::default(),
        }
    }
}

/// Integer literal as written: decimal magnitude plus optional `u` suffix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub value: u32,
    pub unsigned: bool,
}

impl Literal {
    pub fn ty(self) -> BaseType {
        if self.unsigned {
            BaseType::Unsigned
        } else {
            BaseType::Int
        }
    }
}

/// Declaration initializer: an optionally negated literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Const {
    pub negative: bool,
    pub literal: Literal,
}

impl Const {
    /// Two's-complement bit pattern of the constant.
    pub fn bits(self) -> u32 {
        if self.negative {
            self.literal.value.wrapping_neg()
        } else {
            self.literal.value
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Declarator {
    pub name: Ident,
    pub init: Option<Const>,
}

/// `int a = 1, b;`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Declaration {
    pub ty: BaseType,
    pub declarators: Vec<Declarator>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
    BitNot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    BitAnd,
    BitOr,
    BitXor,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter. All binary operators are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::BitOr => 3,
            BinOp::BitXor => 4,
            BinOp::BitAnd => 5,
            BinOp::Eq | BinOp::Ne => 6,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 7,
            BinOp::Add | BinOp::Sub => 8,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 9,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Literal),
    Var(Ident),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Ident, Vec<Expr>),
}

impl Expr {
    /// True when the expression mentions no variable and calls no function.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Lit(_) => true,
            Expr::Var(_) | Expr::Call(..) => false,
            Expr::Unary(_, e) => e.is_constant(),
            Expr::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Assign(Ident, Expr),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    While(Expr, Box<Stmt>),
    Block(Block),
    Return(Expr),
    /// `printf("%d", e)` or `printf("%d\n", e)`.
    Print {
        expr: Expr,
        newline: bool,
    },
    /// A call evaluated for its effects.
    Call(Ident, Vec<Expr>),
}

/// A compound statement: all declarations precede all statements.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Block {
    pub decls: Vec<Declaration>,
    pub stmts: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Param {
    pub ty: BaseType,
    pub name: Ident,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FuncDef {
    pub ret: BaseType,
    pub name: Ident,
    pub params: Vec<Param>,
    pub body: Block,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Item {
    Global(Declaration),
    Func(FuncDef),
}

/// Top-level items in source order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TranslationUnit {
    pub items: Vec<Item>,
}

/// Whether an identifier slot declares a variable or refers to one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    Decl,
    Use,
}

impl TranslationUnit {
    /// Visit every variable identifier slot in source order: global declarator
    /// names, parameter names, block declarator names, assignment targets and
    /// variable reads. Function names are not slots.
    ///
    /// The resolver numbers occurrences in exactly this order.
    pub fn visit_slots_mut(&mut self, f: &mut dyn FnMut(SlotKind, &mut Ident)) {
        for item in &mut self.items {
            match item {
                Item::Global(d) => decl_slots(d, f),
                Item::Func(func) => {
                    for p in &mut func.params {
                        f(SlotKind::Decl, &mut p.name);
                    }
                    block_slots(&mut func.body, f);
                }
            }
        }
    }

    /// Read-only variant of [`visit_slots_mut`](Self::visit_slots_mut).
    pub fn slots(&self) -> Vec<(SlotKind, String)> {
        let mut copy = self.clone();
        let mut out = Vec::new();
        copy.visit_slots_mut(&mut |k, id| out.push((k, id.name.clone())));
        out
    }

    pub fn functions(&self) -> impl Iterator<Item = &FuncDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Func(f) => Some(f),
            Item::Global(_) => None,
        })
    }

    pub fn globals(&self) -> impl Iterator<Item = &Declaration> {
        self.items.iter().filter_map(|i| match i {
            Item::Global(d) => Some(d),
            Item::Func(_) => None,
        })
    }
}

fn decl_slots(d: &mut Declaration, f: &mut dyn FnMut(SlotKind, &mut Ident)) {
    for dl in &mut d.declarators {
        f(SlotKind::Decl, &mut dl.name);
    }
}

fn block_slots(b: &mut Block, f: &mut dyn FnMut(SlotKind, &mut Ident)) {
    for d in &mut b.decls {
        decl_slots(d, f);
    }
    for s in &mut b.stmts {
        stmt_slots(s, f);
    }
}

fn stmt_slots(s: &mut Stmt, f: &mut dyn FnMut(SlotKind, &mut Ident)) {
    match s {
        Stmt::Assign(target, e) => {
            f(SlotKind::Use, target);
            expr_slots(e, f);
        }
        Stmt::If(c, t, e) => {
            expr_slots(c, f);
            stmt_slots(t, f);
            if let Some(e) = e {
                stmt_slots(e, f);
            }
        }
        Stmt::While(c, body) => {
            expr_slots(c, f);
            stmt_slots(body, f);
        }
        Stmt::Block(b) => block_slots(b, f),
        Stmt::Return(e) | Stmt::Print { expr: e, .. } => expr_slots(e, f),
        Stmt::Call(_, args) => {
            for a in args {
                expr_slots(a, f);
            }
        }
    }
}

fn expr_slots(e: &mut Expr, f: &mut dyn FnMut(SlotKind, &mut Ident)) {
    match e {
        Expr::Lit(_) => {}
        Expr::Var(id) => f(SlotKind::Use, id),
        Expr::Unary(_, e) => expr_slots(e, f),
        Expr::Binary(_, l, r) => {
            expr_slots(l, f);
            expr_slots(r, f);
        }
        Expr::Call(_, args) => {
            for a in args {
                expr_slots(a, f);
            }
        }
    }
}
