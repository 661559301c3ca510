//! MiniC: a strict subset of C with `int`/`unsigned` scalars, lexical block
//! scopes, in-file function calls and `printf("%d", e)` output.
//!
//! ```text
//! unit      := (decl | func)*
//! decl      := type IDENT ['=' const] (',' IDENT ['=' const])* ';'
//! func      := type IDENT '(' ['void' | type IDENT (',' type IDENT)*] ')' block
//! block     := '{' decl* stmt* '}'
//! stmt      := IDENT '=' expr ';' | IDENT '(' args ')' ';' | block
//!            | 'if' '(' expr ')' stmt ['else' stmt] | 'while' '(' expr ')' stmt
//!            | 'return' expr ';' | 'printf' '(' ("\"%d\"" | "\"%d\\n\"") ',' expr ')' ';'
//! expr      := binary expression over || && | ^ & == != < <= > >= + - * / %
//!            | unary (- ! ~) | INT ['u'] | IDENT | IDENT '(' args ')' | '(' expr ')'
//! type      := 'int' | 'unsigned' ['int']
//! const     := ['-'] INT ['u']
//! ```
//!
//! Lines starting with `#` are ignored so rendered files parse again.

mod ast;
mod check;
mod interp;
mod parse;
mod render;

use thiserror::Error;

pub use ast::*;
pub use check::{FuncInfo, Occurrence, Program, ScopeId, ScopeKind, ScopeNode, ScopeTree, Storage, VarId, VarInfo};
pub use interp::{ExecResult, ExecStatus, UbKind, DEFAULT_STEP_BUDGET, MAX_CALL_DEPTH};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("declaration after statement")]
    DeclarationAfterStatement,
    #[error("initializer refers to variable `{0}`; initializers must be constants")]
    VariableInInitializer(String),
    #[error("use of undeclared identifier `{0}`")]
    Undeclared(String),
    #[error("call to unknown function `{0}`")]
    UnknownFunction(String),
    #[error("redeclaration of `{0}`")]
    Redeclared(String),
    #[error("`{0}` names both a variable and a function")]
    NameConflict(String),
    #[error("type mismatch: expected `{expected}`, found `{found}`")]
    TypeMismatch { expected: BaseType, found: BaseType },
    #[error("`{function}` takes {expected} arguments, {found} given")]
    ArityMismatch {
        function: String,
        expected: usize,
        found: usize,
    },
    #[error("no `main` function")]
    MissingMain,
    #[error("`main` must take no parameters and return int")]
    BadMain,
}

/// A parse or semantic error with its source position.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct Error {
    pub kind: ErrorKind,
    pub span: Span,
}

impl Error {
    pub(crate) fn new(kind: ErrorKind, span: Span) -> Error {
        Error { kind, span }
    }
}

/// Parse and resolve MiniC source text.
pub fn parse(source: &str) -> Result<Program, Error> {
    check::check(parse::parse_unit(source)?)
}

/// Resolve an already-built syntax tree (used to re-validate realized variants).
pub fn resolve(unit: TranslationUnit) -> Result<Program, Error> {
    check::check(unit)
}

/// Run `main`; see [`ExecResult`] for the possible outcomes.
pub fn interpret(p: &Program, step_budget: u64) -> ExecResult {
    interp::interpret(p, step_budget)
}

pub fn render(p: &Program) -> String {
    render::render_unit(&p.unit)
}

pub fn render_unit(unit: &TranslationUnit) -> String {
    render::render_unit(unit)
}

#[cfg(test)]
mod tests;
