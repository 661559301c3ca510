//! Lexer and recursive-descent parser producing a [`TranslationUnit`].

use super::ast::*;
use super::{Error, ErrorKind};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int { value: u64, unsigned: bool },
    Str(String),
    KwInt,
    KwUnsigned,
    KwVoid,
    KwIf,
    KwElse,
    KwWhile,
    KwReturn,
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: Span,
}

const PUNCTS: &[&str] = &[
    "&&", "||", "==", "!=", "<=", ">=", "(", ")", "{", "}", ";", ",", "=", "+", "-", "*", "/", "%", "<", ">", "!", "~",
    "&", "|", "^",
];

fn lex(src: &str) -> Result<Vec<Token>, Error> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut at_line_start = true;

    macro_rules! bump {
        ($n:expr) => {{
            for _ in 0..$n {
                if bytes[i] == b'\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        let span = Span { line, col };
        if c == b'\n' {
            bump!(1);
            at_line_start = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            bump!(1);
            continue;
        }
        // Preprocessor lines (the `#include <stdio.h>` header) are ignored.
        if c == b'#' && at_line_start {
            while i < bytes.len() && bytes[i] != b'\n' {
                bump!(1);
            }
            continue;
        }
        at_line_start = false;
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                bump!(1);
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            match src[i + 2..].find("*/") {
                Some(end) => bump!(end + 4),
                None => return Err(Error::new(ErrorKind::Syntax("unterminated comment".into()), span)),
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                bump!(1);
            }
            let word = &src[start..i];
            let tok = match word {
                "int" => Tok::KwInt,
                "unsigned" => Tok::KwUnsigned,
                "void" => Tok::KwVoid,
                "if" => Tok::KwIf,
                "else" => Tok::KwElse,
                "while" => Tok::KwWhile,
                "return" => Tok::KwReturn,
                _ => Tok::Ident(word.to_string()),
            };
            out.push(Token { tok, span });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                bump!(1);
            }
            let digits = &src[start..i];
            if digits.len() > 1 && digits.starts_with('0') {
                return Err(Error::new(
                    ErrorKind::Syntax("only decimal literals are supported".into()),
                    span,
                ));
            }
            let value: u64 = digits
                .parse()
                .map_err(|_| Error::new(ErrorKind::Syntax("integer literal too large".into()), span))?;
            let mut unsigned = false;
            if i < bytes.len() && (bytes[i] == b'u' || bytes[i] == b'U') {
                unsigned = true;
                bump!(1);
            }
            if i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                return Err(Error::new(ErrorKind::Syntax("unsupported literal suffix".into()), span));
            }
            out.push(Token {
                tok: Tok::Int { value, unsigned },
                span,
            });
            continue;
        }
        if c == b'"' {
            bump!(1);
            let mut s = String::new();
            loop {
                if i >= bytes.len() || bytes[i] == b'\n' {
                    return Err(Error::new(ErrorKind::Syntax("unterminated string".into()), span));
                }
                match bytes[i] {
                    b'"' => {
                        bump!(1);
                        break;
                    }
                    b'\\' if i + 1 < bytes.len() => {
                        match bytes[i + 1] {
                            b'n' => s.push('\n'),
                            b'\\' => s.push('\\'),
                            b'"' => s.push('"'),
                            _ => {
                                return Err(Error::new(
                                    ErrorKind::Syntax("unsupported escape sequence".into()),
                                    span,
                                ))
                            }
                        }
                        bump!(2);
                    }
                    b => {
                        s.push(b as char);
                        bump!(1);
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), span });
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                out.push(Token {
                    tok: Tok::Punct(p),
                    span,
                });
                bump!(p.len());
            }
            None => {
                return Err(Error::new(
                    ErrorKind::Syntax(format!("unexpected character {:?}", c as char)),
                    span,
                ))
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, col },
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Error>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Error::new(ErrorKind::Syntax(msg.into()), self.span()))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.syntax(format!("expected `{p}`, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.next();
                Ok(Ident { name, span })
            }
            other => self.syntax(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn at_type(&self) -> bool {
        matches!(self.peek(), Tok::KwInt | Tok::KwUnsigned)
    }

    /// `int` | `unsigned` | `unsigned int`
    fn base_type(&mut self) -> PResult<BaseType> {
        match self.peek() {
            Tok::KwInt => {
                self.next();
                Ok(BaseType::Int)
            }
            Tok::KwUnsigned => {
                self.next();
                if matches!(self.peek(), Tok::KwInt) {
                    self.next();
                }
                Ok(BaseType::Unsigned)
            }
            other => self.syntax(format!("expected a type, found {}", describe(other))),
        }
    }

    fn unit(&mut self) -> PResult<TranslationUnit> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            let ty = self.base_type()?;
            let is_func = matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Punct("("));
            if is_func {
                items.push(Item::Func(self.func_rest(ty)?));
            } else {
                items.push(Item::Global(self.decl_rest(ty)?));
            }
        }
        Ok(TranslationUnit { items })
    }

    fn func_rest(&mut self, ret: BaseType) -> PResult<FuncDef> {
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if matches!(self.peek(), Tok::KwVoid) && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.next();
        } else if !self.is_punct(")") {
            loop {
                let ty = self.base_type()?;
                let name = self.ident()?;
                params.push(Param { ty, name });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        if !self.is_punct("{") {
            return self.syntax("expected function body (prototypes are not supported)");
        }
        let body = self.block()?;
        Ok(FuncDef {
            ret,
            name,
            params,
            body,
        })
    }

    fn decl_rest(&mut self, ty: BaseType) -> PResult<Declaration> {
        let mut declarators = Vec::new();
        loop {
            let name = self.ident()?;
            let init = if self.eat_punct("=") {
                Some(self.constant()?)
            } else {
                None
            };
            declarators.push(Declarator { name, init });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        Ok(Declaration { ty, declarators })
    }

    fn constant(&mut self) -> PResult<Const> {
        let span = self.span();
        let negative = self.eat_punct("-");
        match self.peek().clone() {
            Tok::Int { value, unsigned } => {
                self.next();
                let limit = match (unsigned, negative) {
                    (true, _) => u32::MAX as u64,
                    (false, true) => 1u64 << 31,
                    (false, false) => i32::MAX as u64,
                };
                if value > limit {
                    return Err(Error::new(
                        ErrorKind::Syntax("integer constant out of range".into()),
                        span,
                    ));
                }
                Ok(Const {
                    negative,
                    literal: Literal {
                        value: value as u32,
                        unsigned,
                    },
                })
            }
            Tok::Ident(name) => Err(Error::new(ErrorKind::VariableInInitializer(name), self.span())),
            _ => self.syntax("initializers must be integer constants"),
        }
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect_punct("{")?;
        let mut block = Block::default();
        while !self.is_punct("}") {
            if *self.peek() == Tok::Eof {
                return self.syntax("unexpected end of input inside block");
            }
            if self.at_type() {
                if !block.stmts.is_empty() {
                    return Err(Error::new(ErrorKind::DeclarationAfterStatement, self.span()));
                }
                let ty = self.base_type()?;
                block.decls.push(self.decl_rest(ty)?);
            } else {
                block.stmts.push(self.stmt()?);
            }
        }
        self.expect_punct("}")?;
        Ok(block)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        match self.peek().clone() {
            Tok::Punct("{") => Ok(Stmt::Block(self.block()?)),
            Tok::KwIf => {
                self.next();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then = Box::new(self.stmt()?);
                let els = if matches!(self.peek(), Tok::KwElse) {
                    self.next();
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                Ok(Stmt::If(cond, then, els))
            }
            Tok::KwWhile => {
                self.next();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                Ok(Stmt::While(cond, Box::new(self.stmt()?)))
            }
            Tok::KwReturn => {
                self.next();
                let e = self.expr()?;
                self.expect_punct(";")?;
                Ok(Stmt::Return(e))
            }
            Tok::KwInt | Tok::KwUnsigned => Err(Error::new(ErrorKind::DeclarationAfterStatement, self.span())),
            Tok::Ident(name) if name == "printf" => {
                self.next();
                self.expect_punct("(")?;
                let span = self.span();
                let newline = match self.next().tok {
                    Tok::Str(s) if s == "%d" => false,
                    Tok::Str(s) if s == "%d\n" => true,
                    _ => {
                        return Err(Error::new(
                            ErrorKind::Syntax("printf format must be \"%d\" or \"%d\\n\"".into()),
                            span,
                        ))
                    }
                };
                self.expect_punct(",")?;
                let expr = self.expr()?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                Ok(Stmt::Print { expr, newline })
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.eat_punct("=") {
                    let e = self.expr()?;
                    self.expect_punct(";")?;
                    Ok(Stmt::Assign(name, e))
                } else if self.is_punct("(") {
                    let args = self.call_args()?;
                    self.expect_punct(";")?;
                    Ok(Stmt::Call(name, args))
                } else {
                    self.syntax("expected `=` or `(` after identifier")
                }
            }
            other => self.syntax(format!("expected a statement, found {}", describe(&other))),
        }
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek() else {
            return None;
        };
        Some(match *p {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            "&" => BinOp::BitAnd,
            "|" => BinOp::BitOr,
            "^" => BinOp::BitXor,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.next();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Tok::Punct("-") => Some(UnOp::Neg),
            Tok::Punct("!") => Some(UnOp::Not),
            Tok::Punct("~") => Some(UnOp::BitNot),
            _ => None,
        };
        if let Some(op) = op {
            self.next();
            return Ok(Expr::Unary(op, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int { value, unsigned } => {
                self.next();
                let limit = if unsigned { u32::MAX as u64 } else { i32::MAX as u64 };
                if value > limit {
                    return Err(Error::new(
                        ErrorKind::Syntax("integer literal out of range".into()),
                        span,
                    ));
                }
                Ok(Expr::Lit(Literal {
                    value: value as u32,
                    unsigned,
                }))
            }
            Tok::Ident(_) => {
                let id = self.ident()?;
                if self.is_punct("(") {
                    let args = self.call_args()?;
                    Ok(Expr::Call(id, args))
                } else {
                    Ok(Expr::Var(id))
                }
            }
            Tok::Punct("(") => {
                self.next();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            other => self.syntax(format!("expected an expression, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Int { value, .. } => format!("literal `{value}`"),
        Tok::Str(_) => "string literal".into(),
        Tok::KwInt => "`int`".into(),
        Tok::KwUnsigned => "`unsigned`".into(),
        Tok::KwVoid => "`void`".into(),
        Tok::KwIf => "`if`".into(),
        Tok::KwElse => "`else`".into(),
        Tok::KwWhile => "`while`".into(),
        Tok::KwReturn => "`return`".into(),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Parse MiniC source into an unresolved syntax tree.
pub fn parse_unit(src: &str) -> Result<TranslationUnit, Error> {
    let toks = lex(src)?;
    Parser { toks, pos: 0 }.unit()
}
