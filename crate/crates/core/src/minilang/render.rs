//! C text emission.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

/// Render a translation unit as a compilable C file.
pub fn render_unit(unit: &TranslationUnit) -> String {
    let mut out = String::from("#include <stdio.h>\n");
    for item in &unit.items {
        match item {
            Item::Global(d) => {
                out.push('\n');
                decl(&mut out, d, 0);
            }
            Item::Func(f) => {
                out.push('\n');
                func(&mut out, f);
            }
        }
    }
    out
}

fn pad(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn decl(out: &mut String, d: &Declaration, depth: usize) {
    pad(out, depth);
    out.push_str(d.ty.c_name());
    out.push(' ');
    for (i, dl) in d.declarators.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&dl.name.name);
        if let Some(c) = dl.init {
            out.push_str(" = ");
            if c.negative {
                out.push('-');
            }
            literal(out, c.literal);
        }
    }
    out.push_str(";\n");
}

fn literal(out: &mut String, l: Literal) {
    let _ = write!(out, "{}{}", l.value, if l.unsigned { "u" } else { "" });
}

fn func(out: &mut String, f: &FuncDef) {
    let _ = write!(out, "{} {}(", f.ret.c_name(), f.name.name);
    if f.params.is_empty() {
        out.push_str("void");
    }
    for (i, p) in f.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {}", p.ty.c_name(), p.name.name);
    }
    out.push_str(") ");
    block(out, &f.body, 0);
    out.push('\n');
}

/// Emits `{ ... }` starting at the current column; the closing brace is indented to `depth`.
fn block(out: &mut String, b: &Block, depth: usize) {
    out.push_str("{\n");
    for d in &b.decls {
        decl(out, d, depth + 1);
    }
    for s in &b.stmts {
        pad(out, depth + 1);
        stmt(out, s, depth + 1);
    }
    pad(out, depth);
    out.push('}');
}

/// Body of `if`/`while`: blocks stay on the header line, other statements go on their own line.
fn substmt(out: &mut String, s: &Stmt, depth: usize) {
    if let Stmt::Block(b) = s {
        out.push(' ');
        block(out, b, depth);
    } else {
        out.push('\n');
        pad(out, depth + 1);
        stmt(out, s, depth + 1);
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    match s {
        Stmt::Assign(t, e) => {
            let _ = write!(out, "{} = ", t.name);
            expr(out, e, 0);
            out.push_str(";\n");
        }
        Stmt::If(c, t, e) => {
            out.push_str("if (");
            expr(out, c, 0);
            out.push(')');
            substmt(out, t, depth);
            if let Some(e) = e {
                if matches!(**t, Stmt::Block(_)) {
                    out.push(' ');
                } else {
                    pad(out, depth);
                }
                out.push_str("else");
                if let Stmt::If(..) = **e {
                    out.push(' ');
                    stmt(out, e, depth);
                } else {
                    substmt(out, e, depth);
                    if matches!(**e, Stmt::Block(_)) {
                        out.push('\n');
                    }
                }
            } else if matches!(**t, Stmt::Block(_)) {
                out.push('\n');
            }
        }
        Stmt::While(c, body) => {
            out.push_str("while (");
            expr(out, c, 0);
            out.push(')');
            substmt(out, body, depth);
            if matches!(**body, Stmt::Block(_)) {
                out.push('\n');
            }
        }
        Stmt::Block(b) => {
            block(out, b, depth);
            out.push('\n');
        }
        Stmt::Return(e) => {
            out.push_str("return ");
            expr(out, e, 0);
            out.push_str(";\n");
        }
        Stmt::Print { expr: e, newline } => {
            out.push_str(if *newline {
                "printf(\"%d\\n\", "
            } else {
                "printf(\"%d\", "
            });
            expr(out, e, 0);
            out.push_str(");\n");
        }
        Stmt::Call(name, args) => {
            call(out, name, args);
            out.push_str(";\n");
        }
    }
}

fn call(out: &mut String, name: &Ident, args: &[Expr]) {
    out.push_str(&name.name);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, a, 0);
    }
    out.push(')');
}

/// `min_prec` is the weakest operator that may appear unparenthesized here.
fn expr(out: &mut String, e: &Expr, min_prec: u8) {
    match e {
        Expr::Lit(l) => literal(out, *l),
        Expr::Var(id) => out.push_str(&id.name),
        Expr::Call(name, args) => call(out, name, args),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
                UnOp::BitNot => '~',
            };
            out.push(sym);
            let mut s = String::new();
            expr(&mut s, inner, u8::MAX);
            // Keep `- -x` from lexing as a decrement.
            if *op == UnOp::Neg && s.starts_with('-') {
                out.push(' ');
            }
            out.push_str(&s);
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let paren = p < min_prec;
            if paren {
                out.push('(');
            }
            expr(out, l, p);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, r, p + 1);
            if paren {
                out.push(')');
            }
        }
    }
}
