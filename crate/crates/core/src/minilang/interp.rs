//! Reference interpreter with undefined-behavior detection.
//!
//! Evaluation is big-step over the resolved tree. Variables are looked up
//! through the occurrence numbering produced by the checker, so the
//! interpreter never re-resolves names.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::check::{Program, Storage, VarId};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// Calls nested deeper than this end the run as budget exhaustion.
pub const MAX_CALL_DEPTH: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UbKind {
    UninitializedRead,
    DivisionByZero,
    SignedOverflow,
    /// `INT_MIN / -1` or `INT_MIN % -1`.
    SignedDivisionOverflow,
    /// The value of a call that fell off the end of a non-`main` function was used.
    MissingReturn,
}

impl fmt::Display for UbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UbKind::UninitializedRead => "uninitialized read",
            UbKind::DivisionByZero => "division by zero",
            UbKind::SignedOverflow => "signed overflow",
            UbKind::SignedDivisionOverflow => "signed division overflow",
            UbKind::MissingReturn => "missing return value",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", content = "kind", rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    UndefinedBehavior(UbKind),
    StepBudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExecResult {
    pub status: ExecStatus,
    /// Process exit status: `main`'s return value modulo 256.
    pub exit_code: i32,
    pub stdout: Vec<u8>,
    pub steps_used: u64,
}

#[derive(Clone, Copy, Debug)]
struct Value {
    ty: BaseType,
    bits: u32,
}

impl Value {
    fn int(v: i32) -> Value {
        Value {
            ty: BaseType::Int,
            bits: v as u32,
        }
    }

    fn truthy(self) -> bool {
        self.bits != 0
    }

    fn convert(self, ty: BaseType) -> Value {
        Value { ty, bits: self.bits }
    }
}

enum Abort {
    Ub(UbKind),
    Budget,
}

enum Flow {
    Normal,
    Return(Value),
}

/// One activation record: local variable cells keyed by [`VarId`].
struct Frame {
    locals: Vec<(VarId, Option<Value>)>,
}

impl Frame {
    fn slot(&mut self, var: VarId) -> &mut Option<Value> {
        let i = self
            .locals
            .iter()
            .rposition(|(v, _)| *v == var)
            .expect("resolved local is live in its frame");
        &mut self.locals[i].1
    }
}

struct Machine<'p> {
    prog: &'p Program,
    globals: Vec<Option<Value>>,
    frames: Vec<Frame>,
    stdout: Vec<u8>,
    steps: u64,
    budget: u64,
    /// Index of each function's first occurrence slot.
    fn_occ_base: Vec<usize>,
}

type R<T> = Result<T, Abort>;

/// Occurrence cursor used while walking one function body. Occurrence
/// indices are static positions, so loops re-walk the same indices.
struct Cursor {
    base: usize,
}

impl<'p> Machine<'p> {
    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(Abort::Budget)
        } else {
            Ok(())
        }
    }

    fn read(&mut self, var: VarId) -> R<Value> {
        let info = &self.prog.vars[var];
        let cell = match info.storage {
            Storage::Global => self.globals[var],
            Storage::Param | Storage::Local => *self.frames.last_mut().unwrap().slot(var),
        };
        cell.ok_or(Abort::Ub(UbKind::UninitializedRead))
    }

    fn write(&mut self, var: VarId, v: Value) {
        let v = v.convert(self.prog.vars[var].ty);
        match self.prog.vars[var].storage {
            Storage::Global => self.globals[var] = Some(v),
            Storage::Param | Storage::Local => *self.frames.last_mut().unwrap().slot(var) = Some(v),
        }
    }

    fn call(&mut self, func: usize, args: Vec<Value>) -> R<Option<Value>> {
        if self.frames.len() >= MAX_CALL_DEPTH {
            return Err(Abort::Budget);
        }
        let info = &self.prog.functions[func];
        let def = self.prog.unit.functions().nth(func).expect("function index is valid");
        let mut frame = Frame { locals: Vec::new() };
        for (&p, a) in info.params.iter().zip(args) {
            frame.locals.push((p, Some(a.convert(self.prog.vars[p].ty))));
        }
        self.frames.push(frame);
        let mut cur = Cursor {
            base: self.fn_occ_base[func] + info.params.len(),
        };
        let flow = self.block_body(&def.body, &mut cur);
        self.frames.pop();
        match flow? {
            Flow::Return(v) => Ok(Some(v.convert(info.ret))),
            Flow::Normal => Ok(None),
        }
    }

    /// Declarations of a block: consume their occurrence slots and create cells.
    fn enter_decls(&mut self, decls: &[Declaration], cur: &mut Cursor) {
        for d in decls {
            for dl in &d.declarators {
                let occ = self.prog.occurrences[cur.base];
                cur.base += 1;
                let init = dl.init.map(|c| Value {
                    ty: d.ty,
                    bits: c.bits(),
                });
                self.frames.last_mut().unwrap().locals.push((occ.var, init));
            }
        }
    }

    fn block_body(&mut self, b: &Block, cur: &mut Cursor) -> R<Flow> {
        let mark = self.frames.last().unwrap().locals.len();
        self.enter_decls(&b.decls, cur);
        let mut flow = Flow::Normal;
        for s in &b.stmts {
            match self.stmt(s, cur)? {
                Flow::Normal => {}
                ret => {
                    flow = ret;
                    break;
                }
            }
        }
        self.frames.last_mut().unwrap().locals.truncate(mark);
        Ok(flow)
    }

    fn stmt(&mut self, s: &Stmt, cur: &mut Cursor) -> R<Flow> {
        self.tick()?;
        match s {
            Stmt::Assign(_, e) => {
                let target = self.prog.occurrences[cur.base].var;
                cur.base += 1;
                let v = self.expr(e, cur)?;
                self.write(target, v);
                Ok(Flow::Normal)
            }
            Stmt::If(c, t, e) => {
                let cond = self.expr(c, cur)?.truthy();
                let then_start = cur.base;
                let then_len = stmt_slot_count(t);
                let else_start = then_start + then_len;
                let after = else_start + e.as_ref().map_or(0, |e| stmt_slot_count(e));
                let flow = if cond {
                    let mut c2 = Cursor { base: then_start };
                    self.stmt(t, &mut c2)?
                } else if let Some(e) = e {
                    let mut c2 = Cursor { base: else_start };
                    self.stmt(e, &mut c2)?
                } else {
                    Flow::Normal
                };
                cur.base = after;
                Ok(flow)
            }
            Stmt::While(c, body) => {
                let start = cur.base;
                let body_len = stmt_slot_count(body);
                let cond_len = expr_slot_count(c);
                loop {
                    let mut c2 = Cursor { base: start };
                    if !self.expr(c, &mut c2)?.truthy() {
                        break;
                    }
                    if let Flow::Return(v) = self.stmt(body, &mut c2)? {
                        cur.base = start + cond_len + body_len;
                        return Ok(Flow::Return(v));
                    }
                    self.tick()?;
                }
                cur.base = start + cond_len + body_len;
                Ok(Flow::Normal)
            }
            Stmt::Block(b) => {
                let end = cur.base + block_slot_count(b);
                let flow = self.block_body(b, cur)?;
                cur.base = end;
                Ok(flow)
            }
            Stmt::Return(e) => Ok(Flow::Return(self.expr(e, cur)?)),
            Stmt::Print { expr, newline } => {
                let v = self.expr(expr, cur)?;
                let rendered = (v.bits as i32).to_string();
                self.stdout.extend_from_slice(rendered.as_bytes());
                if *newline {
                    self.stdout.push(b'\n');
                }
                Ok(Flow::Normal)
            }
            Stmt::Call(name, args) => {
                self.call_expr(name, args, cur)?;
                Ok(Flow::Normal)
            }
        }
    }

    fn call_expr(&mut self, name: &Ident, args: &[Expr], cur: &mut Cursor) -> R<Option<Value>> {
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.expr(a, cur)?);
        }
        let func = self.prog.function_index(&name.name).expect("checked call");
        self.call(func, vals)
    }

    fn expr(&mut self, e: &Expr, cur: &mut Cursor) -> R<Value> {
        self.tick()?;
        match e {
            Expr::Lit(l) => Ok(Value {
                ty: l.ty(),
                bits: l.value,
            }),
            Expr::Var(_) => {
                let var = self.prog.occurrences[cur.base].var;
                cur.base += 1;
                self.read(var)
            }
            Expr::Unary(op, inner) => {
                let v = self.expr(inner, cur)?;
                match (op, v.ty) {
                    (UnOp::Not, _) => Ok(Value::int(!v.truthy() as i32)),
                    (UnOp::BitNot, _) => Ok(Value {
                        ty: v.ty,
                        bits: !v.bits,
                    }),
                    (UnOp::Neg, BaseType::Unsigned) => Ok(Value {
                        ty: v.ty,
                        bits: v.bits.wrapping_neg(),
                    }),
                    (UnOp::Neg, BaseType::Int) => (v.bits as i32)
                        .checked_neg()
                        .map(Value::int)
                        .ok_or(Abort::Ub(UbKind::SignedOverflow)),
                }
            }
            Expr::Binary(BinOp::And, l, r) => {
                let lv = self.expr(l, cur)?;
                if !lv.truthy() {
                    cur.base += expr_slot_count(r);
                    return Ok(Value::int(0));
                }
                let rv = self.expr(r, cur)?;
                Ok(Value::int(rv.truthy() as i32))
            }
            Expr::Binary(BinOp::Or, l, r) => {
                let lv = self.expr(l, cur)?;
                if lv.truthy() {
                    cur.base += expr_slot_count(r);
                    return Ok(Value::int(1));
                }
                let rv = self.expr(r, cur)?;
                Ok(Value::int(rv.truthy() as i32))
            }
            Expr::Binary(op, l, r) => {
                let lv = self.expr(l, cur)?;
                let rv = self.expr(r, cur)?;
                binary(*op, lv, rv).map_err(Abort::Ub)
            }
            Expr::Call(name, args) => self.call_expr(name, args, cur)?.ok_or(Abort::Ub(UbKind::MissingReturn)),
        }
    }
}

fn binary(op: BinOp, l: Value, r: Value) -> Result<Value, UbKind> {
    let ty = if l.ty == BaseType::Unsigned || r.ty == BaseType::Unsigned {
        BaseType::Unsigned
    } else {
        BaseType::Int
    };
    if ty == BaseType::Unsigned {
        let (a, b) = (l.bits, r.bits);
        let bits = match op {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
            BinOp::Div | BinOp::Rem if b == 0 => return Err(UbKind::DivisionByZero),
            BinOp::Div => a / b,
            BinOp::Rem => a % b,
            BinOp::BitAnd => a & b,
            BinOp::BitOr => a | b,
            BinOp::BitXor => a ^ b,
            _ => return Ok(Value::int(compare(op, a.cmp(&b)) as i32)),
        };
        return Ok(Value { ty, bits });
    }
    let (a, b) = (l.bits as i32, r.bits as i32);
    let v = match op {
        BinOp::Add => a.checked_add(b).ok_or(UbKind::SignedOverflow)?,
        BinOp::Sub => a.checked_sub(b).ok_or(UbKind::SignedOverflow)?,
        BinOp::Mul => a.checked_mul(b).ok_or(UbKind::SignedOverflow)?,
        BinOp::Div | BinOp::Rem if b == 0 => return Err(UbKind::DivisionByZero),
        BinOp::Div => a.checked_div(b).ok_or(UbKind::SignedDivisionOverflow)?,
        BinOp::Rem => a.checked_rem(b).ok_or(UbKind::SignedDivisionOverflow)?,
        BinOp::BitAnd => a & b,
        BinOp::BitOr => a | b,
        BinOp::BitXor => a ^ b,
        _ => compare(op, a.cmp(&b)) as i32,
    };
    Ok(Value::int(v))
}

fn compare(op: BinOp, ord: std::cmp::Ordering) -> bool {
    use std::cmp::Ordering::*;
    match op {
        BinOp::Lt => ord == Less,
        BinOp::Le => ord != Greater,
        BinOp::Gt => ord == Greater,
        BinOp::Ge => ord != Less,
        BinOp::Eq => ord == Equal,
        BinOp::Ne => ord != Equal,
        _ => unreachable!("not a comparison"),
    }
}

fn expr_slot_count(e: &Expr) -> usize {
    match e {
        Expr::Lit(_) => 0,
        Expr::Var(_) => 1,
        Expr::Unary(_, e) => expr_slot_count(e),
        Expr::Binary(_, l, r) => expr_slot_count(l) + expr_slot_count(r),
        Expr::Call(_, args) => args.iter().map(expr_slot_count).sum(),
    }
}

fn stmt_slot_count(s: &Stmt) -> usize {
    match s {
        Stmt::Assign(_, e) => 1 + expr_slot_count(e),
        Stmt::If(c, t, e) => expr_slot_count(c) + stmt_slot_count(t) + e.as_ref().map_or(0, |e| stmt_slot_count(e)),
        Stmt::While(c, b) => expr_slot_count(c) + stmt_slot_count(b),
        Stmt::Block(b) => block_slot_count(b),
        Stmt::Return(e) | Stmt::Print { expr: e, .. } => expr_slot_count(e),
        Stmt::Call(_, args) => args.iter().map(expr_slot_count).sum(),
    }
}

fn block_slot_count(b: &Block) -> usize {
    b.decls.iter().map(|d| d.declarators.len()).sum::<usize>() + b.stmts.iter().map(stmt_slot_count).sum::<usize>()
}

/// Run `main` under a step budget.
pub fn interpret(prog: &Program, step_budget: u64) -> ExecResult {
    let mut globals = vec![None; prog.vars.len()];
    for (id, v) in prog.vars.iter().enumerate() {
        if v.storage == Storage::Global {
            globals[id] = Some(Value {
                ty: v.ty,
                bits: v.init.map_or(0, |c| c.bits()),
            });
        }
    }
    // First occurrence index of each function's parameter list.
    let mut fn_occ_base = Vec::with_capacity(prog.functions.len());
    let mut next = 0usize;
    for item in &prog.unit.items {
        match item {
            Item::Global(d) => next += d.declarators.len(),
            Item::Func(f) => {
                fn_occ_base.push(next);
                next += f.params.len() + block_slot_count(&f.body);
            }
        }
    }
    debug_assert_eq!(next, prog.occurrences.len());

    let mut m = Machine {
        prog,
        globals,
        frames: Vec::new(),
        stdout: Vec::new(),
        steps: 0,
        budget: step_budget.max(1),
        fn_occ_base,
    };
    let main = prog.function_index("main").expect("checked program has main");
    let outcome = m.call(main, Vec::new());
    let (status, exit_code) = match outcome {
        Ok(v) => (ExecStatus::Ok, v.map_or(0, |v| (v.bits & 0xff) as i32)),
        Err(Abort::Ub(kind)) => (ExecStatus::UndefinedBehavior(kind), 0),
        Err(Abort::Budget) => (ExecStatus::StepBudgetExhausted, 0),
    };
    ExecResult {
        status,
        exit_code,
        stdout: m.stdout,
        steps_used: m.steps.min(m.budget),
    }
}
