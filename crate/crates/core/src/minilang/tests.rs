use super::*;

const NESTED_IF: &str = include_str!("../../tests/fixtures/nested_if.c");

fn run(src: &str) -> ExecResult {
    interpret(&parse(src).unwrap(), DEFAULT_STEP_BUDGET)
}

#[test]
fn nested_if_has_function_and_block_scopes() {
    let p = parse(NESTED_IF).unwrap();
    let below_global: Vec<_> = p.scopes.nodes.iter().filter(|n| n.depth > 0).collect();
    assert_eq!(below_global.len(), 2);
    assert_eq!(below_global[0].kind, ScopeKind::Function);
    assert_eq!(below_global[1].kind, ScopeKind::Block);
    assert_eq!(below_global[1].parent, Some(ScopeId(1)));
    let names: Vec<_> = below_global[1].vars.iter().map(|&v| p.vars[v].name.as_str()).collect();
    assert_eq!(names, ["c", "d"]);
}

#[test]
fn nested_if_prints_18() {
    let r = run(NESTED_IF);
    assert_eq!(r.status, ExecStatus::Ok);
    assert_eq!(r.stdout, b"18");
    assert_eq!(r.exit_code, 0);
}

#[test]
fn minimal_program() {
    let p = parse("int main(){return 0;}").unwrap();
    assert_eq!(p.globals().count(), 0);
    assert_eq!(p.function_defs().count(), 1);
    let r = interpret(&p, DEFAULT_STEP_BUDGET);
    assert_eq!(r.status, ExecStatus::Ok);
    assert_eq!(r.exit_code, 0);
    assert!(r.stdout.is_empty());
    assert!(r.steps_used < 5, "{}", r.steps_used);
}

#[test]
fn undeclared_identifier_reports_position() {
    let err = parse("int main(){int x; x = y; return 0;}").unwrap_err();
    assert_eq!(err.kind, ErrorKind::Undeclared("y".into()));
    assert_eq!((err.span.line, err.span.col), (1, 23));
}

#[test]
fn semantic_errors() {
    type Case = (&'static str, fn(&ErrorKind) -> bool);
    let cases: &[Case] = &[
        ("int main(){ int x; x = 1; int y; return 0; }", |k| {
            *k == ErrorKind::DeclarationAfterStatement
        }),
        (
            "int main(){ int x = 1; int y = x; return y; }",
            |k| matches!(k, ErrorKind::VariableInInitializer(n) if n == "x"),
        ),
        ("int f(void){ return 0; }", |k| *k == ErrorKind::MissingMain),
        ("int main(int a){ return a; }", |k| *k == ErrorKind::BadMain),
        ("int main(){ int x; unsigned y; x = y; return 0; }", |k| {
            matches!(k, ErrorKind::TypeMismatch { .. })
        }),
        ("int main(){ int x, x; return 0; }", |k| {
            matches!(k, ErrorKind::Redeclared(_))
        }),
        ("int main(){ return g(); }", |k| {
            matches!(k, ErrorKind::UnknownFunction(_))
        }),
        ("int f(int a){ return a; } int main(){ return f(); }", |k| {
            matches!(
                k,
                ErrorKind::ArityMismatch {
                    expected: 1,
                    found: 0,
                    ..
                }
            )
        }),
        ("int main(){ return 0 }", |k| matches!(k, ErrorKind::Syntax(_))),
    ];
    for (src, pred) in cases {
        let err = parse(src).expect_err(src);
        assert!(pred(&err.kind), "{src}: {err}");
    }
}

#[test]
fn constants_adapt_to_unsigned_context() {
    let r = run("int main(){ unsigned u; u = 0u; u = u - 1; if (u == 4294967295u) return 7; return 1; }");
    assert_eq!(r.status, ExecStatus::Ok);
    assert_eq!(r.exit_code, 7);
}

#[test]
fn globals_zero_initialized_locals_not() {
    let g = run("int a; int main(){return a - a;}");
    assert_eq!(g.status, ExecStatus::Ok);
    assert_eq!(g.exit_code, 0);
    let l = run("int main(){int a; return a - a;}");
    assert_eq!(l.status, ExecStatus::UndefinedBehavior(UbKind::UninitializedRead));
}

#[test]
fn undefined_behavior_kinds() {
    let cases = [
        ("int main(){ int x = 0; return 1 / x; }", UbKind::DivisionByZero),
        (
            "int main(){ unsigned x = 0u, y; y = 1u % x; return 0; }",
            UbKind::DivisionByZero,
        ),
        (
            "int main(){ int x = 2147483647; x = x + 1; return 0; }",
            UbKind::SignedOverflow,
        ),
        (
            "int main(){ int x = -2147483648; x = x - 1; return 0; }",
            UbKind::SignedOverflow,
        ),
        (
            "int main(){ int x = 65536; x = x * x; return 0; }",
            UbKind::SignedOverflow,
        ),
        (
            "int main(){ int x = -2147483648; x = -x; return 0; }",
            UbKind::SignedOverflow,
        ),
        (
            "int main(){ int x = -2147483648, y = -1; x = x / y; return 0; }",
            UbKind::SignedDivisionOverflow,
        ),
        (
            "int main(){ int x = -2147483648, y = -1; x = x % y; return 0; }",
            UbKind::SignedDivisionOverflow,
        ),
        (
            "int f(int a){ if (a) return 1; } int main(){ return f(0); }",
            UbKind::MissingReturn,
        ),
    ];
    for (src, kind) in cases {
        assert_eq!(run(src).status, ExecStatus::UndefinedBehavior(kind), "{src}");
    }
}

#[test]
fn unsigned_arithmetic_wraps() {
    let r = run("int main(){ unsigned x = 4294967295u; x = x + 1u; printf(\"%d\\n\", x); x = x - 1u; printf(\"%d\", x); return 0; }");
    assert_eq!(r.status, ExecStatus::Ok);
    assert_eq!(r.stdout, b"0\n-1");
}

#[test]
fn ignored_call_value_of_missing_return_is_fine() {
    let r = run("int g; int f(int a){ g = a; } int main(){ f(3); return g; }");
    assert_eq!(r.status, ExecStatus::Ok);
    assert_eq!(r.exit_code, 3);
}

#[test]
fn step_budget_exhaustion_is_not_ub() {
    let r = run("int main(){ int x = 1; while (x) x = 1; return 0; }");
    assert_eq!(r.status, ExecStatus::StepBudgetExhausted);
    assert_eq!(r.steps_used, DEFAULT_STEP_BUDGET);
    let deep = run("int f(int n){ return f(n + 1); } int main(){ return f(0); }");
    assert_eq!(deep.status, ExecStatus::StepBudgetExhausted);
}

#[test]
fn recursion_and_short_circuit() {
    let src = "int fib(int n){ if (n < 2) return n; return fib(n - 1) + fib(n - 2); }
               int main(){ int z = 0; if (z && 1 / z) return 1; if (1 || 1 / z) printf(\"%d\", fib(10)); return fib(7); }";
    let r = run(src);
    assert_eq!(r.status, ExecStatus::Ok);
    assert_eq!(r.stdout, b"55");
    assert_eq!(r.exit_code, 13);
}

#[test]
fn exit_code_truncated_to_byte() {
    assert_eq!(run("int main(){ return 257; }").exit_code, 1);
    assert_eq!(run("int main(){ return -1; }").exit_code, 255);
}

#[test]
fn shadowing_resolves_innermost() {
    let r = run("int a = 5; int main(){ int a = 1; { int a = 2; printf(\"%d\", a); } return a; }");
    assert_eq!(r.stdout, b"2");
    assert_eq!(r.exit_code, 1);
}

#[test]
fn interpretation_is_deterministic() {
    let p = parse(NESTED_IF).unwrap();
    assert_eq!(interpret(&p, 1000), interpret(&p, 1000));
}

#[test]
fn render_round_trip_preserves_structure() {
    for src in [
        NESTED_IF,
        include_str!("../../tests/fixtures/while_loop.c"),
        include_str!("../../tests/fixtures/two_pools.c"),
        "unsigned g = 3u; int h(int a, unsigned b){ if (a) { return a; } else if (b > 1u) return -a; else { a = - -a; } while (!a) { { int z; z = ~a; a = z; } } return (a + 1) * (a - 2) / -(a % 3); }
         int main(){ h(1, g); printf(\"%d\\n\", h(0, 0u)); return 0; }",
    ] {
        let p = parse(src).unwrap();
        let text = render(&p);
        let q = parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(p, q, "{text}");
        assert_eq!(render(&q), text);
        assert!(text.starts_with("#include <stdio.h>\n"));
    }
}

#[test]
fn occurrences_follow_slot_order() {
    let p = parse(NESTED_IF).unwrap();
    let slots = p.unit.slots();
    assert_eq!(slots.len(), p.occurrences.len());
    for ((kind, name), occ) in slots.iter().zip(&p.occurrences) {
        assert_eq!(*kind, occ.kind);
        assert_eq!(name, &p.vars[occ.var].name);
    }
    let names: Vec<_> = slots.iter().map(|(_, n)| n.as_str()).collect();
    assert_eq!(names, ["a", "b", "a", "c", "d", "b", "c", "d", "a", "b"]);
}
