mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::program;
use common::programs::{straight_line_source, straight_line_stmts, POSTS, PRES};
use ooheap::entailment::{Spatial, SymHeap};
use ooheap::symexec::{verify_function, ExecOptions, Executor, Status, Step, SymState};
use ooheap::SymExpr;
use proptest::prelude::*;

fn straight_line() -> impl Strategy<Value = String> {
    let pool = straight_line_stmts();
    (prop::collection::vec(prop::sample::select(pool), 0..=4), prop::sample::select(&PRES[..]), prop::sample::select(&POSTS[..])).prop_map(
        |(stmts, pre, post)| {
            let stmts: Vec<&str> = stmts.iter().map(String::as_str).collect();
            straight_line_source(&stmts, pre, post)
        },
    )
}

/// Branching programs over two integer parameters.
#[derive(Debug, Clone)]
enum Node {
    Set(i64),
    Ite(&'static str, &'static str, String, Vec<Node>, Vec<Node>),
}

fn ites(b: &[Node]) -> usize {
    b.iter()
        .map(|n| match n {
            Node::Set(_) => 0,
            Node::Ite(_, _, _, t, e) => 1 + ites(t) + ites(e),
        })
        .sum()
}

fn render(b: &[Node], out: &mut String) {
    for n in b {
        match n {
            Node::Set(k) => out.push_str(&format!("r = {k};\n")),
            Node::Ite(l, op, r, t, e) => {
                out.push_str(&format!("if ({l} {op} {r}) {{\n"));
                render(t, out);
                out.push_str("} else {\n");
                render(e, out);
                out.push_str("}\n");
            }
        }
    }
}

/// Branch decisions taken for concrete `x`, `y`.
fn decisions(b: &[Node], x: i64, y: i64, out: &mut Vec<bool>) {
    for n in b {
        if let Node::Ite(l, op, r, t, e) = n {
            let val = |s: &str| match s {
                "x" => x,
                "y" => y,
                k => k.parse().unwrap(),
            };
            let (a, c) = (val(l), val(r));
            let taken = match *op {
                "<" => a < c,
                "<=" => a <= c,
                "==" => a == c,
                "!=" => a != c,
                ">" => a > c,
                _ => a >= c,
            };
            out.push(taken);
            decisions(if taken { t } else { e }, x, y, out);
        }
    }
}

fn branching() -> impl Strategy<Value = Vec<Node>> {
    let leaf = (0i64..=3).prop_map(Node::Set);
    let node = leaf.prop_recursive(3, 8, 2, |inner| {
        (
            prop::sample::select(vec!["x", "y"]),
            prop::sample::select(vec!["<", "<=", "==", "!=", ">", ">="]),
            prop_oneof![(0i64..=3).prop_map(|k| k.to_string()), Just("x".to_string()), Just("y".to_string())],
            prop::collection::vec(inner.clone(), 0..3),
            prop::collection::vec(inner, 0..3),
        )
            .prop_map(|(l, op, r, t, e)| Node::Ite(l, op, r, t, e))
    });
    prop::collection::vec(node, 1..4).prop_filter("at most three ite nodes", |b| ites(b) <= 3)
}

proptest! {
    #![proptest_config(common::config(400))]

    #[test]
    fn verified_means_no_refuting_diagnostics(src in straight_line()) {
        let prog = program(&src);
        let v = verify_function(&prog, &prog.functions[0], ExecOptions::default());
        if v.status == Status::Verified {
            prop_assert!(v.diagnostics.iter().all(|d| !d.kind.is_refuting()), "{:?}", v.diagnostics);
        }
        if v.diagnostics.iter().any(|d| d.kind.is_refuting()) {
            prop_assert_eq!(&v.status, &Status::Refuted);
        }
    }

    #[test]
    fn refutations_carry_witnesses_and_proof_nodes(src in straight_line()) {
        let prog = program(&src);
        let v = verify_function(&prog, &prog.functions[0], ExecOptions::default());
        for d in &v.diagnostics {
            prop_assert!(d.proof_ref.is_some_and(|n| n < v.proof.len()), "{:?}", d);
            if d.kind.is_refuting() {
                prop_assert!(d.counter_example.is_some(), "{:?}", d);
            }
        }
    }

    #[test]
    fn one_terminal_state_per_feasible_branch_combination(body in branching()) {
        let mut text = String::new();
        render(&body, &mut text);
        let src = format!("void f(int x, int y) @ emp @ {{\n{text}}} @ emp @\n");
        let prog = program(&src);
        let v = verify_function(&prog, &prog.functions[0], ExecOptions::default());
        prop_assert_eq!(&v.status, &Status::Verified);
        let mut feasible = BTreeSet::new();
        for x in -6..=9 {
            for y in -6..=9 {
                let mut d = Vec::new();
                decisions(&body, x, y, &mut d);
                feasible.insert(d);
            }
        }
        prop_assert_eq!(v.stats.paths, feasible.len(), "{}", src);
    }
}

fn states(steps: Vec<Step>) -> Vec<SymState> {
    steps
        .into_iter()
        .filter_map(|s| match s {
            Step::State(s) => Some(s),
            Step::Report(_) => None,
        })
        .collect()
}

#[test]
fn forked_states_do_not_share_mutations() {
    let src = "void g(int* x, int y) @ exists v. x->v @ {\n  if (y < 2) { [x] = 1; } else { [x] = 2; }\n  [x] = 5;\n} @ exists v. x->v @";
    let prog = program(src);
    let f = &prog.functions[0];
    let exec = Executor::new(&prog, f, ExecOptions::default());
    let store: BTreeMap<String, SymExpr> = [("x", "x"), ("y", "y")].map(|(k, v)| (k.to_string(), SymExpr::var(v))).into();
    let init = SymState::new(store, SymHeap::with_spatial(vec![Spatial::PointsTo(SymExpr::var("x"), SymExpr::var("v"))]));

    let branches = states(exec.exec_stmt(init.clone(), &f.body[0]));
    assert_eq!(branches.len(), 2);
    let snapshot = branches.clone();
    let after_first = states(exec.exec_stmt(branches[0].clone(), &f.body[1]));
    assert_eq!(branches, snapshot);
    assert_ne!(after_first[0].heap, branches[1].heap);
    // Re-running the fork from the same input gives the same branch heaps.
    let again = states(exec.exec_stmt(init, &f.body[0]));
    assert_eq!(again.iter().map(|s| &s.heap).collect::<Vec<_>>(), branches.iter().map(|s| &s.heap).collect::<Vec<_>>());
}

#[test]
fn infeasible_branches_are_pruned() {
    let prog = program("void f(int x) @ x < 1 @ { if (x < 1) { r = 1; } else { r = 2; } if (x > 5) { r = 3; } } @ emp @");
    let v = verify_function(&prog, &prog.functions[0], ExecOptions::default());
    assert_eq!(v.status, Status::Verified);
    assert_eq!(v.stats.paths, 1);
}

#[test]
fn path_budget_stops_exploration() {
    let mut body = String::new();
    for i in 0..8 {
        body.push_str(&format!("if (x < {i}) {{ r = 1; }} else {{ r = 2; }}\n"));
    }
    let prog = program(&format!("void f(int x, int r) @ emp @ {{ {body} }} @ emp @"));
    let opts = ExecOptions { max_paths: 3, ..ExecOptions::default() };
    let v = verify_function(&prog, &prog.functions[0], opts);
    assert!(matches!(v.status, Status::Inconclusive(_)), "{:?}", v.status);
}
