//! proptest strategies for formulas, states, pure constraints, terms and
//! proof trees.

use std::collections::BTreeMap;

use ooheap::arith::PureSet;
use ooheap::interp::{ConcreteState, Value};
use ooheap::proofviz::{Outcome, ProofTree};
use ooheap::{CmpOp, Formula, PureAtom, SymExpr, Term};
use proptest::prelude::*;

pub const VARS: [&str; 3] = ["x", "y", "z"];

pub fn var() -> impl Strategy<Value = SymExpr> {
    prop::sample::select(&VARS[..]).prop_map(SymExpr::var)
}

/// Variables, `nil` and small integers.
pub fn value() -> impl Strategy<Value = SymExpr> {
    prop_oneof![3 => var(), 2 => (0i64..=4).prop_map(SymExpr::Int)]
}

pub fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop::sample::select(vec![CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge])
}

/// Points-to, list and pure atoms over x, y, z.
pub fn atom() -> impl Strategy<Value = Formula> {
    prop_oneof![
        4 => (var(), value()).prop_map(|(l, v)| Formula::pto(l, v)),
        2 => (var(), 0i64..=1, value()).prop_map(|(l, k, n)| Formula::pto(l, SymExpr::record("node", vec![SymExpr::Int(k), n]))),
        2 => (var(), value()).prop_map(|(s, e)| Formula::pred("list", vec![s, e])),
        1 => Just(Formula::Emp),
        2 => (cmp_op(), value(), value()).prop_map(|(op, a, b)| Formula::pure(op, a, b)),
    ]
}

/// Formulas with every connective, including existentials over `w`.
pub fn formula() -> impl Strategy<Value = Formula> {
    formula_with(true)
}

/// Formulas without `&&`, whose models the oracle enumerates cheaply.
pub fn and_free_formula() -> impl Strategy<Value = Formula> {
    formula_with(false)
}

fn formula_with(conj: bool) -> impl Strategy<Value = Formula> {
    atom().prop_recursive(3, 10, 2, move |inner| {
        let and_weight = u32::from(conj);
        prop_oneof![
            3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::star(a, b)),
            1 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            and_weight => (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            1 => inner.prop_map(|b| {
                let body = ooheap::formula::substitute(&b, &[("z".to_string(), SymExpr::var("w"))].into());
                Formula::exists("w", body)
            }),
        ]
    })
}

/// Separating conjunctions of up to three spatial atoms plus pure facts.
pub fn symbolic_heap() -> impl Strategy<Value = Formula> {
    (prop::collection::vec(atom(), 1..=3)).prop_map(Formula::star_all)
}

fn cell_value() -> impl Strategy<Value = Value> {
    prop_oneof![
        3 => (0i64..=4).prop_map(Value::Int),
        2 => (0i64..=1, 0i64..=4).prop_map(|(v, n)| Value::Record("node".into(), vec![Value::Int(v), Value::Int(n)])),
    ]
}

/// Stores over x, y, z and heaps over addresses 1..=4.
pub fn state() -> impl Strategy<Value = ConcreteState> {
    (prop::collection::vec(0i64..=4, 3), prop::collection::vec(prop::option::weighted(0.5, cell_value()), 4)).prop_map(|(vals, cells)| {
        let store = VARS.iter().zip(vals).map(|(k, v)| (k.to_string(), Value::Int(v))).collect();
        let heap: BTreeMap<i64, Value> = cells.into_iter().enumerate().filter_map(|(i, c)| c.map(|c| (i as i64 + 1, c))).collect();
        ConcreteState { store, heap, steps: 0 }
    })
}

/// Linear terms over x, y, z with constants in [-8, 8].
pub fn lin_expr() -> impl Strategy<Value = SymExpr> {
    let leaf = prop_oneof![var(), (-8i64..=8).prop_map(SymExpr::Int)];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SymExpr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SymExpr::sub(a, b)),
            ((-3i64..=3), inner.clone()).prop_map(|(k, a)| SymExpr::mul(SymExpr::Int(k), a)),
            inner.prop_map(SymExpr::neg),
        ]
    })
}

pub fn pure_atom() -> impl Strategy<Value = PureAtom> {
    (cmp_op(), lin_expr(), lin_expr()).prop_map(|(op, a, b)| PureAtom::new(op, a, b))
}

pub fn pure_set() -> impl Strategy<Value = PureSet> {
    prop::collection::vec(pure_atom(), 1..=4).prop_map(PureSet::from_atoms)
}

/// Integer assignment to x, y, z satisfying every atom of `p`, by
/// exhaustive search over [-8, 8]^3.
pub fn brute_force(p: &PureSet) -> Option<[i64; 3]> {
    for x in -8..=8 {
        for y in -8..=8 {
            for z in -8..=8 {
                if p.atoms().iter().all(|a| holds(a, [x, y, z])) {
                    return Some([x, y, z]);
                }
            }
        }
    }
    None
}

pub fn eval_lin(e: &SymExpr, env: [i64; 3]) -> i128 {
    match e {
        SymExpr::Int(n) => *n as i128,
        SymExpr::Var(v) => VARS.iter().position(|x| x == v).map_or(0, |i| env[i] as i128),
        SymExpr::Add(a, b) => eval_lin(a, env) + eval_lin(b, env),
        SymExpr::Sub(a, b) => eval_lin(a, env) - eval_lin(b, env),
        SymExpr::Mul(a, b) => eval_lin(a, env) * eval_lin(b, env),
        SymExpr::Neg(a) => -eval_lin(a, env),
        SymExpr::Record(..) => 0,
    }
}

pub fn holds(a: &PureAtom, env: [i64; 3]) -> bool {
    a.op.holds(eval_lin(&a.lhs, env), eval_lin(&a.rhs, env))
}

fn atom_name() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[a-z][a-z0-9_]{0,5}",
        1 => "[A-Z_][a-zA-Z0-9]{0,3}",
        1 => "[ -~]{0,6}",
    ]
}

/// Arbitrary terms; `->`, `*` and `.` compounds print infix.
pub fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![atom_name().prop_map(Term::Atom), any::<i64>().prop_map(Term::Int)];
    leaf.prop_recursive(4, 24, 4, |inner| {
        prop_oneof![
            ("[a-z][a-z0-9_]{0,5}", prop::collection::vec(inner.clone(), 1..4)).prop_map(|(f, a)| Term::app(f, a)),
            prop::collection::vec(inner.clone(), 0..4).prop_map(Term::List),
            (prop::sample::select(vec!["->", "*", "."]), inner.clone(), inner).prop_map(|(f, a, b)| Term::app(f, vec![a, b])),
        ]
    })
}

/// Random proof trees with awkward labels.
pub fn proof_tree() -> impl Strategy<Value = ProofTree> {
    let node = (
        0usize..1000,
        prop::sample::select(vec!["match", "points-to", "fold", "unfold", "case", "pure-check", "leak-check"]),
        "[ -~\n\"\\\\{}<>|]{0,12}",
        prop::sample::select(vec![Outcome::Ok, Outcome::Failed, Outcome::Pruned]),
        prop::option::of("[ -~]{0,8}"),
    );
    (("[a-z]{1,8}", "[ -~]{0,10}"), prop::collection::vec(node, 0..30)).prop_map(|((rule, input), nodes)| {
        let mut t = ProofTree::new(rule, input);
        for (parent, rule, input, outcome, detail) in nodes {
            let p = parent % t.len();
            let id = t.add(p, rule, input);
            t.set_outcome(id, outcome);
            if let Some(d) = detail {
                t.set_detail(id, d);
            }
        }
        t
    })
}
