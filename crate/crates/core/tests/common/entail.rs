//! Seeded generator of small entailment instances. Consequents are derived
//! from antecedents often enough that a good share of instances is provable.

use std::collections::BTreeSet;

use ooheap::formula::free_vars;
use ooheap::{CmpOp, Formula, SymExpr};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 3] = ["x", "y", "z"];

fn var(rng: &mut ChaCha8Rng) -> SymExpr {
    SymExpr::var(*VARS.choose(rng).unwrap())
}

fn value(rng: &mut ChaCha8Rng) -> SymExpr {
    if rng.gen_bool(0.5) {
        var(rng)
    } else {
        SymExpr::Int(rng.gen_range(0..=4))
    }
}

fn node(k: SymExpr, next: SymExpr) -> SymExpr {
    SymExpr::record("node", vec![k, next])
}

fn spatial(rng: &mut ChaCha8Rng) -> Formula {
    match rng.gen_range(0..6) {
        0 | 1 => Formula::pto(var(rng), value(rng)),
        2 | 3 => Formula::pto(var(rng), node(SymExpr::Int(rng.gen_range(0..=1)), value(rng))),
        _ => Formula::pred("list", vec![var(rng), if rng.gen_bool(0.5) { SymExpr::nil() } else { var(rng) }]),
    }
}

fn pure(rng: &mut ChaCha8Rng) -> Formula {
    let op = *[CmpOp::Eq, CmpOp::Ne, CmpOp::Ne].choose(rng).unwrap();
    Formula::pure(op, var(rng), value(rng))
}

fn antecedent(rng: &mut ChaCha8Rng) -> Vec<Formula> {
    let mut parts: Vec<Formula> = (0..rng.gen_range(1..=3)).map(|_| spatial(rng)).collect();
    if rng.gen_bool(0.3) {
        parts.push(pure(rng));
    }
    parts
}

/// Folds `v->node(k, w) * list(w, u)` or `list(v, w) * list(w, u)` pairs
/// into `list(v, u)`, and single node cells into one-element lists.
fn fold_one(parts: &[Formula], rng: &mut ChaCha8Rng) -> Vec<Formula> {
    let mut out = parts.to_vec();
    for i in 0..out.len() {
        let (start, mid) = match &out[i] {
            Formula::PointsTo(v, SymExpr::Record(_, f)) if f.len() == 2 => (v.clone(), f[1].clone()),
            Formula::Pred(_, a) => (a[0].clone(), a[1].clone()),
            _ => continue,
        };
        let tail = out.iter().position(|g| matches!(g, Formula::Pred(_, a) if a[0] == mid));
        match tail {
            Some(j) if j != i => {
                let end = match &out[j] {
                    Formula::Pred(_, a) => a[1].clone(),
                    _ => unreachable!(),
                };
                out[i] = Formula::pred("list", vec![start, end]);
                out.remove(j);
                return out;
            }
            _ if rng.gen_bool(0.5) && matches!(out[i], Formula::PointsTo(..)) => {
                out[i] = Formula::pred("list", vec![start, mid]);
                return out;
            }
            _ => {}
        }
    }
    out
}

/// Replaces the content of one points-to by an existential.
fn hide_value(parts: &[Formula], rng: &mut ChaCha8Rng) -> Formula {
    let mut out = parts.to_vec();
    let ptos: Vec<usize> = (0..out.len()).filter(|&i| matches!(out[i], Formula::PointsTo(..))).collect();
    if let Some(&i) = ptos.choose(rng) {
        if let Formula::PointsTo(l, v) = &out[i] {
            let hidden = match v {
                SymExpr::Record(c, f) if rng.gen_bool(0.5) => SymExpr::record(c.clone(), vec![f[0].clone(), SymExpr::var("e")]),
                _ => SymExpr::var("e"),
            };
            out[i] = Formula::pto(l.clone(), hidden);
        }
        return Formula::exists("e", Formula::star_all(out));
    }
    Formula::star_all(out)
}

/// One instance (antecedent, consequent).
pub fn instance(rng: &mut ChaCha8Rng) -> (Formula, Formula) {
    let ante = antecedent(rng);
    let spatial_parts: Vec<Formula> = ante.iter().filter(|f| !matches!(f, Formula::Pure(_))).cloned().collect();
    let mut cons_parts = match rng.gen_range(0..8) {
        0 => antecedent(rng),
        1 | 2 => {
            let mut sub = spatial_parts.clone();
            sub.shuffle(rng);
            sub.truncate(rng.gen_range(0..=sub.len()));
            sub
        }
        3 | 4 => fold_one(&spatial_parts, rng),
        5 => fold_one(&fold_one(&spatial_parts, rng), rng),
        6 => vec![hide_value(&spatial_parts, rng)],
        _ => {
            let mut c = spatial_parts.clone();
            c.push(pure(rng));
            c
        }
    };
    if rng.gen_bool(0.2) {
        cons_parts.push(Formula::True);
    }
    if cons_parts.is_empty() {
        cons_parts.push(Formula::Emp);
    }
    (Formula::star_all(ante), Formula::star_all(cons_parts))
}

pub fn vars_of(fs: &[&Formula]) -> BTreeSet<String> {
    fs.iter().flat_map(|f| free_vars(f)).collect()
}
