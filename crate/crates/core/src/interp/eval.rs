use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{expand_chains, free_vars, substitute, CmpOp, Formula, PredTable, PureAtom, SymExpr};

use super::{ConcreteState, Heap, Store, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable '{0}'")]
    UnboundVariable(String),
    #[error("unknown predicate '{0}'")]
    UnknownPredicate(String),
    #[error("heap has {0} cells; the model checker handles at most 64")]
    HeapTooLarge(usize),
}

pub(super) type Env = BTreeMap<String, Value>;

/// Separation-logic satisfaction of `f` by `state`, with the builtin predicates.
pub fn eval_assertion(f: &Formula, state: &ConcreteState) -> Result<bool, EvalError> {
    eval_assertion_with(f, &state.store, &state.heap, &PredTable::default())
}

/// Satisfaction with a caller-supplied predicate table. Existentials are bound
/// by matching against heap cells where possible and otherwise enumerated over
/// the heap's addresses and values, the store's values and [-4, 4].
pub fn eval_assertion_with(f: &Formula, store: &Store, heap: &Heap, preds: &PredTable) -> Result<bool, EvalError> {
    if let Some(v) = free_vars(f).into_iter().find(|v| !store.contains_key(v)) {
        return Err(EvalError::UnboundVariable(v));
    }
    if heap.len() > 64 {
        return Err(EvalError::HeapTooLarge(heap.len()));
    }
    check_preds(f, preds)?;
    let cells: Vec<(i64, Value)> = heap.iter().map(|(a, v)| (*a, v.clone())).collect();
    let mut cand: BTreeSet<i64> = (-4..=4).collect();
    for (a, v) in &cells {
        cand.insert(*a);
        ints_of(v, &mut cand);
    }
    store.values().for_each(|v| ints_of(v, &mut cand));
    let checker = Checker { cells, preds, candidates: cand.into_iter().collect(), fresh: Cell::new(0), max_depth: heap.len() + 1 };
    let all = if heap.is_empty() { 0 } else { u64::MAX >> (64 - heap.len()) };
    let f = schedule(&expand_chains(f));
    Ok(checker.consume(&f, store, all, 0, &mut |_, rem| rem == 0))
}

fn check_preds(f: &Formula, preds: &PredTable) -> Result<(), EvalError> {
    match f {
        Formula::Pred(n, _) if preds.get(n).is_none() => Err(EvalError::UnknownPredicate(n.clone())),
        Formula::Star(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
            check_preds(a, preds)?;
            check_preds(b, preds)
        }
        Formula::Exists(_, b) => check_preds(b, preds),
        _ => Ok(()),
    }
}

pub(super) fn ints_of(v: &Value, out: &mut BTreeSet<i64>) {
    match v {
        Value::Int(n) => {
            out.insert(*n);
        }
        Value::Record(_, fs) => fs.iter().for_each(|f| ints_of(f, out)),
    }
}

/// Result of evaluating an expression under a partial environment.
pub(super) enum Ev {
    Val(Value),
    Unbound,
    Fail,
}

pub(super) fn eval(e: &SymExpr, env: &Env) -> Ev {
    fn int(e: &SymExpr, env: &Env) -> Result<Option<i64>, ()> {
        match eval(e, env) {
            Ev::Val(Value::Int(n)) => Ok(Some(n)),
            Ev::Val(Value::Record(..)) | Ev::Fail => Err(()),
            Ev::Unbound => Ok(None),
        }
    }
    let bin = |a: &SymExpr, b: &SymExpr, op: fn(i64, i64) -> Option<i64>| match (int(a, env), int(b, env)) {
        (Err(()), _) | (_, Err(())) => Ev::Fail,
        (Ok(Some(x)), Ok(Some(y))) => op(x, y).map(|n| Ev::Val(Value::Int(n))).unwrap_or(Ev::Fail),
        _ => Ev::Unbound,
    };
    match e {
        SymExpr::Int(n) => Ev::Val(Value::Int(*n)),
        SymExpr::Var(v) => env.get(v).cloned().map(Ev::Val).unwrap_or(Ev::Unbound),
        SymExpr::Add(a, b) => bin(a, b, i64::checked_add),
        SymExpr::Sub(a, b) => bin(a, b, i64::checked_sub),
        SymExpr::Mul(a, b) => bin(a, b, i64::checked_mul),
        SymExpr::Neg(a) => match int(a, env) {
            Err(()) => Ev::Fail,
            Ok(Some(x)) => x.checked_neg().map(|n| Ev::Val(Value::Int(n))).unwrap_or(Ev::Fail),
            Ok(None) => Ev::Unbound,
        },
        SymExpr::Record(c, fs) => {
            let mut vals = Vec::new();
            let mut unbound = false;
            for f in fs {
                match eval(f, env) {
                    Ev::Val(v) => vals.push(v),
                    Ev::Unbound => unbound = true,
                    Ev::Fail => return Ev::Fail,
                }
            }
            if unbound {
                Ev::Unbound
            } else {
                Ev::Val(Value::Record(c.clone(), vals))
            }
        }
    }
}

pub(super) fn unbound_vars(e: &SymExpr, env: &Env, out: &mut Vec<String>) {
    let mut vs = BTreeSet::new();
    crate::formula::free_vars_expr(e, &mut vs);
    for v in vs {
        if !env.contains_key(&v) && !out.contains(&v) {
            out.push(v);
        }
    }
}

/// Calls `k` with `env` extended by every assignment of `vars` over `domain`;
/// stops when `k` returns true.
pub(super) fn enumerate(vars: &[String], domain: &[i64], env: &Env, k: &mut dyn FnMut(&Env) -> bool) -> bool {
    match vars.split_first() {
        None => k(env),
        Some((v, rest)) => domain.iter().any(|d| {
            let mut e = env.clone();
            e.insert(v.clone(), Value::Int(*d));
            enumerate(rest, domain, &e, k)
        }),
    }
}

pub(super) fn atom_holds(a: &PureAtom, env: &Env) -> bool {
    match (eval(&a.lhs, env), eval(&a.rhs, env)) {
        (Ev::Val(x), Ev::Val(y)) => match (a.op, x.as_int(), y.as_int()) {
            (op, Some(x), Some(y)) => op.holds(x as i128, y as i128),
            (CmpOp::Eq, _, _) => x == y,
            (CmpOp::Ne, _, _) => x != y,
            _ => false,
        },
        _ => false,
    }
}

/// Binds the variables of `e` so that it evaluates to `v`.
pub(super) fn unify(e: &SymExpr, v: &Value, env: &Env, domain: &[i64], k: &mut dyn FnMut(&Env) -> bool) -> bool {
    match eval(e, env) {
        Ev::Val(x) => return x == *v && k(env),
        Ev::Fail => return false,
        Ev::Unbound => {}
    }
    match (e, v) {
        (SymExpr::Var(x), _) => {
            let mut env = env.clone();
            env.insert(x.clone(), v.clone());
            k(&env)
        }
        (SymExpr::Record(c, fs), Value::Record(c2, vs)) => {
            if c != c2 || fs.len() != vs.len() {
                return false;
            }
            unify_all(fs, vs, env, domain, k)
        }
        _ => {
            let mut vars = Vec::new();
            unbound_vars(e, env, &mut vars);
            enumerate(&vars, domain, env, &mut |env| matches!(eval(e, env), Ev::Val(ref x) if x == v) && k(env))
        }
    }
}

fn unify_all(es: &[SymExpr], vs: &[Value], env: &Env, domain: &[i64], k: &mut dyn FnMut(&Env) -> bool) -> bool {
    match es.split_first() {
        None => k(env),
        Some((e, rest)) => unify(e, &vs[0], env, domain, &mut |env| unify_all(rest, &vs[1..], env, domain, k)),
    }
}

/// Decides a pure atom, binding an unbound side of an equality directly and
/// enumerating any other unbound variables.
pub(super) fn solve_atom(a: &PureAtom, env: &Env, domain: &[i64], k: &mut dyn FnMut(&Env) -> bool) -> bool {
    if a.op == CmpOp::Eq {
        for (x, other) in [(&a.lhs, &a.rhs), (&a.rhs, &a.lhs)] {
            if let (SymExpr::Var(_), Ev::Unbound, Ev::Val(v)) = (x, eval(x, env), eval(other, env)) {
                return unify(x, &v, env, domain, k);
            }
        }
    }
    let mut vars = Vec::new();
    unbound_vars(&a.lhs, env, &mut vars);
    unbound_vars(&a.rhs, env, &mut vars);
    enumerate(&vars, domain, env, &mut |env| atom_holds(a, env) && k(env))
}

pub(super) fn fresh_binder(x: &str, counter: &Cell<usize>) -> String {
    let n = counter.get();
    counter.set(n + 1);
    format!("{x}#{n}")
}

pub(super) fn open_exists(x: &str, body: &Formula, counter: &Cell<usize>) -> Formula {
    let fresh = fresh_binder(x, counter);
    substitute(body, &[(x.to_string(), SymExpr::Var(fresh))].into())
}

pub(super) fn unfold_pred(preds: &PredTable, name: &str, args: &[SymExpr]) -> Option<Formula> {
    let def = preds.get(name)?;
    if def.params.len() != args.len() {
        return None;
    }
    let map = def.params.iter().cloned().zip(args.iter().cloned()).collect();
    Some(expand_chains(&substitute(&def.body, &map)))
}

/// Reorders each `*` group so that cells are consumed before pure atoms and
/// `true`: bindings then come from the heap rather than from enumeration.
fn schedule(f: &Formula) -> Formula {
    fn flatten(f: &Formula, out: &mut Vec<Formula>) {
        match f {
            Formula::Star(a, b) => {
                flatten(a, out);
                flatten(b, out);
            }
            other => out.push(schedule(other)),
        }
    }
    match f {
        Formula::Star(..) => {
            let mut parts = Vec::new();
            flatten(f, &mut parts);
            parts.sort_by_key(|p| match p {
                Formula::PointsTo(..) | Formula::Chain(..) => 0,
                Formula::Pure(_) => 2,
                Formula::True => 3,
                _ => 1,
            });
            Formula::star_all(parts)
        }
        Formula::Or(a, b) => Formula::or(schedule(a), schedule(b)),
        Formula::And(a, b) => Formula::and(schedule(a), schedule(b)),
        Formula::Exists(x, body) => Formula::exists(x.clone(), schedule(body)),
        other => other.clone(),
    }
}

struct Checker<'a> {
    cells: Vec<(i64, Value)>,
    preds: &'a PredTable,
    candidates: Vec<i64>,
    fresh: Cell<usize>,
    max_depth: usize,
}

type K<'k> = &'k mut dyn FnMut(&Env, u64) -> bool;

impl Checker<'_> {
    /// Direct walk for the builtin list segment when its start is known:
    /// the same two cases as the definition, without re-substituting the
    /// body at every step. `None` defers to generic unfolding.
    fn list_segment(&self, name: &str, args: &[SymExpr], env: &Env, avail: u64, depth: usize, k: K) -> Option<bool> {
        if args.len() != 2 || !self.preds.get(name).is_some_and(|d| d.builtin && d.name == "list") {
            return None;
        }
        let Ev::Val(Value::Int(start)) = eval(&args[0], env) else {
            return None;
        };
        let end = &args[1];
        if unify(end, &Value::Int(start), env, &self.candidates, &mut |env| k(env, avail)) {
            return Some(true);
        }
        for (i, (addr, val)) in self.cells.iter().enumerate() {
            let bit = 1u64 << i;
            if *addr != start || avail & bit == 0 {
                continue;
            }
            let Value::Record(class, fields) = val else { return Some(false) };
            if class != crate::formula::NODE_CLASS || fields.len() != 2 {
                return Some(false);
            }
            let next = match &fields[1] {
                Value::Int(n) => SymExpr::Int(*n),
                Value::Record(..) => return Some(false),
            };
            let rest = Formula::pred(name, vec![next, end.clone()]);
            return Some(self.consume(&rest, env, avail & !bit, depth + 1, k));
        }
        Some(false)
    }

    /// Consumes part of `avail` satisfying `f` and passes the rest to `k`.
    fn consume(&self, f: &Formula, env: &Env, avail: u64, depth: usize, k: K) -> bool {
        match f {
            Formula::Emp => k(env, avail),
            Formula::False => false,
            Formula::True => {
                // Every sub-heap of avail.
                let mut sub = avail;
                loop {
                    if k(env, avail & !sub) {
                        return true;
                    }
                    if sub == 0 {
                        return false;
                    }
                    sub = (sub - 1) & avail;
                }
            }
            Formula::Pure(a) => solve_atom(a, env, &self.candidates, &mut |env| k(env, avail)),
            Formula::PointsTo(l, v) => {
                for (i, (addr, val)) in self.cells.iter().enumerate() {
                    let bit = 1u64 << i;
                    if avail & bit == 0 {
                        continue;
                    }
                    let hit = unify(l, &Value::Int(*addr), env, &self.candidates, &mut |env| {
                        unify(v, val, env, &self.candidates, &mut |env| k(env, avail & !bit))
                    });
                    if hit {
                        return true;
                    }
                }
                false
            }
            Formula::Chain(..) => self.consume(&expand_chains(f), env, avail, depth, k),
            Formula::Star(a, b) => self.consume(a, env, avail, depth, &mut |env, rem| self.consume(b, env, rem, depth, k)),
            Formula::Or(a, b) => self.consume(a, env, avail, depth, k) || self.consume(b, env, avail, depth, k),
            Formula::And(a, b) => self.consume(a, env, avail, depth, &mut |env, rem| {
                let used = avail & !rem;
                self.consume(b, env, used, depth, &mut |env, r2| r2 == 0 && k(env, rem))
            }),
            Formula::Exists(x, body) => {
                let body = open_exists(x, body, &self.fresh);
                self.consume(&body, env, avail, depth, k)
            }
            Formula::Pred(name, args) => {
                if depth >= self.max_depth {
                    return false;
                }
                if let Some(hit) = self.list_segment(name, args, env, avail, depth, k) {
                    return hit;
                }
                match unfold_pred(self.preds, name, args) {
                    Some(body) => self.consume(&body, env, avail, depth + 1, k),
                    None => false,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_assertion;

    fn state(store: &[(&str, i64)], heap: &[(i64, Value)]) -> ConcreteState {
        ConcreteState {
            store: store.iter().map(|(k, v)| (k.to_string(), Value::Int(*v))).collect(),
            heap: heap.iter().cloned().collect(),
            steps: 0,
        }
    }

    fn holds(f: &str, s: &ConcreteState) -> bool {
        eval_assertion(&parse_assertion(f).unwrap(), s).unwrap()
    }

    fn node(v: i64, next: i64) -> Value {
        Value::Record("node".into(), vec![Value::Int(v), Value::Int(next)])
    }

    #[test]
    fn exact_heap_semantics() {
        assert!(holds("emp", &state(&[], &[])));
        let one = state(&[("x", 1)], &[(1, Value::Int(5))]);
        assert!(holds("x->5", &one));
        let two = state(&[("x", 1)], &[(1, Value::Int(5)), (2, Value::Int(0))]);
        assert!(!holds("x->5", &two));
        assert!(holds("x->5 * true", &two));
    }

    #[test]
    fn star_partitions() {
        let s = state(&[("x", 1), ("y", 2)], &[(1, Value::Int(1)), (2, Value::Int(2))]);
        assert!(holds("x->1 * y->2", &s));
        assert!(holds("y->2 * x->1", &s));
        assert!(!holds("x->1 * x->1", &s));
    }

    #[test]
    fn lists_and_chains() {
        let s = state(&[("x", 1)], &[(1, Value::Int(2)), (2, node(7, 3)), (3, node(8, 0))]);
        assert!(holds("x->a,b", &state(&[("x", 1), ("a", 7), ("b", 8)], &[(1, Value::Int(2)), (2, node(7, 3)), (3, node(8, 0))])));
        assert!(!holds("list(x, nil)", &s));
        let l = state(&[("x", 2)], &[(2, node(7, 3)), (3, node(8, 0))]);
        assert!(holds("list(x, nil)", &l));
        assert!(holds("exists t. x->object(node, 7, t) * list(t, 0)", &l));
        assert!(holds("list(x, x)", &state(&[("x", 4)], &[])));
    }

    #[test]
    fn pure_atoms_need_empty_heap() {
        assert!(holds("x < 3", &state(&[("x", 1)], &[])));
        assert!(!holds("x < 3", &state(&[("x", 1)], &[(1, Value::Int(0))])));
        assert!(holds("x < 3 && emp || x == 9", &state(&[("x", 1)], &[])));
        assert!(holds("exists v. v > 3 && v < 5", &state(&[], &[])));
    }

    #[test]
    fn unbound_is_an_error() {
        assert_eq!(
            eval_assertion(&parse_assertion("x->1").unwrap(), &ConcreteState::default()),
            Err(EvalError::UnboundVariable("x".into()))
        );
    }
}
