use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{expand_chains, free_vars, Formula, PredTable, SymExpr};

use super::eval::{enumerate, eval, open_exists, solve_atom, unbound_vars, unfold_pred, unify, Env, Ev};
use super::{ConcreteState, Value};

/// Size limits of the finite-model oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCaps {
    /// Addresses are drawn from 1..=max_cells.
    pub max_cells: usize,
    /// Domain for free variables and for unbound values constrained by pure atoms.
    pub values: Vec<i64>,
    /// Domain for existential values left unconstrained by the formula
    /// (for example list payloads).
    pub payload_values: Vec<i64>,
    /// Generation stops after this many models.
    pub max_models: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps { max_cells: 4, values: (0..=4).collect(), payload_values: vec![0, 1], max_models: 200_000 }
    }
}

/// Enumerates concrete models of `f` within `caps`. Stores bind exactly the
/// free variables of `f` plus `extra_vars`. `true` is modelled by zero or one
/// extra zero-valued cell, so the result under-approximates its models.
pub fn models(f: &Formula, extra_vars: &BTreeSet<String>, preds: &PredTable, caps: &OracleCaps) -> Vec<ConcreteState> {
    let mut vars: BTreeSet<String> = free_vars(f);
    vars.extend(extra_vars.iter().cloned());
    let g = Gen { preds, caps, fresh: Cell::new(0), depth_limit: caps.max_cells + 1 };
    let mut out: BTreeSet<ConcreteState> = BTreeSet::new();
    let f = expand_chains(f);
    g.gen(&f, &Env::new(), &BTreeMap::new(), 0, &mut |env, heap| {
        // Resolve what is still open: free variables over `values`,
        // existentials left in cells over `payload_values`.
        let mut open_free: Vec<String> = vars.iter().filter(|v| !env.contains_key(*v)).cloned().collect();
        open_free.sort();
        enumerate(&open_free, &caps.values, env, &mut |env| {
            let mut open_ex = Vec::new();
            for e in heap.values() {
                unbound_vars(e, env, &mut open_ex);
            }
            enumerate(&open_ex, &caps.payload_values, env, &mut |env| {
                let mut cells = BTreeMap::new();
                for (a, e) in heap {
                    match eval(e, env) {
                        Ev::Val(v) => {
                            cells.insert(*a, v);
                        }
                        _ => return false,
                    }
                }
                let store = vars.iter().map(|v| (v.clone(), env[v].clone())).collect();
                out.insert(ConcreteState { store, heap: cells, steps: 0 });
                out.len() >= caps.max_models
            })
        })
    });
    out.into_iter().collect()
}

/// Heap under construction: address to (possibly open) value expression.
type SymHeap = BTreeMap<i64, SymExpr>;
type K<'k> = &'k mut dyn FnMut(&Env, &SymHeap) -> bool;

struct Gen<'a> {
    preds: &'a PredTable,
    caps: &'a OracleCaps,
    fresh: Cell<usize>,
    depth_limit: usize,
}

impl Gen<'_> {
    fn free_addrs(&self, heap: &SymHeap) -> Vec<i64> {
        (1..=self.caps.max_cells as i64).filter(|a| !heap.contains_key(a)).collect()
    }

    /// Pins every open variable of `e` so that it is concrete.
    fn close(&self, e: &SymExpr, env: &Env, k: &mut dyn FnMut(&Env) -> bool) -> bool {
        let mut open = Vec::new();
        unbound_vars(e, env, &mut open);
        enumerate(&open, &self.caps.values, env, k)
    }

    fn gen(&self, f: &Formula, env: &Env, heap: &SymHeap, depth: usize, k: K) -> bool {
        match f {
            Formula::Emp => k(env, heap),
            Formula::False => false,
            Formula::True => {
                if k(env, heap) {
                    return true;
                }
                for a in self.free_addrs(heap) {
                    let mut h = heap.clone();
                    h.insert(a, SymExpr::Int(0));
                    if k(env, &h) {
                        return true;
                    }
                }
                false
            }
            Formula::Pure(a) => solve_atom(a, env, &self.caps.values, &mut |env| k(env, heap)),
            Formula::PointsTo(l, v) => {
                if heap.len() >= self.caps.max_cells {
                    return false;
                }
                let place = |env: &Env, k: &mut dyn FnMut(&Env, i64) -> bool| match eval(l, env) {
                    Ev::Val(Value::Int(a)) => a >= 1 && !heap.contains_key(&a) && k(env, a),
                    Ev::Val(_) | Ev::Fail => false,
                    Ev::Unbound => {
                        self.free_addrs(heap).into_iter().any(|a| unify(l, &Value::Int(a), env, &self.caps.values, &mut |env| k(env, a)))
                    }
                };
                place(env, &mut |env, a| {
                    let mut h = heap.clone();
                    h.insert(a, substitute_bound(v, env));
                    k(env, &h)
                })
            }
            Formula::Chain(..) => self.gen(&expand_chains(f), env, heap, depth, k),
            Formula::Star(a, b) => self.gen(a, env, heap, depth, &mut |env, h| self.gen(b, env, h, depth, k)),
            Formula::Or(a, b) => self.gen(a, env, heap, depth, k) || self.gen(b, env, heap, depth, k),
            Formula::And(a, b) => self.gen(a, env, heap, depth, &mut |env1, h1| {
                self.gen(b, env1, heap, depth, &mut |env2, h2| {
                    if h1.keys().ne(h2.keys()) {
                        return false;
                    }
                    // Both sides must describe the same cells: pin and compare.
                    let pair: Vec<(&SymExpr, &SymExpr)> =
                        h1.iter().filter(|(a, _)| !heap.contains_key(a)).map(|(a, e)| (e, &h2[a])).collect();
                    let mut open = Vec::new();
                    for (x, y) in &pair {
                        unbound_vars(x, env2, &mut open);
                        unbound_vars(y, env2, &mut open);
                    }
                    enumerate(&open, &self.caps.values, env2, &mut |env| {
                        let same = pair.iter().all(|(x, y)| match (eval(x, env), eval(y, env)) {
                            (Ev::Val(p), Ev::Val(q)) => p == q,
                            _ => false,
                        });
                        same && k(env, h1)
                    })
                })
            }),
            Formula::Exists(x, body) => {
                let body = open_exists(x, body, &self.fresh);
                self.gen(&body, env, heap, depth, k)
            }
            Formula::Pred(name, args) => {
                if depth >= self.depth_limit {
                    return false;
                }
                // Predicate arguments must be concrete before unfolding so
                // base cases compare actual values.
                let args = args.clone();
                let all = SymExpr::Record(String::new(), args.clone());
                self.close(&all, env, &mut |env| match unfold_pred(self.preds, name, &args) {
                    Some(body) => self.gen(&body, env, heap, depth + 1, k),
                    None => false,
                })
            }
        }
    }
}

fn substitute_bound(e: &SymExpr, env: &Env) -> SymExpr {
    match eval(e, env) {
        Ev::Val(v) => to_expr(&v),
        _ => match e {
            SymExpr::Var(x) => env.get(x).map(to_expr).unwrap_or_else(|| e.clone()),
            SymExpr::Record(c, fs) => SymExpr::Record(c.clone(), fs.iter().map(|f| substitute_bound(f, env)).collect()),
            other => other.clone(),
        },
    }
}

fn to_expr(v: &Value) -> SymExpr {
    match v {
        Value::Int(n) => SymExpr::Int(*n),
        Value::Record(c, fs) => SymExpr::Record(c.clone(), fs.iter().map(to_expr).collect()),
    }
}
