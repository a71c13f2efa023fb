use std::collections::{BTreeMap, BTreeSet};

use super::{Formula, PureAtom, SymExpr};

/// A simultaneous substitution of variables by expressions.
pub type Subst = BTreeMap<String, SymExpr>;

pub fn free_vars_expr(e: &SymExpr, out: &mut BTreeSet<String>) {
    match e {
        SymExpr::Int(_) => {}
        SymExpr::Var(v) => {
            out.insert(v.clone());
        }
        SymExpr::Add(a, b) | SymExpr::Sub(a, b) | SymExpr::Mul(a, b) => {
            free_vars_expr(a, out);
            free_vars_expr(b, out);
        }
        SymExpr::Neg(a) => free_vars_expr(a, out),
        SymExpr::Record(_, fields) => fields.iter().for_each(|f| free_vars_expr(f, out)),
    }
}

fn collect_free(f: &Formula, out: &mut BTreeSet<String>) {
    match f {
        Formula::Emp | Formula::True | Formula::False => {}
        Formula::PointsTo(l, v) => {
            free_vars_expr(l, out);
            free_vars_expr(v, out);
        }
        Formula::Chain(l, vs) => {
            free_vars_expr(l, out);
            vs.iter().for_each(|v| free_vars_expr(v, out));
        }
        Formula::Star(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
            collect_free(a, out);
            collect_free(b, out);
        }
        Formula::Exists(x, body) => {
            let mut inner = BTreeSet::new();
            collect_free(body, &mut inner);
            inner.remove(x);
            out.extend(inner);
        }
        Formula::Pred(_, args) => args.iter().for_each(|a| free_vars_expr(a, out)),
        Formula::Pure(atom) => {
            free_vars_expr(&atom.lhs, out);
            free_vars_expr(&atom.rhs, out);
        }
    }
}

/// The free variables of `f`; `exists` removes its binder.
pub fn free_vars(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(f, &mut out);
    out
}

pub fn substitute_expr(e: &SymExpr, map: &Subst) -> SymExpr {
    match e {
        SymExpr::Int(_) => e.clone(),
        SymExpr::Var(v) => map.get(v).cloned().unwrap_or_else(|| e.clone()),
        SymExpr::Add(a, b) => SymExpr::add(substitute_expr(a, map), substitute_expr(b, map)),
        SymExpr::Sub(a, b) => SymExpr::sub(substitute_expr(a, map), substitute_expr(b, map)),
        SymExpr::Mul(a, b) => SymExpr::mul(substitute_expr(a, map), substitute_expr(b, map)),
        SymExpr::Neg(a) => SymExpr::neg(substitute_expr(a, map)),
        SymExpr::Record(c, fields) => SymExpr::Record(c.clone(), fields.iter().map(|x| substitute_expr(x, map)).collect()),
    }
}

fn substitute_atom(a: &PureAtom, map: &Subst) -> PureAtom {
    PureAtom::new(a.op, substitute_expr(&a.lhs, map), substitute_expr(&a.rhs, map))
}

/// Capture-avoiding substitution. Bound variables that would capture a
/// variable of an inserted expression are renamed by appending primes.
pub fn substitute(f: &Formula, map: &Subst) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    match f {
        Formula::Emp | Formula::True | Formula::False => f.clone(),
        Formula::PointsTo(l, v) => Formula::PointsTo(substitute_expr(l, map), substitute_expr(v, map)),
        Formula::Chain(l, vs) => Formula::Chain(substitute_expr(l, map), vs.iter().map(|v| substitute_expr(v, map)).collect()),
        Formula::Star(a, b) => Formula::star(substitute(a, map), substitute(b, map)),
        Formula::And(a, b) => Formula::and(substitute(a, map), substitute(b, map)),
        Formula::Or(a, b) => Formula::or(substitute(a, map), substitute(b, map)),
        Formula::Pred(n, args) => Formula::Pred(n.clone(), args.iter().map(|a| substitute_expr(a, map)).collect()),
        Formula::Pure(atom) => Formula::Pure(substitute_atom(atom, map)),
        Formula::Exists(x, body) => {
            let body_free = free_vars(body);
            let mut inner: Subst =
                map.iter().filter(|(k, _)| *k != x && body_free.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect();
            if inner.is_empty() {
                return f.clone();
            }
            let mut introduced = BTreeSet::new();
            for v in inner.values() {
                free_vars_expr(v, &mut introduced);
            }
            if introduced.contains(x) {
                let mut fresh = format!("{x}'");
                while introduced.contains(&fresh) || body_free.contains(&fresh) || inner.contains_key(&fresh) {
                    fresh.push('\'');
                }
                inner.insert(x.clone(), SymExpr::Var(fresh.clone()));
                Formula::exists(fresh, substitute(body, &inner))
            } else {
                Formula::exists(x.clone(), substitute(body, &inner))
            }
        }
    }
}

fn flatten_star(f: Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::Star(a, b) => {
            flatten_star(*a, out);
            flatten_star(*b, out);
        }
        other => out.push(other),
    }
}

fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::Star(..) => {
            let mut raw = Vec::new();
            flatten_star(f.clone(), &mut raw);
            let mut parts = Vec::new();
            for p in raw {
                let p = simplify(&p);
                match p {
                    Formula::Emp => {}
                    Formula::False => return Formula::False,
                    Formula::Star(..) => flatten_star(p, &mut parts),
                    other => parts.push(other),
                }
            }
            Formula::star_all(parts)
        }
        Formula::And(a, b) => match (simplify(a), simplify(b)) {
            (Formula::False, _) | (_, Formula::False) => Formula::False,
            (Formula::True, x) | (x, Formula::True) => x,
            (x, y) => Formula::and(x, y),
        },
        Formula::Or(a, b) => match (simplify(a), simplify(b)) {
            (Formula::False, x) | (x, Formula::False) => x,
            (x, y) => Formula::or(x, y),
        },
        Formula::Exists(x, body) => {
            let body = simplify(body);
            if body == Formula::False {
                Formula::False
            } else if !free_vars(&body).contains(x) {
                body
            } else {
                Formula::exists(x.clone(), body)
            }
        }
        other => other.clone(),
    }
}

fn binder_name(depth: usize, avoid: &BTreeSet<String>) -> String {
    (0..).map(|k| format!("_b{k}")).filter(|n| !avoid.contains(n)).nth(depth).expect("infinite sequence")
}

fn rename_binders(f: &Formula, depth: usize, avoid: &BTreeSet<String>) -> Formula {
    match f {
        Formula::Exists(x, body) => {
            let name = binder_name(depth, avoid);
            let body = if *x == name {
                (**body).clone()
            } else {
                let mut m = Subst::new();
                m.insert(x.clone(), SymExpr::Var(name.clone()));
                substitute(body, &m)
            };
            Formula::exists(name, rename_binders(&body, depth + 1, avoid))
        }
        Formula::Star(a, b) => Formula::star(rename_binders(a, depth, avoid), rename_binders(b, depth, avoid)),
        Formula::And(a, b) => Formula::and(rename_binders(a, depth, avoid), rename_binders(b, depth, avoid)),
        Formula::Or(a, b) => Formula::or(rename_binders(a, depth, avoid), rename_binders(b, depth, avoid)),
        other => other.clone(),
    }
}

fn sort_key(f: &Formula) -> (u8, String, String) {
    match f {
        Formula::Pure(_) => (0, String::new(), f.to_string()),
        Formula::PointsTo(l, _) | Formula::Chain(l, _) => (1, l.to_string(), f.to_string()),
        Formula::Pred(name, _) => (2, name.clone(), f.to_string()),
        _ => (3, String::new(), f.to_string()),
    }
}

fn sort_stars(f: &Formula) -> Formula {
    match f {
        Formula::Star(..) => {
            let mut parts = Vec::new();
            flatten_star(f.clone(), &mut parts);
            let mut parts: Vec<Formula> = parts.iter().map(sort_stars).collect();
            parts.sort_by_cached_key(sort_key);
            Formula::star_all(parts)
        }
        Formula::And(a, b) => Formula::and(sort_stars(a), sort_stars(b)),
        Formula::Or(a, b) => Formula::or(sort_stars(a), sort_stars(b)),
        Formula::Exists(x, body) => Formula::exists(x.clone(), sort_stars(body)),
        other => other.clone(),
    }
}

/// Canonical form: `*`-chains flattened, unit and annihilator laws applied,
/// bound variables renamed canonically, atoms sorted (pure, points-to by
/// location, predicates by name). Idempotent.
pub fn normalize(f: &Formula) -> Formula {
    let mut cur = simplify(f);
    loop {
        let next = simplify(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    let avoid = free_vars(&cur);
    let renamed = rename_binders(&cur, 0, &avoid);
    sort_stars(&renamed)
}

fn all_names(f: &Formula, out: &mut BTreeSet<String>) {
    collect_free(f, out);
    match f {
        Formula::Star(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
            all_names(a, out);
            all_names(b, out);
        }
        Formula::Exists(x, body) => {
            out.insert(x.clone());
            all_names(body, out);
        }
        _ => {}
    }
}

/// Replaces every `x->a,b,c` chain by its meaning: the cell at `x` holds the
/// first node, and each node is `object(node, value, next)` with the last
/// next field nil. Node addresses are existentially quantified.
pub fn expand_chains(f: &Formula) -> Formula {
    let mut names = BTreeSet::new();
    all_names(f, &mut names);
    let mut counter = 0;
    expand(f, &names, &mut counter)
}

fn expand(f: &Formula, taken: &BTreeSet<String>, counter: &mut usize) -> Formula {
    match f {
        Formula::Chain(l, vals) => {
            let mut nodes = Vec::new();
            while nodes.len() < vals.len() {
                let name = format!("_c{}", *counter);
                *counter += 1;
                if !taken.contains(&name) {
                    nodes.push(name);
                }
            }
            let mut parts = vec![Formula::pto(l.clone(), SymExpr::var(&nodes[0]))];
            for (i, v) in vals.iter().enumerate() {
                let next = nodes.get(i + 1).map(SymExpr::var).unwrap_or_else(SymExpr::nil);
                parts.push(Formula::pto(SymExpr::var(&nodes[i]), SymExpr::record(super::NODE_CLASS, vec![v.clone(), next])));
            }
            let mut out = Formula::star_all(parts);
            for n in nodes.into_iter().rev() {
                out = Formula::exists(n, out);
            }
            out
        }
        Formula::Star(a, b) => Formula::star(expand(a, taken, counter), expand(b, taken, counter)),
        Formula::And(a, b) => Formula::and(expand(a, taken, counter), expand(b, taken, counter)),
        Formula::Or(a, b) => Formula::or(expand(a, taken, counter), expand(b, taken, counter)),
        Formula::Exists(x, body) => Formula::exists(x.clone(), expand(body, taken, counter)),
        other => other.clone(),
    }
}
