//! Decision procedure for the pure part of symbolic heaps.
//!
//! Equalities between variables are merged with union-find, records are
//! decomposed structurally, and the remaining linear atoms are split into
//! difference constraints (solved with Bellman-Ford) and everything else.
//! Disequalities over differences are decided by case splitting. Atoms
//! outside the difference fragment are only checked against the candidate
//! witness, so the procedure may answer `Unknown` but never lies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::formula::{free_vars_expr, CmpOp, PureAtom, SymExpr};

/// Conjunction of pure atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PureSet {
    atoms: Vec<PureAtom>,
}

impl PureSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = PureAtom>) -> Self {
        let mut p = PureSet::new();
        for a in atoms {
            p.push(a);
        }
        p
    }

    /// Adds `atom` unless an identical atom is already present.
    pub fn push(&mut self, atom: PureAtom) {
        if !self.atoms.contains(&atom) {
            self.atoms.push(atom);
        }
    }

    pub fn extend(&mut self, other: &PureSet) {
        for a in &other.atoms {
            self.push(a.clone());
        }
    }

    pub fn with(&self, atom: PureAtom) -> PureSet {
        let mut p = self.clone();
        p.push(atom);
        p
    }

    pub fn atoms(&self) -> &[PureAtom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in &self.atoms {
            free_vars_expr(&a.lhs, &mut out);
            free_vars_expr(&a.rhs, &mut out);
        }
        out
    }

    pub fn check_sat(&self) -> SatResult {
        check_sat(self)
    }

    pub fn entails(&self, atom: &PureAtom) -> Entailment {
        entails_pure(self, atom)
    }

    /// `true` only when the set provably implies `atom`.
    pub fn proves(&self, atom: &PureAtom) -> bool {
        entails_pure(self, atom) == Entailment::Yes
    }

    pub fn proves_eq(&self, a: &SymExpr, b: &SymExpr) -> bool {
        a == b || self.proves(&PureAtom::eq(a.clone(), b.clone()))
    }
}

impl fmt::Display for PureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "true");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, " && ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// An integer assignment to the variables of a satisfiable set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness(pub BTreeMap<String, i64>);

impl Witness {
    pub fn get(&self, var: &str) -> Option<i64> {
        self.0.get(var).copied()
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Witness),
    Unsat,
    Unknown,
}

impl SatResult {
    pub fn is_unsat(&self) -> bool {
        matches!(self, SatResult::Unsat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entailment {
    Yes,
    No,
    Unknown,
}

/// A concrete value under a witness: records compare structurally.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Val {
    Int(i128),
    Rec(String, Vec<Val>),
}

fn eval(e: &SymExpr, w: &BTreeMap<String, i128>) -> Option<Val> {
    Some(match e {
        SymExpr::Int(n) => Val::Int(*n as i128),
        SymExpr::Var(v) => Val::Int(w.get(v).copied().unwrap_or(0)),
        SymExpr::Add(a, b) => Val::Int(eval_int(a, w)?.checked_add(eval_int(b, w)?)?),
        SymExpr::Sub(a, b) => Val::Int(eval_int(a, w)?.checked_sub(eval_int(b, w)?)?),
        SymExpr::Mul(a, b) => Val::Int(eval_int(a, w)?.checked_mul(eval_int(b, w)?)?),
        SymExpr::Neg(a) => Val::Int(eval_int(a, w)?.checked_neg()?),
        SymExpr::Record(c, fs) => Val::Rec(c.clone(), fs.iter().map(|f| eval(f, w)).collect::<Option<_>>()?),
    })
}

fn eval_int(e: &SymExpr, w: &BTreeMap<String, i128>) -> Option<i128> {
    match eval(e, w)? {
        Val::Int(n) => Some(n),
        Val::Rec(..) => None,
    }
}

fn eval_atom(a: &PureAtom, w: &BTreeMap<String, i128>) -> Option<bool> {
    let l = eval(&a.lhs, w)?;
    let r = eval(&a.rhs, w)?;
    match (l, r) {
        (Val::Int(x), Val::Int(y)) => Some(a.op.holds(x, y)),
        (l, r) => match a.op {
            CmpOp::Eq => Some(l == r),
            CmpOp::Ne => Some(l != r),
            _ => None,
        },
    }
}

/// Linear form `sum(coeff * key) + constant`. Non-linear subterms become
/// opaque keys (their printed form), which is a sound relaxation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Lin {
    terms: BTreeMap<String, i128>,
    k: i128,
}

impl Lin {
    fn constant(k: i128) -> Self {
        Lin { terms: BTreeMap::new(), k }
    }

    fn key(name: String) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name, 1);
        Lin { terms, k: 0 }
    }

    fn combine(&self, other: &Lin, sign: i128) -> Option<Lin> {
        let mut out = self.clone();
        for (key, c) in &other.terms {
            let entry = out.terms.entry(key.clone()).or_insert(0);
            *entry = entry.checked_add(c.checked_mul(sign)?)?;
        }
        out.terms.retain(|_, c| *c != 0);
        out.k = out.k.checked_add(other.k.checked_mul(sign)?)?;
        Some(out)
    }

    fn scale(&self, s: i128) -> Option<Lin> {
        let mut out = Lin::constant(self.k.checked_mul(s)?);
        for (key, c) in &self.terms {
            let c = c.checked_mul(s)?;
            if c != 0 {
                out.terms.insert(key.clone(), c);
            }
        }
        Some(out)
    }

    fn as_constant(&self) -> Option<i128> {
        self.terms.is_empty().then_some(self.k)
    }
}

fn linearize(e: &SymExpr) -> Option<Lin> {
    match e {
        SymExpr::Int(n) => Some(Lin::constant(*n as i128)),
        SymExpr::Var(v) => Some(Lin::key(v.clone())),
        SymExpr::Add(a, b) => linearize(a)?.combine(&linearize(b)?, 1),
        SymExpr::Sub(a, b) => linearize(a)?.combine(&linearize(b)?, -1),
        SymExpr::Neg(a) => linearize(a)?.scale(-1),
        SymExpr::Mul(a, b) => {
            let (la, lb) = (linearize(a)?, linearize(b)?);
            match (la.as_constant(), lb.as_constant()) {
                (Some(c), _) => lb.scale(c),
                (_, Some(c)) => la.scale(c),
                _ => Some(Lin::key(format!("({e})"))),
            }
        }
        SymExpr::Record(..) => None,
    }
}

const ZERO: &str = "";

/// `to - from <= weight`
#[derive(Debug, Clone, PartialEq, Eq)]
struct Edge {
    from: String,
    to: String,
    weight: i128,
}

#[derive(Debug, Clone)]
struct DiffNe {
    x: String,
    y: String,
    d: i128,
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

/// Turns `lin <= 0` into a difference edge when it has that shape.
fn as_edge(lin: &Lin) -> Option<Edge> {
    let terms: Vec<(&String, &i128)> = lin.terms.iter().collect();
    match terms.as_slice() {
        [(x, &c)] => {
            // c*x + k <= 0
            if c > 0 {
                Some(Edge { from: ZERO.into(), to: (*x).clone(), weight: floor_div(-lin.k, c) })
            } else {
                Some(Edge { from: (*x).clone(), to: ZERO.into(), weight: floor_div(-lin.k, -c) })
            }
        }
        [(x, &cx), (y, &cy)] if cx == -cy => {
            let (pos, neg, c) = if cx > 0 { (*x, *y, cx) } else { (*y, *x, cy) };
            Some(Edge { from: neg.clone(), to: pos.clone(), weight: floor_div(-lin.k, c) })
        }
        _ => None,
    }
}

/// `lin != 0` as `x - y != d` when it has difference shape.
fn as_diff_ne(lin: &Lin) -> Option<DiffNe> {
    let terms: Vec<(&String, &i128)> = lin.terms.iter().collect();
    match terms.as_slice() {
        [(x, &c)] if c == 1 || c == -1 => Some(DiffNe { x: (*x).clone(), y: ZERO.into(), d: -lin.k * c }),
        [(x, &cx), (y, &cy)] if cx == -cy && (cx == 1 || cx == -1) => {
            let (pos, neg) = if cx > 0 { (*x, *y) } else { (*y, *x) };
            Some(DiffNe { x: pos.clone(), y: neg.clone(), d: -lin.k })
        }
        _ => None,
    }
}

struct UnionFind {
    parent: BTreeMap<String, String>,
}

impl UnionFind {
    fn new() -> Self {
        UnionFind { parent: BTreeMap::new() }
    }

    fn find(&mut self, x: &str) -> String {
        let p = match self.parent.get(x) {
            Some(p) if p != x => p.clone(),
            _ => return x.to_string(),
        };
        let root = self.find(&p);
        self.parent.insert(x.to_string(), root.clone());
        root
    }

    fn union(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (small, big) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent.insert(big, small);
        }
    }
}

const BRANCH_BUDGET: usize = 512;

struct Problem {
    nes: Vec<DiffNe>,
    originals: Vec<PureAtom>,
    classes: BTreeMap<String, String>,
    vars: BTreeSet<String>,
}

fn bellman_ford(edges: &[Edge], nodes: &BTreeSet<String>) -> Option<BTreeMap<String, i128>> {
    let mut dist: BTreeMap<String, i128> = nodes.iter().map(|n| (n.clone(), 0)).collect();
    for _ in 0..=nodes.len() {
        let mut changed = false;
        for e in edges {
            let cand = dist[&e.from].saturating_add(e.weight);
            if cand < dist[&e.to] {
                dist.insert(e.to.clone(), cand);
                changed = true;
            }
        }
        if !changed {
            let z = dist[ZERO];
            return Some(dist.into_iter().map(|(k, v)| (k, v - z)).collect());
        }
    }
    None
}

impl Problem {
    fn solve(&self, edges: &mut Vec<Edge>, budget: &mut usize) -> SatResult {
        if *budget == 0 {
            return SatResult::Unknown;
        }
        *budget -= 1;
        let mut nodes: BTreeSet<String> = BTreeSet::new();
        nodes.insert(ZERO.into());
        for e in edges.iter() {
            nodes.insert(e.from.clone());
            nodes.insert(e.to.clone());
        }
        for n in &self.nes {
            nodes.insert(n.x.clone());
            nodes.insert(n.y.clone());
        }
        let Some(pot) = bellman_ford(edges, &nodes) else {
            return SatResult::Unsat;
        };
        let val = |n: &str| pot.get(n).copied().unwrap_or(0);
        if let Some(ne) = self.nes.iter().find(|ne| val(&ne.x) - val(&ne.y) == ne.d) {
            let below = Edge { from: ne.y.clone(), to: ne.x.clone(), weight: ne.d - 1 };
            let above = Edge { from: ne.x.clone(), to: ne.y.clone(), weight: -ne.d - 1 };
            edges.push(below);
            let lo = self.solve(edges, budget);
            edges.pop();
            if let SatResult::Sat(_) = lo {
                return lo;
            }
            edges.push(above);
            let hi = self.solve(edges, budget);
            edges.pop();
            return match (lo, hi) {
                (_, SatResult::Sat(w)) => SatResult::Sat(w),
                (SatResult::Unsat, SatResult::Unsat) => SatResult::Unsat,
                _ => SatResult::Unknown,
            };
        }
        let mut assignment: BTreeMap<String, i128> = BTreeMap::new();
        for v in &self.vars {
            let rep = self.classes.get(v).cloned().unwrap_or_else(|| v.clone());
            assignment.insert(v.clone(), val(&rep));
        }
        if self.originals.iter().all(|a| eval_atom(a, &assignment) == Some(true)) {
            let mut w = BTreeMap::new();
            for (k, v) in assignment {
                match i64::try_from(v) {
                    Ok(v) => {
                        w.insert(k, v);
                    }
                    Err(_) => return SatResult::Unknown,
                }
            }
            SatResult::Sat(Witness(w))
        } else {
            SatResult::Unknown
        }
    }
}

fn rename_vars(e: &SymExpr, uf: &mut UnionFind) -> SymExpr {
    match e {
        SymExpr::Int(_) => e.clone(),
        SymExpr::Var(v) => SymExpr::Var(uf.find(v)),
        SymExpr::Add(a, b) => SymExpr::add(rename_vars(a, uf), rename_vars(b, uf)),
        SymExpr::Sub(a, b) => SymExpr::sub(rename_vars(a, uf), rename_vars(b, uf)),
        SymExpr::Mul(a, b) => SymExpr::mul(rename_vars(a, uf), rename_vars(b, uf)),
        SymExpr::Neg(a) => SymExpr::neg(rename_vars(a, uf)),
        SymExpr::Record(c, fs) => SymExpr::Record(c.clone(), fs.iter().map(|f| rename_vars(f, uf)).collect()),
    }
}

/// Decides satisfiability over the integers. `Unsat` is always genuine;
/// `Sat` always carries a witness satisfying every atom.
pub fn check_sat(p: &PureSet) -> SatResult {
    // Structural decomposition of record (dis)equalities.
    let mut work: Vec<PureAtom> = p.atoms.clone();
    let mut flat: Vec<PureAtom> = Vec::new();
    while let Some(a) = work.pop() {
        match (&a.lhs, &a.rhs) {
            (SymExpr::Record(c1, f1), SymExpr::Record(c2, f2)) => {
                let same_shape = c1 == c2 && f1.len() == f2.len();
                match a.op {
                    CmpOp::Eq if !same_shape => return SatResult::Unsat,
                    CmpOp::Eq => work.extend(f1.iter().zip(f2).map(|(x, y)| PureAtom::eq(x.clone(), y.clone()))),
                    CmpOp::Ne if !same_shape => {}
                    _ => flat.push(a.clone()),
                }
            }
            (SymExpr::Record(..), SymExpr::Int(_)) | (SymExpr::Int(_), SymExpr::Record(..)) => match a.op {
                CmpOp::Eq => return SatResult::Unsat,
                CmpOp::Ne => {}
                _ => flat.push(a.clone()),
            },
            _ => flat.push(a.clone()),
        }
    }

    let mut uf = UnionFind::new();
    for a in &flat {
        if let (CmpOp::Eq, SymExpr::Var(x), SymExpr::Var(y)) = (a.op, &a.lhs, &a.rhs) {
            uf.union(x, y);
        }
    }
    let vars = p.vars();
    let classes: BTreeMap<String, String> = vars.iter().map(|v| (v.clone(), uf.find(v))).collect();

    let mut edges = Vec::new();
    let mut nes = Vec::new();
    for a in &flat {
        let lhs = rename_vars(&a.lhs, &mut uf);
        let rhs = rename_vars(&a.rhs, &mut uf);
        if a.op == CmpOp::Eq && lhs == rhs {
            continue;
        }
        if a.op == CmpOp::Ne && lhs == rhs {
            return SatResult::Unsat;
        }
        let (Some(l), Some(r)) = (linearize(&lhs), linearize(&rhs)) else {
            continue;
        };
        let Some(diff) = l.combine(&r, -1) else {
            continue;
        };
        if let Some(k) = diff.as_constant() {
            if !a.op.holds(k, 0) {
                return SatResult::Unsat;
            }
            continue;
        }
        let le = |lin: Option<Lin>| lin.and_then(|l| as_edge(&l));
        let one = Lin::constant(1);
        match a.op {
            CmpOp::Le => edges.extend(le(Some(diff))),
            CmpOp::Lt => edges.extend(le(diff.combine(&one, 1))),
            CmpOp::Ge => edges.extend(le(diff.scale(-1))),
            CmpOp::Gt => edges.extend(le(diff.scale(-1).and_then(|d| d.combine(&one, 1)))),
            CmpOp::Eq => {
                edges.extend(le(Some(diff.clone())));
                edges.extend(le(diff.scale(-1)));
            }
            CmpOp::Ne => nes.extend(as_diff_ne(&diff)),
        }
    }
    let problem = Problem { nes, originals: p.atoms.clone(), classes, vars };
    let mut budget = BRANCH_BUDGET;
    problem.solve(&mut edges, &mut budget)
}

/// `Yes` iff `p` together with the negation of `atom` is unsatisfiable.
pub fn entails_pure(p: &PureSet, atom: &PureAtom) -> Entailment {
    if atom.lhs == atom.rhs && matches!(atom.op, CmpOp::Eq | CmpOp::Le | CmpOp::Ge) {
        return Entailment::Yes;
    }
    if atom.op == CmpOp::Eq {
        if let (SymExpr::Record(c1, f1), SymExpr::Record(c2, f2)) = (&atom.lhs, &atom.rhs) {
            if c1 != c2 || f1.len() != f2.len() {
                return match check_sat(p) {
                    SatResult::Unsat => Entailment::Yes,
                    SatResult::Sat(_) => Entailment::No,
                    SatResult::Unknown => Entailment::Unknown,
                };
            }
            let mut verdict = Entailment::Yes;
            for (x, y) in f1.iter().zip(f2) {
                match entails_pure(p, &PureAtom::eq(x.clone(), y.clone())) {
                    Entailment::Yes => {}
                    Entailment::No => return Entailment::No,
                    Entailment::Unknown => verdict = Entailment::Unknown,
                }
            }
            return verdict;
        }
    }
    match check_sat(&p.with(atom.negated())) {
        SatResult::Unsat => Entailment::Yes,
        SatResult::Sat(_) => Entailment::No,
        SatResult::Unknown => Entailment::Unknown,
    }
}

fn known_constant(var: &str, ctx: &PureSet) -> Option<i64> {
    let mentioned = ctx.atoms.iter().any(|a| a.op == CmpOp::Eq && (a.lhs == SymExpr::Var(var.into()) || a.rhs == SymExpr::Var(var.into())));
    if !mentioned {
        return None;
    }
    let SatResult::Sat(w) = check_sat(ctx) else {
        return None;
    };
    let c = w.get(var)?;
    ctx.proves(&PureAtom::eq(SymExpr::var(var), SymExpr::int(c))).then_some(c)
}

fn fold(e: &SymExpr, ctx: &PureSet, consts: &mut BTreeMap<String, Option<i64>>) -> SymExpr {
    use SymExpr::*;
    match e {
        Int(_) => e.clone(),
        Var(v) => {
            let c = *consts.entry(v.clone()).or_insert_with(|| known_constant(v, ctx));
            c.map(Int).unwrap_or_else(|| e.clone())
        }
        Neg(a) => match fold(a, ctx, consts) {
            Int(n) => n.checked_neg().map(Int).unwrap_or_else(|| SymExpr::neg(Int(n))),
            Neg(inner) => *inner,
            other => SymExpr::neg(other),
        },
        Add(a, b) => {
            let (a, b) = (fold(a, ctx, consts), fold(b, ctx, consts));
            match (&a, &b) {
                (Int(x), Int(y)) => x.checked_add(*y).map(Int).unwrap_or_else(|| SymExpr::add(a, b)),
                (Int(0), _) => b,
                (_, Int(0)) => a,
                (Add(inner, c1), Int(c2)) if matches!(**c1, Int(_)) => {
                    let c1 = c1.as_int().unwrap_or(0);
                    match c1.checked_add(*c2) {
                        Some(0) => (**inner).clone(),
                        Some(c) => SymExpr::add((**inner).clone(), Int(c)),
                        None => SymExpr::add(a.clone(), b.clone()),
                    }
                }
                _ => SymExpr::add(a, b),
            }
        }
        Sub(a, b) => {
            let (a, b) = (fold(a, ctx, consts), fold(b, ctx, consts));
            match (&a, &b) {
                (Int(x), Int(y)) => x.checked_sub(*y).map(Int).unwrap_or_else(|| SymExpr::sub(a, b)),
                (_, Int(0)) => a,
                _ if a == b => Int(0),
                (_, Int(c)) => match c.checked_neg() {
                    Some(nc) => fold(&SymExpr::add(a.clone(), Int(nc)), ctx, consts),
                    None => SymExpr::sub(a.clone(), b.clone()),
                },
                _ => SymExpr::sub(a, b),
            }
        }
        Mul(a, b) => {
            let (a, b) = (fold(a, ctx, consts), fold(b, ctx, consts));
            match (&a, &b) {
                (Int(x), Int(y)) => x.checked_mul(*y).map(Int).unwrap_or_else(|| SymExpr::mul(a, b)),
                (Int(0), _) | (_, Int(0)) => Int(0),
                (Int(1), _) => b,
                (_, Int(1)) => a,
                _ => SymExpr::mul(a, b),
            }
        }
        Record(c, fs) => Record(c.clone(), fs.iter().map(|f| fold(f, ctx, consts)).collect()),
    }
}

/// Constant folding plus substitution of variables whose value `ctx`
/// determines. Overflowing operations are left unfolded.
pub fn simplify_expr(e: &SymExpr, ctx: &PureSet) -> SymExpr {
    let mut consts = BTreeMap::new();
    let mut cur = fold(e, ctx, &mut consts);
    loop {
        let next = fold(&cur, ctx, &mut consts);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}
