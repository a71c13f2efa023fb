use std::cell::{Cell, RefCell};
use std::collections::BTreeSet;

use thiserror::Error;

use crate::arith::{Entailment, PureSet};
use crate::formula::{free_vars_expr, normalize, substitute, substitute_expr, CmpOp, Formula, PredTable, PureAtom, Subst, SymExpr};
use crate::proofviz::{Outcome, ProofTree};

use super::symheap::{to_symheaps, Fresh, Polarity, Spatial, SymHeap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProverOptions {
    /// Bound on consecutive predicate folds between two consumed cells and,
    /// separately, on unfolds per branch.
    pub max_unfold: usize,
    /// Bound on rule applications per query.
    pub max_steps: usize,
}

impl Default for ProverOptions {
    fn default() -> Self {
        ProverOptions { max_unfold: 4, max_steps: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EntailmentResult {
    /// Every model of the antecedent is a model of `consequent * frame`.
    /// `binding` instantiates the consequent's existentials.
    Proved { proof: ProofTree, frame: SymHeap, binding: Subst },
    /// `residue` holds the unmatched antecedent and consequent atoms at the
    /// deepest point the search reached.
    Failed { proof: ProofTree, residue: (SymHeap, SymHeap), nearest_rule: String },
}

impl EntailmentResult {
    pub fn is_proved(&self) -> bool {
        matches!(self, EntailmentResult::Proved { .. })
    }

    pub fn proof(&self) -> &ProofTree {
        match self {
            EntailmentResult::Proved { proof, .. } | EntailmentResult::Failed { proof, .. } => proof,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inferred {
    pub frame: SymHeap,
    pub binding: Subst,
    pub proof: ProofTree,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("precondition not established; unmatched: {residue} (nearest rule: {rule})")]
pub struct FrameFailure {
    pub residue: SymHeap,
    pub rule: String,
    pub proof: Box<ProofTree>,
}

/// Frame inference: finds `frame` with `caller |= pre * frame`.
pub fn infer_frame(caller: &SymHeap, pre: &SymHeap, preds: &PredTable, opts: ProverOptions) -> Result<Inferred, FrameFailure> {
    match prove(caller, pre, preds, opts) {
        EntailmentResult::Proved { proof, frame, binding } => Ok(Inferred { frame, binding, proof }),
        EntailmentResult::Failed { proof, residue, nearest_rule } => {
            Err(FrameFailure { residue: residue.1, rule: nearest_rule, proof: Box::new(proof) })
        }
    }
}

/// One symbolic heap per case of `h.spatial[index]`'s definition, with the
/// instance replaced by the case body. Cases whose pure part is unsatisfiable
/// are dropped.
pub fn unfold(h: &SymHeap, index: usize, preds: &PredTable) -> Result<Vec<SymHeap>, String> {
    let Some(Spatial::Pred(name, args)) = h.spatial.get(index) else {
        return Err("not a predicate instance".into());
    };
    let mut fresh = Fresh::avoiding(h.vars().iter().chain(h.exists.iter()));
    let cases = pred_cases(preds, name, args, Polarity::Over, &mut fresh).ok_or_else(|| format!("unknown predicate '{name}'"))?;
    let mut out = Vec::new();
    for d in cases {
        let mut r = h.clone();
        r.spatial.remove(index);
        r.spatial.extend(d.spatial);
        r.pure.extend(&d.pure);
        r.exists.extend(d.exists);
        r.imprecise |= d.imprecise;
        if !r.pure.check_sat().is_unsat() {
            out.push(r);
        }
    }
    Ok(out)
}

fn pred_cases(preds: &PredTable, name: &str, args: &[SymExpr], pol: Polarity, fresh: &mut Fresh) -> Option<Vec<SymHeap>> {
    let def = preds.get(name)?;
    if def.params.len() != args.len() {
        return None;
    }
    let map: Subst = def.params.iter().cloned().zip(args.iter().cloned()).collect();
    Some(to_symheaps(&substitute(&def.body, &map), pol, fresh))
}

/// Entailment between formulas: each antecedent case must entail some
/// consequent case, with the same frame throughout.
pub fn prove_formulas(ante: &Formula, cons: &Formula, preds: &PredTable, opts: ProverOptions) -> EntailmentResult {
    let label = format!("{ante} |- {cons}");
    if normalize(ante) == normalize(cons) {
        return EntailmentResult::Proved { proof: ProofTree::new("Reflexivity", label), frame: SymHeap::emp(), binding: Subst::new() };
    }
    let mut names = crate::formula::free_vars(ante);
    names.extend(crate::formula::free_vars(cons));
    let mut fresh = Fresh::avoiding(names.iter());
    let antes = to_symheaps(ante, Polarity::Over, &mut fresh);
    let conses = to_symheaps(cons, Polarity::Under, &mut fresh);
    let mut tree = ProofTree::new("entail", label);
    if antes.is_empty() {
        tree.add(0, "pure-contradiction", "antecedent is false");
        return EntailmentResult::Proved { proof: tree, frame: SymHeap::emp(), binding: Subst::new() };
    }
    let mut frame: Option<(Formula, SymHeap, Subst)> = None;
    for a in &antes {
        let mut last_failure = None;
        let mut proved = None;
        for c in &conses {
            match prove(a, c, preds, opts) {
                EntailmentResult::Proved { proof, frame, binding } => {
                    tree.graft(0, &proof);
                    proved = Some((frame, binding));
                    break;
                }
                EntailmentResult::Failed { proof, residue, nearest_rule } => {
                    let id = tree.graft(0, &proof);
                    tree.set_outcome(id, Outcome::Failed);
                    last_failure = Some((residue, nearest_rule));
                }
            }
        }
        match proved {
            Some((f, b)) => {
                let key = normalize(&f.to_formula());
                match &frame {
                    None => frame = Some((key, f, b)),
                    Some((k, _, _)) if *k == key => {}
                    Some(_) => {
                        tree.set_outcome(0, Outcome::Failed);
                        let n = tree.add(0, "frame-mismatch", "antecedent cases leave different frames");
                        tree.set_outcome(n, Outcome::Failed);
                        return EntailmentResult::Failed {
                            proof: tree,
                            residue: (a.clone(), SymHeap::emp()),
                            nearest_rule: "frame-mismatch".into(),
                        };
                    }
                }
            }
            None => {
                tree.set_outcome(0, Outcome::Failed);
                let (residue, nearest_rule) = last_failure
                    .unwrap_or_else(|| ((a.clone(), SymHeap { imprecise: false, ..Default::default() }), "no-consequent-case".into()));
                return EntailmentResult::Failed { proof: tree, residue, nearest_rule };
            }
        }
    }
    let (_, frame, binding) = frame.expect("at least one antecedent case");
    EntailmentResult::Proved { proof: tree, frame, binding }
}

fn canonical(h: &SymHeap) -> (Vec<Spatial>, Vec<PureAtom>, &BTreeSet<String>, bool) {
    let mut s = h.spatial.clone();
    s.sort();
    let mut p = h.pure.atoms().to_vec();
    p.sort();
    p.dedup();
    (s, p, &h.exists, h.imprecise)
}

/// Proves `ante |- cons * frame` by subtraction of spatial atoms.
pub fn prove(ante: &SymHeap, cons: &SymHeap, preds: &PredTable, opts: ProverOptions) -> EntailmentResult {
    let label = format!("{ante} |- {cons}");
    if canonical(ante) == canonical(cons) {
        return EntailmentResult::Proved { proof: ProofTree::new("Reflexivity", label), frame: SymHeap::emp(), binding: Subst::new() };
    }
    let mut tree = ProofTree::new("entail", label);
    for s in ante.spatial.iter().chain(cons.spatial.iter()) {
        if let Spatial::Pred(n, a) = s {
            if preds.arity(n) != Some(a.len()) {
                tree.set_outcome(0, Outcome::Failed);
                tree.set_detail(0, format!("unknown predicate {n}/{}", a.len()));
                return EntailmentResult::Failed {
                    proof: tree,
                    residue: (ante.clone(), cons.clone()),
                    nearest_rule: "unknown-predicate".into(),
                };
            }
        }
    }
    let mut used: BTreeSet<String> = ante.vars();
    used.extend(cons.vars());
    used.extend(ante.exists.iter().cloned());
    used.extend(cons.exists.iter().cloned());
    let mut fresh = Fresh::avoiding(used.iter());

    // Antecedent existentials become constants; consequent ones unification variables.
    let a_map: Subst = ante.exists.iter().map(|x| (x.clone(), SymExpr::Var(fresh.name(x)))).collect();
    let c_map: Subst = cons.exists.iter().map(|x| (x.clone(), SymExpr::Var(fresh.name(x)))).collect();
    let a = ante.substitute(&a_map);
    let c = cons.substitute(&c_map);
    let evars: BTreeSet<String> = c_map.values().filter_map(|e| e.as_var().map(str::to_string)).collect();

    let mut pure = a.pure.clone();
    add_separation(&mut pure, &a.spatial);
    let goal = Goal {
        ante: a.spatial.clone(),
        cons: c.spatial.clone(),
        pure,
        evars,
        sigma: Subst::new(),
        oblig: c.pure.atoms().to_vec(),
        folds: 0,
        unfolds: 0,
    };
    let prover = Prover { preds, opts, fresh: RefCell::new(fresh), steps: Cell::new(0), tree: RefCell::new(tree) };
    let result = prover.search(goal, 0, 0);
    let mut tree = prover.tree.into_inner();
    match result {
        Ok(s) => {
            let original: BTreeSet<String> = ante.free_vars().into_iter().chain(cons.free_vars()).collect();
            let mut frame = SymHeap { spatial: s.frame, imprecise: a.imprecise, ..Default::default() };
            frame.exists = frame.vars().into_iter().filter(|v| !original.contains(v)).collect();
            tree.set_detail(0, format!("frame: {frame}"));
            let binding = c_map
                .iter()
                .filter_map(|(orig, renamed)| {
                    let r = renamed.as_var()?;
                    s.sigma.get(r).map(|e| (orig.clone(), e.clone()))
                })
                .collect();
            EntailmentResult::Proved { proof: tree, frame, binding }
        }
        Err(f) => {
            tree.set_outcome(0, Outcome::Failed);
            EntailmentResult::Failed {
                proof: tree,
                residue: (SymHeap::with_spatial(f.ante), SymHeap::with_spatial(f.cons)),
                nearest_rule: f.rule,
            }
        }
    }
}

/// Allocated locations are positive and pairwise distinct.
pub(crate) fn add_separation(pure: &mut PureSet, atoms: &[Spatial]) {
    let locs: Vec<&SymExpr> = atoms
        .iter()
        .filter_map(|s| match s {
            Spatial::PointsTo(l, _) => Some(l),
            Spatial::Pred(..) => None,
        })
        .collect();
    for (i, l) in locs.iter().enumerate() {
        pure.push(PureAtom::new(CmpOp::Ge, (*l).clone(), SymExpr::int(1)));
        for m in &locs[i + 1..] {
            pure.push(PureAtom::ne((*l).clone(), (*m).clone()));
        }
    }
}

#[derive(Debug, Clone)]
struct Goal {
    ante: Vec<Spatial>,
    cons: Vec<Spatial>,
    pure: PureSet,
    evars: BTreeSet<String>,
    sigma: Subst,
    oblig: Vec<PureAtom>,
    folds: usize,
    unfolds: usize,
}

impl Goal {
    fn describe(&self) -> String {
        let a: Vec<String> = self.ante.iter().map(|s| s.to_string()).collect();
        let c: Vec<String> = self.cons.iter().map(|s| s.substitute(&self.sigma).to_string()).collect();
        let show = |v: Vec<String>| if v.is_empty() { "emp".to_string() } else { v.join(" * ") };
        format!("{} |- {}", show(a), show(c))
    }

    fn unbound(&self, e: &SymExpr) -> bool {
        let mut vs = BTreeSet::new();
        free_vars_expr(e, &mut vs);
        vs.iter().any(|v| self.evars.contains(v) && !self.sigma.contains_key(v))
    }

    fn bind(&mut self, e: &str, val: SymExpr) {
        // Keep bindings fully resolved.
        let one: Subst = [(e.to_string(), val.clone())].into();
        for v in self.sigma.values_mut() {
            *v = substitute_expr(v, &one);
        }
        self.sigma.insert(e.to_string(), val);
    }

    fn is_free_evar(&self, e: &SymExpr) -> Option<String> {
        match e {
            SymExpr::Var(v) if self.evars.contains(v) && !self.sigma.contains_key(v) => Some(v.clone()),
            _ => None,
        }
    }

    /// Matches a consequent value against an antecedent value; equalities
    /// that cannot be decided now are deferred to the final pure check.
    fn unify_value(&mut self, v: &SymExpr, va: &SymExpr) -> bool {
        let v = substitute_expr(v, &self.sigma);
        if let Some(e) = self.is_free_evar(&v) {
            self.bind(&e, va.clone());
            return true;
        }
        match (&v, va) {
            (SymExpr::Record(c, fs), SymExpr::Record(c2, fs2)) => {
                c == c2 && fs.len() == fs2.len() && fs.iter().zip(fs2).all(|(x, y)| self.unify_value(x, y))
            }
            (SymExpr::Record(..), _) | (_, SymExpr::Record(..)) if !self.unbound(&v) => {
                // A record never equals an opaque value we cannot unfold.
                v == *va
            }
            _ => {
                if v == *va {
                    return true;
                }
                if !self.unbound(&v) && self.pure.entails(&PureAtom::ne(v.clone(), va.clone())) == Entailment::Yes {
                    return false;
                }
                self.oblig.push(PureAtom::eq(v, va.clone()));
                true
            }
        }
    }

    /// Matches predicate arguments: binds free existentials, otherwise
    /// requires provable equality.
    fn unify_args(&mut self, args: &[SymExpr], actual: &[SymExpr]) -> bool {
        for (x, y) in args.iter().zip(actual) {
            let x = substitute_expr(x, &self.sigma);
            if let Some(e) = self.is_free_evar(&x) {
                self.bind(&e, y.clone());
                continue;
            }
            if self.unbound(&x) || !(x == *y || self.pure.proves_eq(&x, y)) {
                return false;
            }
        }
        true
    }
}

struct Success {
    frame: Vec<Spatial>,
    sigma: Subst,
}

struct Failure {
    ante: Vec<Spatial>,
    cons: Vec<Spatial>,
    rule: String,
    depth: usize,
}

fn deeper(best: Option<Failure>, f: Failure) -> Option<Failure> {
    match best {
        Some(b) if b.depth >= f.depth => Some(b),
        _ => Some(f),
    }
}

struct Prover<'a> {
    preds: &'a PredTable,
    opts: ProverOptions,
    fresh: RefCell<Fresh>,
    steps: Cell<usize>,
    tree: RefCell<ProofTree>,
}

fn root_of(s: &Spatial) -> Option<&SymExpr> {
    match s {
        Spatial::PointsTo(l, _) => Some(l),
        Spatial::Pred(_, args) => args.first(),
    }
}

impl Prover<'_> {
    /// The builtin list predicate, whose base case carries no disequality
    /// guard, so segments compose.
    fn is_segment(&self, name: &str) -> bool {
        self.preds.get(name).is_some_and(|d| *d == crate::formula::PredDef::builtin_list())
    }

    /// A predicate instance whose every satisfiable case is empty.
    fn provably_empty(&self, pure: &PureSet, atom: &Spatial) -> bool {
        let Spatial::Pred(name, args) = atom else { return false };
        let Some(cases) = pred_cases(self.preds, name, args, Polarity::Over, &mut self.fresh.borrow_mut()) else {
            return false;
        };
        cases.iter().all(|d| {
            if d.spatial.is_empty() && !d.imprecise {
                return true;
            }
            let mut p = pure.clone();
            p.extend(&d.pure);
            add_separation(&mut p, &d.spatial);
            p.check_sat().is_unsat()
        })
    }

    fn node(&self, parent: usize, rule: &str, input: String) -> usize {
        self.tree.borrow_mut().add(parent, rule, input)
    }

    fn mark(&self, id: usize, o: Outcome) {
        self.tree.borrow_mut().set_outcome(id, o);
    }

    fn fail(&self, g: &Goal, rule: &str, depth: usize) -> Failure {
        Failure { ante: g.ante.clone(), cons: g.cons.iter().map(|s| s.substitute(&g.sigma)).collect(), rule: rule.into(), depth }
    }

    fn attempt(&self, g: Goal, node: usize, depth: usize, best: &mut Option<Failure>) -> Option<Success> {
        match self.search(g, node, depth + 1) {
            Ok(s) => Some(s),
            Err(f) => {
                self.mark(node, Outcome::Failed);
                *best = deeper(best.take(), f);
                None
            }
        }
    }

    fn search(&self, g: Goal, parent: usize, depth: usize) -> Result<Success, Failure> {
        if self.steps.get() >= self.opts.max_steps {
            let n = self.node(parent, "step-limit", g.describe());
            self.mark(n, Outcome::Failed);
            return Err(self.fail(&g, "step-limit", depth));
        }
        self.steps.set(self.steps.get() + 1);
        if g.pure.check_sat().is_unsat() {
            self.node(parent, "pure-contradiction", g.pure.to_string());
            return Ok(Success { frame: g.ante, sigma: g.sigma });
        }
        if g.cons.is_empty() {
            return self.finish(g, parent, depth);
        }
        let c = g.cons[0].substitute(&g.sigma);
        let rest: Vec<Spatial> = g.cons[1..].to_vec();
        let mut best: Option<Failure> = None;
        let mut nearest;

        // Exact spatial match.
        if let Some(i) = g.ante.iter().position(|a| *a == c) {
            let n = self.node(parent, "match", format!("{c}"));
            let mut g2 = g.clone();
            g2.ante.remove(i);
            g2.cons = rest.clone();
            if let Some(s) = self.attempt(g2, n, depth, &mut best) {
                return Ok(s);
            }
        }

        match &c {
            Spatial::PointsTo(l, v) => {
                nearest = "points-to";
                let loc_free = g.unbound(l);
                for (i, a) in g.ante.iter().enumerate() {
                    let Spatial::PointsTo(la, va) = a else { continue };
                    let mut g2 = g.clone();
                    if loc_free {
                        match g.is_free_evar(l) {
                            Some(e) => g2.bind(&e, la.clone()),
                            None => continue,
                        }
                    } else if !(l == la || g.pure.proves_eq(l, la)) {
                        continue;
                    }
                    let n = self.node(parent, "points-to", format!("{c} ~ {a}"));
                    if !g2.unify_value(v, va) {
                        self.mark(n, Outcome::Failed);
                        best = deeper(best, self.fail(&g, "points-to", depth + 1));
                    } else {
                        g2.ante.remove(i);
                        g2.cons = rest.clone();
                        // Consuming a cell is progress, so the fold budget
                        // restarts; the antecedent bounds the total.
                        g2.folds = 0;
                        if let Some(s) = self.attempt(g2, n, depth, &mut best) {
                            return Ok(s);
                        }
                    }
                    if !loc_free {
                        // Separation: no other cell can sit at the same location.
                        break;
                    }
                }
            }
            Spatial::Pred(name, args) => {
                nearest = "pred-match";
                for (i, a) in g.ante.iter().enumerate() {
                    let Spatial::Pred(na, aa) = a else { continue };
                    if na != name || aa.len() != args.len() {
                        continue;
                    }
                    let mut g2 = g.clone();
                    if !g2.unify_args(args, aa) {
                        continue;
                    }
                    let n = self.node(parent, "pred-match", format!("{c} ~ {a}"));
                    g2.ante.remove(i);
                    g2.cons = rest.clone();
                    if let Some(s) = self.attempt(g2, n, depth, &mut best) {
                        return Ok(s);
                    }
                }
                // Segment composition: list(a, b) * list(b, c) |= list(a, c).
                if self.is_segment(name) && args.len() == 2 && !g.unbound(&args[0]) {
                    for (i, a) in g.ante.iter().enumerate() {
                        let Spatial::Pred(na, aa) = a else { continue };
                        if na != name || !(aa[0] == args[0] || g.pure.proves_eq(&aa[0], &args[0])) {
                            continue;
                        }
                        let n = self.node(parent, "compose", format!("{c} ~ {a}"));
                        let mut g2 = g.clone();
                        g2.ante.remove(i);
                        let mut cons = vec![Spatial::Pred(name.clone(), vec![aa[1].clone(), args[1].clone()])];
                        cons.extend(rest.iter().cloned());
                        g2.cons = cons;
                        if let Some(s) = self.attempt(g2, n, depth, &mut best) {
                            return Ok(s);
                        }
                    }
                }
                if g.folds < self.opts.max_unfold {
                    nearest = "fold";
                    let cases = pred_cases(self.preds, name, args, Polarity::Under, &mut self.fresh.borrow_mut()).unwrap_or_default();
                    for d in cases {
                        let n = self.node(parent, "fold", format!("{c} <= {d}"));
                        let mut g2 = g.clone();
                        g2.evars.extend(d.exists.iter().cloned());
                        let refuted = d.pure.atoms().iter().any(|p| {
                            let p = PureAtom::new(p.op, substitute_expr(&p.lhs, &g2.sigma), substitute_expr(&p.rhs, &g2.sigma));
                            !g2.unbound(&p.lhs) && !g2.unbound(&p.rhs) && g2.pure.entails(&p.negated()) == Entailment::Yes
                        });
                        if refuted || d.imprecise {
                            self.mark(n, Outcome::Pruned);
                            continue;
                        }
                        g2.oblig.extend(d.pure.atoms().iter().cloned());
                        let mut cons = d.spatial.clone();
                        cons.extend(rest.iter().cloned());
                        g2.cons = cons;
                        g2.folds += 1;
                        if let Some(s) = self.attempt(g2, n, depth, &mut best) {
                            return Ok(s);
                        }
                    }
                }
            }
        }

        // Antecedent unfold: prefer an instance rooted where the consequent needs a cell.
        if g.unfolds < self.opts.max_unfold {
            let root = root_of(&c).filter(|r| !g.unbound(r));
            let is_pred = |s: &Spatial| matches!(s, Spatial::Pred(..));
            let pick = g
                .ante
                .iter()
                .position(|s| {
                    is_pred(s)
                        && match (root, root_of(s)) {
                            (Some(r), Some(r2)) => r == r2 || g.pure.proves_eq(r, r2),
                            _ => false,
                        }
                })
                .or_else(|| g.ante.iter().position(is_pred));
            if let Some(pi) = pick {
                if let Some(s) = self.unfold_case_split(&g, pi, parent, depth, &mut best) {
                    return Ok(s);
                }
                nearest = "unfold";
            }
        }
        let n = self.node(parent, nearest, g.describe());
        self.mark(n, Outcome::Failed);
        Err(best.unwrap_or_else(|| self.fail(&g, nearest, depth)))
    }

    fn unfold_case_split(&self, g: &Goal, pi: usize, parent: usize, depth: usize, best: &mut Option<Failure>) -> Option<Success> {
        let Spatial::Pred(name, args) = &g.ante[pi] else { return None };
        let n = self.node(parent, "unfold", format!("{}", g.ante[pi]));
        let cases = pred_cases(self.preds, name, args, Polarity::Over, &mut self.fresh.borrow_mut()).unwrap_or_default();
        let mut result: Option<(Vec<Spatial>, Subst)> = None;
        for d in cases {
            let mut g2 = g.clone();
            g2.ante.remove(pi);
            for s in d.spatial.iter().rev() {
                g2.ante.insert(pi, s.clone());
            }
            g2.pure.extend(&d.pure);
            add_separation(&mut g2.pure, &g2.ante);
            g2.unfolds += 1;
            let cn = self.node(n, "case", format!("{d}"));
            if d.imprecise {
                self.mark(cn, Outcome::Failed);
                self.mark(n, Outcome::Failed);
                return None;
            }
            if g2.pure.check_sat().is_unsat() {
                self.mark(cn, Outcome::Pruned);
                continue;
            }
            let s = self.attempt(g2, cn, depth, best)?;
            let mut frame = s.frame.clone();
            frame.sort();
            match &result {
                None => result = Some((frame, s.sigma)),
                Some((f, sig)) if *f == frame && *sig == s.sigma => {}
                Some(_) => {
                    self.mark(cn, Outcome::Failed);
                    self.mark(n, Outcome::Failed);
                    *best = deeper(best.take(), self.fail(g, "unfold", depth + 1));
                    return None;
                }
            }
        }
        // No satisfiable case: the antecedent has no models.
        Some(match result {
            Some((frame, sigma)) => Success { frame, sigma },
            None => Success { frame: g.ante.clone(), sigma: g.sigma.clone() },
        })
    }

    fn finish(&self, mut g: Goal, parent: usize, depth: usize) -> Result<Success, Failure> {
        let subst_atom = |a: &PureAtom, s: &Subst| PureAtom::new(a.op, substitute_expr(&a.lhs, s), substitute_expr(&a.rhs, s));
        // Solve `e == t` for still-free existentials.
        loop {
            let pending: Vec<PureAtom> = g.oblig.iter().map(|a| subst_atom(a, &g.sigma)).collect();
            let solvable = pending.iter().find_map(|a| {
                if a.op != CmpOp::Eq {
                    return None;
                }
                match (g.is_free_evar(&a.lhs), g.is_free_evar(&a.rhs)) {
                    (Some(e), _) if !g.unbound(&a.rhs) => Some((e, a.rhs.clone())),
                    (_, Some(e)) if !g.unbound(&a.lhs) => Some((e, a.lhs.clone())),
                    _ => None,
                }
            });
            match solvable {
                Some((e, t)) => g.bind(&e, t),
                None => break,
            }
        }
        let pending: Vec<PureAtom> = g.oblig.iter().map(|a| subst_atom(a, &g.sigma)).collect();
        let shown: Vec<String> = pending.iter().map(|a| a.to_string()).collect();
        let n = self.node(parent, "pure-check", if shown.is_empty() { "true".into() } else { shown.join(" && ") });
        if let Some(a) = pending.iter().find(|a| g.unbound(&a.lhs) || g.unbound(&a.rhs)) {
            self.mark(n, Outcome::Failed);
            self.tree.borrow_mut().set_detail(n, format!("unresolved existential in {a}"));
            return Err(self.fail(&g, "pure-check", depth));
        }
        if let Some(a) = pending.iter().find(|a| !g.pure.proves(a)) {
            self.mark(n, Outcome::Failed);
            self.tree.borrow_mut().set_detail(n, format!("cannot prove {a}"));
            return Err(self.fail(&g, "pure-check", depth));
        }
        let empties: Vec<bool> = g.ante.iter().map(|a| self.provably_empty(&g.pure, a)).collect();
        let mut keep = empties.iter().map(|e| !e);
        g.ante.retain(|_| keep.next().unwrap_or(true));
        let leftover: Vec<String> = g.ante.iter().map(|s| s.to_string()).collect();
        let fr = self.node(n, "frame", if leftover.is_empty() { "emp".into() } else { leftover.join(" * ") });
        let _ = fr;
        Ok(Success { frame: g.ante, sigma: g.sigma })
    }
}
