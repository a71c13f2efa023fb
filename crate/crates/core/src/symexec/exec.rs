use std::cell::{Cell, RefCell};
use std::collections::BTreeSet;
use std::time::Instant;

use crate::arith::{simplify_expr, Entailment, PureSet, SatResult, Witness};
use crate::entailment::{add_separation, prove, to_symheaps, unfold, EntailmentResult, Fresh, Polarity, Spatial, SymHeap};
use crate::formula::{free_vars, substitute, substitute_expr, CmpOp, Formula, PureAtom, Subst, SymExpr};
use crate::ir::{assigned_vars, Addr, Cond, Expr, Function, Lhs, Place, Program, Stmt, StmtKind};
use crate::proofviz::{Outcome, ProofTree};

use super::reach::unreachable;
use super::{show, Diagnostic, DiagnosticKind, ExecOptions, Stats, Status, SymState, Verdict};

use DiagnosticKind as K;

/// Result of executing one statement on one state.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    State(SymState),
    Report(Diagnostic),
}

/// Branching computation: each path either yields a value or stops.
type Fork<T> = Vec<(SymState, Result<T, Diagnostic>)>;

fn then<T, U>(fork: Fork<T>, mut f: impl FnMut(SymState, T) -> Fork<U>) -> Fork<U> {
    let mut out = Vec::new();
    for (s, r) in fork {
        match r {
            Ok(v) => out.extend(f(s, v)),
            Err(d) => out.push((s, Err(d))),
        }
    }
    out
}

fn ok<T>(s: SymState, v: T) -> Fork<T> {
    vec![(s, Ok(v))]
}

fn fold(e: SymExpr) -> SymExpr {
    simplify_expr(&e, &PureSet::new())
}

fn cell_value(s: &SymState, i: usize) -> SymExpr {
    match &s.heap.spatial[i] {
        Spatial::PointsTo(_, v) => v.clone(),
        Spatial::Pred(..) => unreachable!("lookup returns points-to indices"),
    }
}

fn set_cell(s: &mut SymState, i: usize, v: SymExpr) {
    if let Spatial::PointsTo(_, old) = &mut s.heap.spatial[i] {
        *old = v;
    }
}

/// Successful entailment of a state against an assertion.
struct Entailed {
    frame: SymHeap,
    binding: Subst,
    proof: ProofTree,
    /// The matched consequent ends in `true` and absorbs any leftover.
    absorbs: bool,
}

struct NotEntailed {
    proof: Option<ProofTree>,
    residue: SymHeap,
}

/// Symbolic executor for one function.
pub struct Executor<'p> {
    program: &'p Program,
    function: &'p Function,
    opts: ExecOptions,
    tree: RefCell<ProofTree>,
    counter: Cell<usize>,
    branches: Cell<usize>,
}

impl<'p> Executor<'p> {
    pub fn new(program: &'p Program, function: &'p Function, opts: ExecOptions) -> Self {
        let label = format!("{} @ {} @ ... @ {} @", function.qualified_name(), function.pre, function.post);
        Executor {
            program,
            function,
            opts,
            tree: RefCell::new(ProofTree::new("verify", label)),
            counter: Cell::new(0),
            branches: Cell::new(0),
        }
    }

    fn sym(&self, prefix: &str) -> SymExpr {
        let n = self.counter.get();
        self.counter.set(n + 1);
        SymExpr::Var(format!("${prefix}{n}"))
    }

    fn node(&self, parent: usize, rule: &str, input: impl Into<String>) -> usize {
        self.tree.borrow_mut().add(parent, rule, input)
    }

    fn fresh_for(s: &SymState) -> Fresh {
        let mut names = s.heap.vars();
        for v in s.store.values() {
            crate::formula::free_vars_expr(v, &mut names);
        }
        Fresh::avoiding(names.iter())
    }

    /// Sat check that records solver give-ups on the state.
    fn feasible(&self, s: &mut SymState) -> bool {
        match s.heap.pure.check_sat() {
            SatResult::Unsat => false,
            SatResult::Unknown => {
                s.tainted = true;
                true
            }
            SatResult::Sat(_) => true,
        }
    }

    fn witness(s: &SymState) -> Option<String> {
        let SatResult::Sat(w) = s.heap.pure.check_sat() else { return None };
        Some(render(s, &w))
    }

    /// A diagnostic for state `s`, with a failed proof node. Refutations
    /// without a concrete model are downgraded to `Unknown`.
    fn diag(&self, s: &SymState, kind: K, stmt: Option<usize>, message: String) -> Diagnostic {
        let mut kind = kind;
        let mut counter_example = None;
        let mut message = message;
        if kind.is_refuting() {
            counter_example = Self::witness(s);
            if counter_example.is_none() {
                message = format!("possible {kind}: {message}");
                kind = K::Unknown;
            }
        }
        let n = self.node(s.node, kind.rule(), message.clone());
        self.tree.borrow_mut().set_outcome(n, Outcome::Failed);
        Diagnostic { kind, function: self.function.qualified_name(), stmt, span: None, message, counter_example, proof_ref: Some(n) }
    }

    fn initial_states(&self) -> Vec<SymState> {
        let f = self.function;
        let mut store = std::collections::BTreeMap::new();
        for p in &f.params {
            store.insert(p.clone(), SymExpr::var(p));
        }
        let logical = free_vars(&f.pre);
        for v in &logical {
            store.entry(v.clone()).or_insert_with(|| SymExpr::var(v));
        }
        let mut ghosts: BTreeSet<String> = f.params.iter().cloned().collect();
        ghosts.extend(logical);
        ghosts.extend(free_vars(&f.post));
        ghosts.remove("result");
        let mut fresh = Fresh::avoiding(ghosts.iter());
        let mut out = Vec::new();
        for mut heap in to_symheaps(&f.pre, Polarity::Over, &mut fresh) {
            heap.exists.clear();
            let atoms = heap.spatial.clone();
            add_separation(&mut heap.pure, &atoms);
            let mut s = SymState::new(store.clone(), heap);
            s.ghosts = ghosts.iter().map(SymExpr::var).collect();
            // Chunks the contract owns without naming a root stay owned.
            for i in unreachable(&s) {
                let root = match &s.heap.spatial[i] {
                    Spatial::PointsTo(l, _) => Some(l.clone()),
                    Spatial::Pred(_, args) => args.first().cloned(),
                };
                s.ghosts.extend(root);
            }
            if self.feasible(&mut s) {
                out.push(s);
            }
        }
        out
    }

    /// Runs the whole function: body, scope exit, postcondition.
    pub fn verify(self) -> Verdict {
        let start = Instant::now();
        let mut diags: Vec<Diagnostic> = Vec::new();
        let mut paths = 0;
        for s in self.initial_states() {
            for step in self.exec_block(s, &self.function.body, None) {
                match step {
                    Step::Report(d) => diags.push(d),
                    Step::State(end) => {
                        paths += 1;
                        diags.extend(self.exit_checks(end));
                    }
                }
            }
        }
        // One report per kind and statement.
        let mut seen = BTreeSet::new();
        diags.retain(|d| seen.insert((d.kind, d.stmt)));
        let status = if diags.iter().any(|d| d.kind.is_refuting()) {
            Status::Refuted
        } else if let Some(d) = diags.first() {
            Status::Inconclusive(d.message.clone())
        } else {
            Status::Verified
        };
        let mut proof = self.tree.into_inner();
        if status != Status::Verified {
            proof.set_outcome(0, Outcome::Failed);
        }
        let stats = Stats { rule_applications: proof.len(), branches: self.branches.get(), paths, elapsed: start.elapsed() };
        Verdict { function: self.function.qualified_name(), status, diagnostics: diags, proof, stats }
    }

    fn exit_checks(&self, mut s: SymState) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let result = s.store.get("result").cloned().unwrap_or(SymExpr::Int(0));
        let post = substitute(&self.function.post, &[("result".to_string(), result)].into());
        // Logical variables that neither the parameters nor the precondition bind.
        let pre_vars = free_vars(&self.function.pre);
        let mut post = post;
        for v in free_vars(&post) {
            if !self.function.params.contains(&v) && !pre_vars.contains(&v) && !v.starts_with('$') {
                post = Formula::exists(v, post);
            }
        }
        s.node = self.node(s.node, "post", format!("{post}"));
        match self.entail(&s, &post) {
            Ok(e) => {
                self.tree.borrow_mut().graft(s.node, &e.proof);
                if s.heap.imprecise && !e.absorbs {
                    out.push(self.diag(&s, K::Unknown, None, "heap at exit is only partially known".into()));
                } else if !e.frame.is_emp() && !e.absorbs {
                    out.push(self.diag(&s, K::MemoryLeak, None, format!("chunks {} are not released at return", spatial_text(&e.frame))));
                }
            }
            Err(ne) => {
                if let Some(p) = &ne.proof {
                    let n = self.tree.borrow_mut().graft(s.node, p);
                    self.tree.borrow_mut().set_outcome(n, Outcome::Failed);
                }
                let kind = if s.heap.imprecise || s.tainted { K::Unknown } else { K::ContractViolation };
                out.push(self.diag(&s, kind, None, format!("postcondition not established; unmatched: {}", ne.residue)));
            }
        }
        if out.is_empty() && s.tainted {
            out.push(self.diag(&s, K::Unknown, None, "arithmetic outside the decidable fragment".into()));
        }
        out
    }

    /// `state |- f * frame`, trying each consequent case in order.
    fn entail(&self, s: &SymState, f: &Formula) -> Result<Entailed, NotEntailed> {
        let ante = SymHeap { exists: BTreeSet::new(), ..s.heap.clone() };
        let cases = to_symheaps(f, Polarity::Under, &mut Self::fresh_for(s));
        let mut last = NotEntailed {
            proof: None,
            residue: SymHeap { pure: PureSet::from_atoms([PureAtom::ne(SymExpr::Int(0), SymExpr::Int(0))]), ..SymHeap::emp() },
        };
        for c in cases {
            match prove(&ante, &c, &self.program.preds, self.opts.prover) {
                EntailmentResult::Proved { proof, frame, binding } => {
                    return Ok(Entailed { frame, binding, proof, absorbs: c.imprecise });
                }
                EntailmentResult::Failed { proof, residue, .. } => {
                    last = NotEntailed { proof: Some(proof), residue: residue.1 };
                }
            }
        }
        Err(last)
    }

    /// Replaces program variables by their current values; other free
    /// variables become existential.
    fn instantiate(&self, f: &Formula, s: &SymState) -> Formula {
        let mut g = f.clone();
        for v in free_vars(f) {
            if !s.store.contains_key(&v) {
                g = Formula::exists(v, g);
            }
        }
        substitute(&g, &s.store)
    }

    /// Statements in order; with `scope` set, locals introduced by the
    /// block die at its end and chunks only they reached are reported.
    pub fn exec_block(&self, s: SymState, body: &[Stmt], scope: Option<usize>) -> Vec<Step> {
        let entry: BTreeSet<String> = s.store.keys().cloned().collect();
        let mut live = vec![s];
        let mut out = Vec::new();
        for stmt in body {
            let mut next = Vec::new();
            for st in live {
                for step in self.exec_stmt(st, stmt) {
                    match step {
                        Step::State(x) => next.push(x),
                        r => out.push(r),
                    }
                }
            }
            if next.len() > self.opts.max_paths {
                let d = self.diag(&next[0], K::Unknown, Some(stmt.id), format!("more than {} paths", self.opts.max_paths));
                out.push(Step::Report(d));
                next.truncate(self.opts.max_paths);
            }
            live = next;
        }
        for mut st in live {
            st.store.retain(|k, _| entry.contains(k) || k == "result");
            let site = scope;
            out.extend(self.collect_unreachable(&mut st, K::UnreachableMemory, site).into_iter().map(Step::Report));
            out.push(Step::State(st));
        }
        out
    }

    /// Reports and drops chunks no root reaches any more.
    fn collect_unreachable(&self, s: &mut SymState, kind: K, stmt: Option<usize>) -> Vec<Diagnostic> {
        let idx = unreachable(s);
        if idx.is_empty() {
            return Vec::new();
        }
        let atoms: Vec<Spatial> = idx.iter().map(|i| s.heap.spatial[*i].clone()).collect();
        let text = spatial_text(&SymHeap::with_spatial(atoms.clone()));
        let (site, message) = match kind {
            K::UnreachableMemory => {
                let alloc = atoms.iter().find_map(|a| match a {
                    Spatial::PointsTo(l, _) => s.sites.get(l).copied(),
                    Spatial::Pred(..) => None,
                });
                (alloc.or(stmt), format!("{text} becomes unreachable when its scope ends"))
            }
            _ => (stmt, format!("last reference to {text} is lost")),
        };
        let d = self.diag(s, kind, site, message);
        for i in idx.into_iter().rev() {
            if let Spatial::PointsTo(l, _) = s.heap.spatial.remove(i) {
                s.sites.remove(&l);
            }
        }
        vec![d]
    }

    pub fn exec_stmt(&self, s: SymState, stmt: &Stmt) -> Vec<Step> {
        let mut s = s;
        s.path.push(stmt.id);
        s.node = self.node(s.node, "exec", show::stmt(stmt));
        let id = stmt.id;
        let fork: Fork<()> = match &stmt.kind {
            StmtKind::Ite(c, a, b) => return self.exec_ite(s, id, c, a, b),
            StmtKind::While(c, inv, body) => return self.exec_while(s, id, c, inv, body),
            StmtKind::Assign(Lhs::Place(p), e) => then(self.eval(s, e, id), |s, v| self.write_place(s, p, v, id)),
            StmtKind::Assign(Lhs::Mem(a), e) => then(self.eval(s, e, id), |s, v| {
                then(self.addr(s, a, id), |s, loc| {
                    then(self.lookup(s, &loc, id, K::InvalidAccess, 0), |mut s, i| {
                        set_cell(&mut s, i, v.clone());
                        ok(s, ())
                    })
                })
            }),
            StmtKind::New(p) => {
                let a = self.sym("a");
                let v = self.sym("v");
                s.heap.pure.push(PureAtom::new(CmpOp::Ge, a.clone(), SymExpr::Int(1)));
                for other in &s.heap.spatial {
                    if let Spatial::PointsTo(l, _) = other {
                        s.heap.pure.push(PureAtom::ne(a.clone(), l.clone()));
                    }
                }
                s.heap.spatial.push(Spatial::PointsTo(a.clone(), v));
                s.sites.insert(a.clone(), id);
                self.write_place(s, p, a, id)
            }
            StmtKind::Delete(p) => then(self.read_place(s, p, id), |s, v| {
                then(self.lookup(s, &v, id, K::InvalidFree, 0), |mut s, i| {
                    if let Spatial::PointsTo(l, _) = s.heap.spatial.remove(i) {
                        s.sites.remove(&l);
                    }
                    ok(s, ())
                })
            }),
            StmtKind::Call(name, args) => then(self.call(s, name, args, id), |s, _| ok(s, ())),
            StmtKind::Assert(f) => {
                let f = self.instantiate(&Formula::star(f.clone(), Formula::True), &s);
                match self.entail(&s, &f) {
                    Ok(e) => {
                        self.tree.borrow_mut().graft(s.node, &e.proof);
                        ok(s, ())
                    }
                    Err(ne) => {
                        let kind = if s.heap.imprecise { K::Unknown } else { K::ContractViolation };
                        let d = self.diag(&s, kind, Some(id), format!("assertion not established; unmatched: {}", ne.residue));
                        vec![(s, Err(d))]
                    }
                }
            }
        };
        let mut out = Vec::new();
        for (mut st, r) in fork {
            out.extend(std::mem::take(&mut st.notes).into_iter().map(Step::Report));
            match r {
                Ok(()) => {
                    out.extend(self.collect_unreachable(&mut st, K::MemoryLeak, Some(id)).into_iter().map(Step::Report));
                    out.push(Step::State(st));
                }
                Err(d) => {
                    self.tree.borrow_mut().set_outcome(st.node, Outcome::Failed);
                    out.push(Step::Report(d));
                }
            }
        }
        out
    }

    fn exec_ite(&self, s: SymState, id: usize, c: &Cond, a: &[Stmt], b: &[Stmt]) -> Vec<Step> {
        self.branches.set(self.branches.get() + 1);
        let mut out = Vec::new();
        for (truth, block, rule) in [(true, a, "then"), (false, b, "else")] {
            for (mut st, r) in self.assume(s.clone(), c, truth, id) {
                match r {
                    Err(d) => out.push(Step::Report(d)),
                    Ok(()) => {
                        st.node = self.node(st.node, rule, st.heap.pure.to_string());
                        if self.feasible(&mut st) {
                            out.extend(self.exec_block(st, block, Some(id)));
                        } else {
                            self.tree.borrow_mut().set_outcome(st.node, Outcome::Pruned);
                        }
                    }
                }
            }
        }
        out
    }

    fn exec_while(&self, s: SymState, id: usize, c: &Cond, inv: &Formula, body: &[Stmt]) -> Vec<Step> {
        let mut out = Vec::new();
        let inv_now = self.instantiate(inv, &s);
        self.node(s.node, "establish", format!("{inv_now}"));
        let frame = match self.entail(&s, &inv_now) {
            Ok(e) => {
                self.tree.borrow_mut().graft(s.node, &e.proof);
                e.frame
            }
            Err(ne) => {
                let kind = if s.heap.imprecise { K::Unknown } else { K::InvariantViolation };
                let d = self.diag(&s, kind, Some(id), format!("loop invariant does not hold on entry; unmatched: {}", ne.residue));
                return vec![Step::Report(d)];
            }
        };
        let mut havoc = BTreeSet::new();
        assigned_vars(body, &mut havoc);
        let mut hs = s.clone();
        for v in havoc {
            if hs.store.contains_key(&v) {
                hs.store.insert(v, self.sym("v"));
            }
        }
        let inv_h = self.instantiate(inv, &hs);
        for case in to_symheaps(&inv_h, Polarity::Over, &mut Self::fresh_for(&hs)) {
            let mut inside = hs.clone();
            inside.heap =
                SymHeap { pure: hs.heap.pure.clone(), spatial: case.spatial.clone(), imprecise: case.imprecise, exists: BTreeSet::new() };
            inside.heap.pure.extend(&case.pure);
            add_separation(&mut inside.heap.pure, &case.spatial);
            inside.node = self.node(hs.node, "loop-body", format!("{}", inside.heap));

            for (mut st, r) in self.assume(inside.clone(), c, true, id) {
                let Ok(()) = r.map_err(|d| out.push(Step::Report(d))) else { continue };
                if !self.feasible(&mut st) {
                    continue;
                }
                for step in self.exec_block(st, body, Some(id)) {
                    let end = match step {
                        Step::State(end) => end,
                        r => {
                            out.push(r);
                            continue;
                        }
                    };
                    let inv_end = self.instantiate(inv, &end);
                    match self.entail(&end, &inv_end) {
                        Ok(e) if e.frame.is_emp() || e.absorbs => {
                            self.tree.borrow_mut().graft(end.node, &e.proof);
                        }
                        Ok(e) => {
                            let d = self.diag(
                                &end,
                                K::InvariantViolation,
                                Some(id),
                                format!("loop body leaves {} outside the invariant", spatial_text(&e.frame)),
                            );
                            out.push(Step::Report(d));
                        }
                        Err(ne) => {
                            let kind = if end.heap.imprecise || end.tainted { K::Unknown } else { K::InvariantViolation };
                            let d = self.diag(&end, kind, Some(id), format!("loop invariant not preserved; unmatched: {}", ne.residue));
                            out.push(Step::Report(d));
                        }
                    }
                }
            }

            let mut after = hs.clone();
            after.heap = frame.star(&case);
            after.heap.exists.clear();
            after.heap.pure = hs.heap.pure.clone();
            after.heap.pure.extend(&case.pure);
            let atoms = after.heap.spatial.clone();
            add_separation(&mut after.heap.pure, &atoms);
            after.node = self.node(hs.node, "loop-exit", format!("{}", after.heap));
            for (mut st, r) in self.assume(after, c, false, id) {
                match r {
                    Err(d) => out.push(Step::Report(d)),
                    Ok(()) if self.feasible(&mut st) => out.push(Step::State(st)),
                    Ok(()) => {}
                }
            }
        }
        out
    }

    /// Adds `c` (or its negation) to the path condition, following the
    /// short-circuit evaluation order.
    fn assume(&self, s: SymState, c: &Cond, truth: bool, id: usize) -> Fork<()> {
        match (c, truth) {
            (Cond::Cmp(op, a, b), _) => then(self.eval(s, a, id), |s, x| {
                let op = if truth { *op } else { op.negate() };
                then(self.eval(s, b, id), |mut s, y| {
                    s.heap.pure.push(PureAtom::new(op, x.clone(), y));
                    ok(s, ())
                })
            }),
            (Cond::And(a, b), true) | (Cond::Or(a, b), false) => then(self.assume(s, a, truth, id), |s, _| self.assume(s, b, truth, id)),
            (Cond::And(a, b), false) | (Cond::Or(a, b), true) => {
                let mut out = self.assume(s.clone(), a, truth, id);
                out.extend(then(self.assume(s, a, !truth, id), |s, _| self.assume(s, b, truth, id)));
                out
            }
        }
    }

    fn eval(&self, s: SymState, e: &Expr, id: usize) -> Fork<SymExpr> {
        let binary = |s: SymState, a: &Expr, b: &Expr, mk: fn(SymExpr, SymExpr) -> SymExpr| {
            then(self.eval(s, a, id), |s, x| then(self.eval(s, b, id), |s, y| ok(s, fold(mk(x.clone(), y)))))
        };
        match e {
            Expr::Int(n) => ok(s, SymExpr::Int(*n)),
            Expr::Str(_) => ok(s, SymExpr::Int(0)),
            Expr::Place(p) => self.read_place(s, p, id),
            Expr::Mem(a) => then(self.addr(s, a, id), |s, loc| {
                then(self.lookup(s, &loc, id, K::InvalidAccess, 0), |s, i| {
                    let v = cell_value(&s, i);
                    ok(s, v)
                })
            }),
            Expr::Neg(a) => then(self.eval(s, a, id), |s, v| ok(s, fold(SymExpr::neg(v)))),
            Expr::Add(a, b) => binary(s, a, b, SymExpr::add),
            Expr::Sub(a, b) => binary(s, a, b, SymExpr::sub),
            Expr::Mul(a, b) => binary(s, a, b, SymExpr::mul),
            Expr::Call(name, args) => self.call(s, name, args, id),
        }
    }

    fn addr(&self, s: SymState, a: &Addr, id: usize) -> Fork<SymExpr> {
        let k = a.offset;
        then(self.read_place(s, &a.base, id), move |s, v| {
            let loc = if k == 0 { v } else { fold(SymExpr::add(v, SymExpr::Int(k))) };
            ok(s, loc)
        })
    }

    fn read_place(&self, s: SymState, p: &Place, id: usize) -> Fork<SymExpr> {
        match p {
            Place::Var(v) => {
                let val = s.store.get(v).cloned().unwrap_or(SymExpr::Int(0));
                ok(s, val)
            }
            Place::Field(o, f) => {
                let base = s.store.get(o).cloned().unwrap_or(SymExpr::Int(0));
                then(self.lookup(s, &base, id, K::InvalidAccess, 0), |mut s, i| match self.field_slot(&mut s, i, f) {
                    Ok((_, v)) => ok(s, v),
                    Err(msg) => {
                        let d = self.diag(&s, K::InvalidAccess, Some(id), msg);
                        vec![(s, Err(d))]
                    }
                })
            }
        }
    }

    /// Index and value of field `f` in cell `i`, materialising an object
    /// in a cell that does not hold one yet.
    fn field_slot(&self, s: &mut SymState, i: usize, f: &str) -> Result<(usize, SymExpr), String> {
        let v = cell_value(s, i);
        match v {
            SymExpr::Record(c, fields) => match self.program.field_index(&c, f) {
                Some(k) if k < fields.len() => Ok((k, fields[k].clone())),
                _ => Err(format!("object of class {c} has no field {f}")),
            },
            _ => {
                let (class, k) = self.program.class_of_field(f).ok_or_else(|| format!("no class declares field {f}"))?;
                let n = self.program.field_count(&class).unwrap_or(k + 1);
                let fields: Vec<SymExpr> = (0..n).map(|_| self.sym("v")).collect();
                let val = fields[k].clone();
                set_cell(s, i, SymExpr::Record(class, fields));
                Ok((k, val))
            }
        }
    }

    fn write_place(&self, s: SymState, p: &Place, v: SymExpr, id: usize) -> Fork<()> {
        match p {
            Place::Var(x) => {
                let mut s = s;
                s.store.insert(x.clone(), v);
                ok(s, ())
            }
            Place::Field(o, f) => {
                let base = s.store.get(o).cloned().unwrap_or(SymExpr::Int(0));
                then(self.lookup(s, &base, id, K::InvalidAccess, 0), |mut s, i| match self.field_slot(&mut s, i, f) {
                    Ok((k, _)) => {
                        if let Spatial::PointsTo(_, SymExpr::Record(_, fields)) = &mut s.heap.spatial[i] {
                            fields[k] = v.clone();
                        }
                        ok(s, ())
                    }
                    Err(msg) => {
                        let d = self.diag(&s, K::InvalidAccess, Some(id), msg);
                        vec![(s, Err(d))]
                    }
                })
            }
        }
    }

    /// Finds the points-to cell at `loc`, unfolding predicates rooted there
    /// and splitting on possible aliases. A definitely missing cell is a
    /// `miss` fault; an undecidable one is `Unknown`.
    fn lookup(&self, s: SymState, loc: &SymExpr, id: usize, miss: K, depth: usize) -> Fork<usize> {
        let atoms = &s.heap.spatial;
        let pure = &s.heap.pure;
        let at = |pred: &dyn Fn(&SymExpr) -> bool| atoms.iter().position(|a| matches!(a, Spatial::PointsTo(l, _) if pred(l)));
        if let Some(i) = at(&|l| l == loc).or_else(|| at(&|l| pure.proves_eq(l, loc))) {
            return ok(s, i);
        }
        let is_nil = pure.proves_eq(loc, &SymExpr::Int(0));
        if !is_nil && depth < self.opts.prover.max_unfold {
            let rooted = atoms.iter().position(|a| match a {
                Spatial::Pred(_, args) => args.first().is_some_and(|r| r == loc || pure.proves_eq(r, loc)),
                Spatial::PointsTo(..) => false,
            });
            if let Some(pi) = rooted {
                let n = self.node(s.node, "unfold", format!("{}", atoms[pi]));
                let cases = match unfold(&s.heap, pi, &self.program.preds) {
                    Ok(c) => c,
                    Err(msg) => {
                        let d = self.diag(&s, K::Unknown, Some(id), msg);
                        return vec![(s, Err(d))];
                    }
                };
                self.branches.set(self.branches.get() + 1);
                let mut out = Vec::new();
                for case in cases {
                    let mut cs = s.clone();
                    cs.heap = SymHeap { exists: BTreeSet::new(), ..case };
                    let spatial = cs.heap.spatial.clone();
                    add_separation(&mut cs.heap.pure, &spatial);
                    cs.node = self.node(n, "case", format!("{}", cs.heap));
                    if self.feasible(&mut cs) {
                        out.extend(self.lookup(cs, loc, id, miss, depth + 1));
                    }
                }
                return out;
            }
        }
        if !is_nil {
            let alias = atoms.iter().position(|a| match a {
                Spatial::PointsTo(l, _) => pure.entails(&PureAtom::ne(l.clone(), loc.clone())) != Entailment::Yes,
                Spatial::Pred(..) => false,
            });
            if let Some(i) = alias {
                let Spatial::PointsTo(l, _) = &atoms[i] else { unreachable!() };
                let l = l.clone();
                self.branches.set(self.branches.get() + 1);
                let mut same = s.clone();
                same.heap.pure.push(PureAtom::eq(l.clone(), loc.clone()));
                let mut apart = s;
                apart.heap.pure.push(PureAtom::ne(l, loc.clone()));
                let mut out = Vec::new();
                if self.feasible(&mut same) {
                    same.node = self.node(same.node, "alias", format!("{loc} aliases {}", same.heap.spatial[i]));
                    out.push((same, Ok(i)));
                }
                if self.feasible(&mut apart) {
                    out.extend(self.lookup(apart, loc, id, miss, depth));
                }
                return out;
            }
        }
        let undecided = s.heap.imprecise || (!is_nil && s.heap.spatial.iter().any(|a| matches!(a, Spatial::Pred(..))));
        let (kind, what) = match miss {
            K::InvalidFree => (miss, "free of"),
            _ => (miss, "access to"),
        };
        let d = if undecided {
            self.diag(&s, K::Unknown, Some(id), format!("cannot show that {loc} is allocated"))
        } else {
            self.diag(&s, kind, Some(id), format!("{what} unallocated location {loc}"))
        };
        vec![(s, Err(d))]
    }

    /// Calls use the callee's contract: the precondition is framed out of
    /// the caller's heap and replaced by the postcondition.
    fn call(&self, s: SymState, name: &str, args: &[Expr], id: usize) -> Fork<SymExpr> {
        let mut fork: Fork<Vec<SymExpr>> = ok(s, Vec::new());
        for a in args {
            fork = then(fork, |s, vals| {
                then(self.eval(s, a, id), |s, v| {
                    let mut vals = vals.clone();
                    vals.push(v);
                    ok(s, vals)
                })
            });
        }
        then(fork, |s, vals| {
            let result = self.sym("r");
            let Some(callee) = self.program.function(name, vals.len()) else {
                // Unknown functions are taken to leave the heap alone.
                return ok(s, result);
            };
            self.apply_contract(s, callee, vals, result, id)
        })
    }

    fn apply_contract(&self, s: SymState, callee: &Function, vals: Vec<SymExpr>, result: SymExpr, id: usize) -> Fork<SymExpr> {
        let mut map: Subst = callee.params.iter().cloned().zip(vals).collect();
        let logical: Vec<String> = free_vars(&callee.pre).into_iter().filter(|v| !map.contains_key(v)).collect();
        let mut pre = substitute(&callee.pre, &map);
        for v in &logical {
            pre = Formula::exists(v.clone(), pre);
        }
        let mut s = s;
        s.node = self.node(s.node, "call", format!("{}: {pre}", callee.qualified_name()));
        let e = match self.entail(&s, &pre) {
            Ok(e) => e,
            Err(ne) => {
                let kind = if s.heap.imprecise { K::Unknown } else { K::ContractViolation };
                let d =
                    self.diag(&s, kind, Some(id), format!("precondition of {} not established; unmatched: {}", callee.name, ne.residue));
                return vec![(s, Err(d))];
            }
        };
        self.tree.borrow_mut().graft(s.node, &e.proof);
        for v in &logical {
            let val = e.binding.get(v).cloned().unwrap_or_else(|| self.sym("v"));
            map.insert(v.clone(), val);
        }
        map.insert("result".into(), result.clone());
        let post = substitute(&callee.post, &map);
        let mut out = Vec::new();
        for case in to_symheaps(&post, Polarity::Over, &mut Self::fresh_for(&s)) {
            let mut st = s.clone();
            let mut heap = e.frame.star(&case);
            heap.exists.clear();
            heap.pure = s.heap.pure.clone();
            heap.pure.extend(&case.pure);
            let atoms = heap.spatial.clone();
            add_separation(&mut heap.pure, &atoms);
            st.heap = heap;
            if self.feasible(&mut st) {
                out.push((st, Ok(result.clone())));
            }
        }
        out
    }
}

fn spatial_text(h: &SymHeap) -> String {
    if h.spatial.is_empty() {
        return "emp".into();
    }
    h.spatial.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" * ")
}

/// Store and heap under a model of the pure part.
fn render(s: &SymState, w: &Witness) -> String {
    let mut vars = s.heap.vars();
    for v in s.store.values() {
        crate::formula::free_vars_expr(v, &mut vars);
    }
    let map: Subst = vars
        .into_iter()
        .map(|v| {
            let n = w.get(&v).unwrap_or(0);
            (v, SymExpr::Int(n))
        })
        .collect();
    let store: Vec<String> = s.store.iter().map(|(k, v)| format!("{k}={}", fold(substitute_expr(v, &map)))).collect();
    let heap: Vec<String> = s.heap.spatial.iter().map(|a| a.substitute(&map).to_string()).collect();
    let heap = if heap.is_empty() { "emp".to_string() } else { heap.join(" * ") };
    format!("store: {}; heap: {heap}", store.join(", "))
}
