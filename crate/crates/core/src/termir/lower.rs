use std::collections::BTreeMap;

use crate::formula::{CmpOp, Formula, SymExpr};
use crate::frontend::{Base, BinOp, Block, Call, Cond, Expr, Lhs, Location, MethodDecl, SourceProgram, StmtKind};
use crate::span::Span;

use super::Term;

/// A lowered program plus the source span of every emitted body statement,
/// keyed by qualified function name, in pre-order.
#[derive(Debug, Clone, PartialEq)]
pub struct Lowered {
    pub term: Term,
    pub stmt_spans: BTreeMap<String, Vec<Span>>,
    pub fn_spans: BTreeMap<String, Span>,
}

pub fn lower_program(p: &SourceProgram) -> Lowered {
    let mut stmt_spans = BTreeMap::new();
    let mut fn_spans = BTreeMap::new();
    let mut lower_fn = |m: &MethodDecl, class: Option<&str>| {
        let key = match class {
            Some(c) => format!("{c}::{}", m.name),
            None => m.name.clone(),
        };
        let mut spans = Vec::new();
        let t = lower_method(m, class, &mut spans);
        stmt_spans.insert(key.clone(), spans);
        fn_spans.insert(key, m.span);
        t
    };
    let classes: Vec<Term> = p
        .classes
        .iter()
        .map(|c| {
            let fields = c.fields.iter().map(|f| Term::app("field", vec![Term::atom(&f.name), Term::atom(&f.ty)])).collect();
            let methods = c.methods.iter().map(|m| lower_fn(m, Some(&c.name))).collect();
            Term::app("class", vec![Term::atom(&c.name), Term::List(fields), Term::List(methods)])
        })
        .collect();
    let functions: Vec<Term> = p.functions.iter().map(|f| lower_fn(f, None)).collect();
    let term = if classes.is_empty() && p.predicates.is_empty() && functions.len() == 1 {
        functions.into_iter().next().expect("one function")
    } else {
        let preds = p
            .predicates
            .iter()
            .map(|d| {
                Term::app(
                    "preddef",
                    vec![Term::atom(&d.def.name), Term::List(d.def.params.iter().map(Term::atom).collect()), lower_formula(&d.def.body)],
                )
            })
            .collect();
        Term::app("program", vec![Term::List(classes), Term::List(preds), Term::List(functions)])
    };
    Lowered { term, stmt_spans, fn_spans }
}

fn lower_method(m: &MethodDecl, class: Option<&str>, spans: &mut Vec<Span>) -> Term {
    let mut params = Vec::new();
    if let Some(c) = class {
        params.push(Term::app("param", vec![Term::atom("this"), Term::atom(c)]));
    }
    params.extend(m.params.iter().map(|p| Term::app("param", vec![Term::atom(&p.name), Term::atom(&p.ty)])));
    let mut body = vec![Term::app("assert", vec![lower_formula(&m.pre)])];
    body.extend(block(&m.body, spans));
    body.push(Term::app("assert", vec![lower_formula(&m.post)]));
    Term::app("function", vec![Term::atom(&m.name), Term::atom(&m.ret), Term::List(params), Term::List(body)])
}

fn block(b: &Block, spans: &mut Vec<Span>) -> Vec<Term> {
    let mut out = Vec::new();
    for s in b {
        match &s.kind {
            StmtKind::Assign(targets, e) => {
                // a = b = e  lowers to  b = e; a = b
                let mut rhs = expr(e);
                for t in targets.iter().rev() {
                    spans.push(s.span);
                    out.push(Term::app("assign", vec![lhs(t), rhs]));
                    rhs = lhs_as_expr(t);
                }
            }
            StmtKind::If(c, then, els) => {
                spans.push(s.span);
                // Reserve this statement's slot before the children (pre-order).
                let mut args = vec![cond(c), Term::List(block(then, spans))];
                if let Some(e) = els {
                    args.push(Term::List(block(e, spans)));
                }
                out.push(Term::app("ite", args));
            }
            StmtKind::While(c, inv, body) => {
                spans.push(s.span);
                let body = block(body, spans);
                out.push(Term::app("while", vec![cond(c), lower_formula(inv), Term::List(body)]));
            }
            StmtKind::New(b) => {
                spans.push(s.span);
                out.push(Term::app("new", vec![base(b)]));
            }
            StmtKind::Delete(b) => {
                spans.push(s.span);
                out.push(Term::app("delete", vec![base(b)]));
            }
            StmtKind::Call(c) => {
                spans.push(s.span);
                out.push(call(c));
            }
            StmtKind::Assert(f) => {
                spans.push(s.span);
                out.push(Term::app("assert", vec![lower_formula(f)]));
            }
        }
    }
    out
}

fn base(b: &Base) -> Term {
    match b {
        Base::Var(v) => Term::atom(v),
        Base::Field(o, f) => Term::app("oa", vec![Term::app(".", vec![Term::atom(o), Term::atom(f)])]),
    }
}

fn offset_term(n: i64) -> Term {
    if n < 0 {
        Term::app("minus", vec![Term::Int(0), Term::Int(n.checked_neg().unwrap_or(i64::MAX))])
    } else {
        Term::Int(n)
    }
}

fn location(l: &Location) -> Term {
    let mut args = vec![base(&l.base)];
    if let Some(k) = l.offset {
        args.push(offset_term(k));
    }
    Term::app("mem", vec![Term::app("offset", args)])
}

fn lhs(l: &Lhs) -> Term {
    match l {
        Lhs::Loc(b) => base(b),
        Lhs::Mem(loc) => location(loc),
    }
}

fn lhs_as_expr(l: &Lhs) -> Term {
    lhs(l)
}

fn call(c: &Call) -> Term {
    let mut args: Vec<Term> = Vec::new();
    if let Some(r) = &c.receiver {
        args.push(Term::atom(r));
    }
    args.extend(c.args.iter().map(expr));
    if args.is_empty() {
        Term::app("funcall", vec![Term::atom(&c.name)])
    } else {
        Term::app("funcall", vec![Term::atom(&c.name), Term::List(args)])
    }
}

fn expr(e: &Expr) -> Term {
    match e {
        Expr::Int(n) => Term::Int(*n),
        Expr::Str(s) => Term::app("str", vec![Term::Atom(s.clone())]),
        Expr::Loc(b) => base(b),
        Expr::Mem(l) => location(l),
        Expr::Neg(a) => Term::app("neg", vec![expr(a)]),
        Expr::Binary(op, a, b) => {
            let f = match op {
                BinOp::Add => "add",
                BinOp::Sub => "sub",
                BinOp::Mul => "mul",
            };
            Term::app(f, vec![expr(a), expr(b)])
        }
        Expr::Call(c) => call(c),
    }
}

/// Comparison functor names. `<` is written `le`, as in the published encoding.
pub(super) fn cmp_functor(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Lt => "le",
        CmpOp::Le => "leq",
        CmpOp::Gt => "ge",
        CmpOp::Ge => "geq",
        CmpOp::Eq => "eq",
        CmpOp::Ne => "ne",
    }
}

fn cond(c: &Cond) -> Term {
    match c {
        Cond::Cmp(op, a, b) => Term::app(cmp_functor(*op), vec![expr(a), expr(b)]),
        Cond::And(a, b) => Term::app("and", vec![cond(a), cond(b)]),
        Cond::Or(a, b) => Term::app("or", vec![cond(a), cond(b)]),
    }
}

pub fn lower_sym(e: &SymExpr) -> Term {
    match e {
        SymExpr::Int(n) => Term::Int(*n),
        SymExpr::Var(v) => Term::Atom(v.clone()),
        SymExpr::Add(a, b) => Term::app("add", vec![lower_sym(a), lower_sym(b)]),
        SymExpr::Sub(a, b) => Term::app("sub", vec![lower_sym(a), lower_sym(b)]),
        SymExpr::Mul(a, b) => Term::app("mul", vec![lower_sym(a), lower_sym(b)]),
        SymExpr::Neg(a) => Term::app("neg", vec![lower_sym(a)]),
        SymExpr::Record(c, fs) => {
            let mut args = vec![Term::atom(c)];
            args.extend(fs.iter().map(lower_sym));
            Term::app("object", args)
        }
    }
}

pub fn lower_formula(f: &Formula) -> Term {
    match f {
        Formula::Emp => Term::atom("emp"),
        Formula::True => Term::atom("true"),
        Formula::False => Term::atom("false"),
        Formula::PointsTo(l, v) => Term::app("->", vec![lower_sym(l), lower_sym(v)]),
        Formula::Chain(l, vs) => Term::app("->", vec![lower_sym(l), Term::List(vs.iter().map(lower_sym).collect())]),
        Formula::Star(a, b) => Term::app("*", vec![lower_formula(a), lower_formula(b)]),
        Formula::Or(a, b) => Term::app("or", vec![lower_formula(a), lower_formula(b)]),
        Formula::And(a, b) => Term::app("and", vec![lower_formula(a), lower_formula(b)]),
        Formula::Exists(v, b) => Term::app("exists", vec![Term::atom(v), lower_formula(b)]),
        Formula::Pred(n, args) => Term::app("pred", vec![Term::atom(n), Term::List(args.iter().map(lower_sym).collect())]),
        Formula::Pure(a) => Term::app(cmp_functor(a.op), vec![lower_sym(&a.lhs), lower_sym(&a.rhs)]),
    }
}
