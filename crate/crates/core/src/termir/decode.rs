use crate::formula::{CmpOp, Formula, PredDef, PredTable, PureAtom, SymExpr};
use crate::ir::{Addr, ClassInfo, Cond, Expr, Function, Lhs, Place, Program, Stmt, StmtKind};

use super::{check_shape, Term, TermError};

fn shape<T>(msg: impl Into<String>) -> Result<T, TermError> {
    Err(TermError::Shape(msg.into()))
}

fn atom(t: &Term, what: &str) -> Result<String, TermError> {
    match t {
        Term::Atom(a) => Ok(a.clone()),
        _ => shape(format!("expected an atom for {what}, found {}", super::emit_text(t))),
    }
}

fn list<'a>(t: &'a Term, what: &str) -> Result<&'a [Term], TermError> {
    match t {
        Term::List(items) => Ok(items),
        _ => shape(format!("expected a list for {what}")),
    }
}

/// Decodes a `program(...)` or bare `function(...)` term.
pub fn decode_program(t: &Term) -> Result<Program, TermError> {
    check_shape(t)?;
    let mut prog = Program { classes: Vec::new(), preds: PredTable::default(), functions: Vec::new() };
    match t.functor() {
        Some(("function", 4)) => prog.functions.push(decode_function(t, None)?),
        Some(("program", 3)) => {
            let a = t.args();
            for c in list(&a[0], "classes")? {
                let ca = c.args();
                let name = atom(&ca[0], "class name")?;
                let mut fields = Vec::new();
                for f in list(&ca[1], "fields")? {
                    fields.push(atom(&f.args()[0], "field name")?);
                }
                prog.classes.push(ClassInfo { name: name.clone(), fields });
                for m in list(&ca[2], "methods")? {
                    prog.functions.push(decode_function(m, Some(&name))?);
                }
            }
            for d in list(&a[1], "predicates")? {
                let da = d.args();
                let name = atom(&da[0], "predicate name")?;
                let params =
                    list(&da[1], "predicate parameters")?.iter().map(|p| atom(p, "predicate parameter")).collect::<Result<Vec<_>, _>>()?;
                let body = decode_formula(&da[2])?;
                if !prog.preds.insert(PredDef { name: name.clone(), params, body, builtin: false }) {
                    return shape(format!("predicate '{name}' redefines a builtin"));
                }
            }
            for f in list(&a[2], "functions")? {
                prog.functions.push(decode_function(f, None)?);
            }
        }
        _ => return shape("expected a program(...) or function(...) term"),
    }
    Ok(prog)
}

fn decode_function(t: &Term, class: Option<&str>) -> Result<Function, TermError> {
    if t.functor() != Some(("function", 4)) {
        return shape("expected function/4");
    }
    let a = t.args();
    let name = atom(&a[0], "function name")?;
    let ret = atom(&a[1], "return type")?;
    let mut params = Vec::new();
    for p in list(&a[2], "parameters")? {
        let n = atom(&p.args()[0], "parameter name")?;
        if params.contains(&n) {
            return shape(format!("duplicate parameter '{n}' in '{name}'"));
        }
        params.push(n);
    }
    let items = list(&a[3], "function body")?;
    let mut start = 0;
    let mut end = items.len();
    let mut pre = Formula::True;
    let mut post = Formula::True;
    if let Some(first) = items.first() {
        if first.functor() == Some(("assert", 1)) {
            pre = decode_formula(&first.args()[0])?;
            start = 1;
        }
    }
    if end > start {
        if let Some(last) = items.last() {
            if last.functor() == Some(("assert", 1)) {
                post = decode_formula(&last.args()[0])?;
                end -= 1;
            }
        }
    }
    let mut id = 0;
    let body = decode_block(&items[start..end], &mut id)?;
    Ok(Function { name, class: class.map(str::to_string), ret, params, pre, post, body })
}

fn decode_block(items: &[Term], id: &mut usize) -> Result<Vec<Stmt>, TermError> {
    items.iter().map(|s| decode_stmt(s, id)).collect()
}

/// Decodes one statement term, numbering it and its children in pre-order from `id`.
pub fn decode_stmt(t: &Term, id: &mut usize) -> Result<Stmt, TermError> {
    let my = *id;
    *id += 1;
    let a = t.args();
    let kind = match t.functor() {
        Some(("assign", 2)) => StmtKind::Assign(decode_lhs(&a[0])?, decode_expr(&a[1])?),
        Some(("ite", 2)) | Some(("ite", 3)) => {
            let c = decode_cond(&a[0])?;
            let then = decode_block(list(&a[1], "then block")?, id)?;
            let els = match a.get(2) {
                Some(b) => decode_block(list(b, "else block")?, id)?,
                None => Vec::new(),
            };
            StmtKind::Ite(c, then, els)
        }
        Some(("while", 3)) => {
            let c = decode_cond(&a[0])?;
            let inv = decode_formula(&a[1])?;
            StmtKind::While(c, inv, decode_block(list(&a[2], "loop body")?, id)?)
        }
        Some(("new", 1)) => StmtKind::New(decode_place(&a[0])?),
        Some(("delete", 1)) => StmtKind::Delete(decode_place(&a[0])?),
        Some(("funcall", 1)) | Some(("funcall", 2)) => {
            let (name, args) = decode_call(t)?;
            StmtKind::Call(name, args)
        }
        Some(("assert", 1)) => StmtKind::Assert(decode_formula(&a[0])?),
        _ => return shape(format!("not a statement: {}", super::emit_text(t))),
    };
    Ok(Stmt { id: my, kind })
}

fn decode_call(t: &Term) -> Result<(String, Vec<Expr>), TermError> {
    let a = t.args();
    let name = atom(&a[0], "callee")?;
    let args = match a.get(1) {
        Some(l) => list(l, "call arguments")?.iter().map(decode_expr).collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    Ok((name, args))
}

fn decode_place(t: &Term) -> Result<Place, TermError> {
    match t {
        Term::Atom(v) => Ok(Place::Var(v.clone())),
        Term::Compound(f, a) if f == "oa" && a.len() == 1 => match &a[0] {
            Term::Compound(d, p) if d == "." && p.len() == 2 => Ok(Place::Field(atom(&p[0], "object")?, atom(&p[1], "field")?)),
            _ => shape("oa expects obj.field"),
        },
        _ => shape(format!("expected a variable or oa(obj.field), found {}", super::emit_text(t))),
    }
}

fn decode_offset(t: &Term) -> Result<i64, TermError> {
    match t {
        Term::Int(n) => Ok(*n),
        Term::Compound(f, a) if f == "minus" && a.len() == 2 && a[0] == Term::Int(0) => match a[1] {
            Term::Int(n) => n.checked_neg().ok_or_else(|| TermError::Shape("offset out of range".into())),
            _ => shape("minus(0, n) expects an integer"),
        },
        _ => shape("offset must be an integer or minus(0, n)"),
    }
}

fn decode_addr(t: &Term) -> Result<Addr, TermError> {
    match t {
        Term::Compound(f, a) if f == "mem" && a.len() == 1 => match &a[0] {
            Term::Compound(o, oa) if o == "offset" && (oa.len() == 1 || oa.len() == 2) => {
                let base = decode_place(&oa[0])?;
                let offset = match oa.get(1) {
                    Some(k) => decode_offset(k)?,
                    None => 0,
                };
                Ok(Addr { base, offset })
            }
            other => Ok(Addr { base: decode_place(other)?, offset: 0 }),
        },
        _ => shape("expected mem(...)"),
    }
}

fn decode_lhs(t: &Term) -> Result<Lhs, TermError> {
    if t.functor().map(|(f, _)| f) == Some("mem") {
        return Ok(Lhs::Mem(decode_addr(t)?));
    }
    Ok(Lhs::Place(decode_place(t)?))
}

fn decode_expr(t: &Term) -> Result<Expr, TermError> {
    let bin =
        |a: &[Term]| -> Result<(Box<Expr>, Box<Expr>), TermError> { Ok((Box::new(decode_expr(&a[0])?), Box::new(decode_expr(&a[1])?))) };
    Ok(match t {
        Term::Int(n) => Expr::Int(*n),
        Term::Atom(v) => Expr::Place(Place::Var(v.clone())),
        Term::List(_) => return shape("unexpected list in expression"),
        Term::Compound(f, a) => match (f.as_str(), a.len()) {
            ("oa", 1) => Expr::Place(decode_place(t)?),
            ("mem", 1) => Expr::Mem(decode_addr(t)?),
            ("str", 1) => Expr::Str(atom(&a[0], "string")?),
            ("neg", 1) => Expr::Neg(Box::new(decode_expr(&a[0])?)),
            ("minus", 2) if a[0] == Term::Int(0) => Expr::Neg(Box::new(decode_expr(&a[1])?)),
            ("add", 2) => {
                let (x, y) = bin(a)?;
                Expr::Add(x, y)
            }
            ("sub", 2) => {
                let (x, y) = bin(a)?;
                Expr::Sub(x, y)
            }
            ("mul", 2) => {
                let (x, y) = bin(a)?;
                Expr::Mul(x, y)
            }
            ("funcall", 1) | ("funcall", 2) => {
                let (name, args) = decode_call(t)?;
                Expr::Call(name, args)
            }
            _ => return shape(format!("not an expression: {}", super::emit_text(t))),
        },
    })
}

fn cmp_of(functor: &str) -> Option<CmpOp> {
    Some(match functor {
        "le" | "lt" => CmpOp::Lt,
        "leq" => CmpOp::Le,
        "ge" | "gt" => CmpOp::Gt,
        "geq" => CmpOp::Ge,
        "eq" => CmpOp::Eq,
        "ne" => CmpOp::Ne,
        _ => return None,
    })
}

fn decode_cond(t: &Term) -> Result<Cond, TermError> {
    match t.functor() {
        Some(("and", 2)) => Ok(Cond::And(Box::new(decode_cond(&t.args()[0])?), Box::new(decode_cond(&t.args()[1])?))),
        Some(("or", 2)) => Ok(Cond::Or(Box::new(decode_cond(&t.args()[0])?), Box::new(decode_cond(&t.args()[1])?))),
        Some((f, 2)) if cmp_of(f).is_some() => {
            let op = cmp_of(f).expect("comparison");
            Ok(Cond::Cmp(op, decode_expr(&t.args()[0])?, decode_expr(&t.args()[1])?))
        }
        _ => shape(format!("not a condition: {}", super::emit_text(t))),
    }
}

pub fn decode_sym(t: &Term) -> Result<SymExpr, TermError> {
    Ok(match t {
        Term::Int(n) => SymExpr::Int(*n),
        Term::Atom(a) if a == "nil" || a == "null" => SymExpr::nil(),
        Term::Atom(a) => SymExpr::Var(a.clone()),
        Term::List(_) => return shape("unexpected list in assertion expression"),
        Term::Compound(f, a) => match (f.as_str(), a.len()) {
            ("add", 2) => SymExpr::add(decode_sym(&a[0])?, decode_sym(&a[1])?),
            ("sub", 2) => SymExpr::sub(decode_sym(&a[0])?, decode_sym(&a[1])?),
            ("mul", 2) => SymExpr::mul(decode_sym(&a[0])?, decode_sym(&a[1])?),
            ("neg", 1) => SymExpr::neg(decode_sym(&a[0])?),
            ("minus", 2) if a[0] == Term::Int(0) => match a[1] {
                Term::Int(n) => SymExpr::Int(n.checked_neg().ok_or_else(|| TermError::Shape("integer out of range".into()))?),
                _ => SymExpr::neg(decode_sym(&a[1])?),
            },
            ("object", _) => {
                let class = atom(&a[0], "class name")?;
                SymExpr::record(class, a[1..].iter().map(decode_sym).collect::<Result<_, _>>()?)
            }
            (".", 2) | ("oa", 1) => return shape("field references are not supported in assertions"),
            _ => return shape(format!("not an assertion expression: {}", super::emit_text(t))),
        },
    })
}

pub fn decode_formula(t: &Term) -> Result<Formula, TermError> {
    match t {
        Term::Atom(a) if a == "emp" => return Ok(Formula::Emp),
        Term::Atom(a) if a == "true" => return Ok(Formula::True),
        Term::Atom(a) if a == "false" => return Ok(Formula::False),
        _ => {}
    }
    let a = t.args();
    Ok(match t.functor() {
        Some(("->", 2)) | Some(("pto", 2)) => match &a[1] {
            Term::List(vals) if vals.is_empty() => return shape("empty points-to chain"),
            Term::List(vals) => Formula::Chain(decode_sym(&a[0])?, vals.iter().map(decode_sym).collect::<Result<_, _>>()?),
            v => Formula::pto(decode_sym(&a[0])?, decode_sym(v)?),
        },
        Some(("*", 2)) | Some(("star", 2)) => Formula::star(decode_formula(&a[0])?, decode_formula(&a[1])?),
        Some(("or", 2)) => Formula::or(decode_formula(&a[0])?, decode_formula(&a[1])?),
        Some(("and", 2)) => Formula::and(decode_formula(&a[0])?, decode_formula(&a[1])?),
        Some(("exists", 2)) => Formula::exists(atom(&a[0], "bound variable")?, decode_formula(&a[1])?),
        Some(("pred", 2)) => Formula::pred(
            atom(&a[0], "predicate name")?,
            list(&a[1], "predicate arguments")?.iter().map(decode_sym).collect::<Result<_, _>>()?,
        ),
        Some((f, 2)) if cmp_of(f).is_some() => {
            Formula::Pure(PureAtom::new(cmp_of(f).expect("comparison"), decode_sym(&a[0])?, decode_sym(&a[1])?))
        }
        // Direct application `name(args)` of a user predicate.
        Some((f, n)) if n > 0 && !RESERVED.contains(&f) && f.chars().next().is_some_and(|c| c.is_ascii_lowercase()) => {
            Formula::pred(f, a.iter().map(decode_sym).collect::<Result<_, _>>()?)
        }
        _ => return shape(format!("not a formula: {}", super::emit_text(t))),
    })
}

/// Functors with a fixed meaning that never name a predicate.
const RESERVED: [&str; 11] = ["object", "str", "add", "sub", "mul", "neg", "minus", "mem", "offset", "oa", "funcall"];
