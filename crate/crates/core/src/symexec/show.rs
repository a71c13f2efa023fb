//! Compact source-like rendering of statements for proof-tree labels.

use crate::ir::{Addr, Cond, Expr, Lhs, Place, Stmt, StmtKind};

pub(super) fn place(p: &Place) -> String {
    match p {
        Place::Var(v) => v.clone(),
        Place::Field(o, f) => format!("{o}.{f}"),
    }
}

fn addr(a: &Addr) -> String {
    match a.offset {
        0 => format!("[{}]", place(&a.base)),
        k if k > 0 => format!("[{} + {k}]", place(&a.base)),
        k => format!("[{} - {}]", place(&a.base), -(k as i128)),
    }
}

pub(super) fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(n) => n.to_string(),
        Expr::Str(s) => format!("{s:?}"),
        Expr::Place(p) => place(p),
        Expr::Mem(a) => addr(a),
        Expr::Neg(a) => format!("-{}", expr(a)),
        Expr::Add(a, b) => format!("({} + {})", expr(a), expr(b)),
        Expr::Sub(a, b) => format!("({} - {})", expr(a), expr(b)),
        Expr::Mul(a, b) => format!("({} * {})", expr(a), expr(b)),
        Expr::Call(n, args) => format!("{n}({})", args.iter().map(expr).collect::<Vec<_>>().join(", ")),
    }
}

pub(super) fn cond(c: &Cond) -> String {
    match c {
        Cond::Cmp(op, a, b) => format!("{} {} {}", expr(a), op.symbol(), expr(b)),
        Cond::And(a, b) => format!("({}) && ({})", cond(a), cond(b)),
        Cond::Or(a, b) => format!("({}) || ({})", cond(a), cond(b)),
    }
}

/// One line per statement; nested blocks are elided.
pub(super) fn stmt(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Assign(Lhs::Place(p), e) => format!("{} = {}", place(p), expr(e)),
        StmtKind::Assign(Lhs::Mem(a), e) => format!("{} = {}", addr(a), expr(e)),
        StmtKind::Ite(c, ..) => format!("if ({})", cond(c)),
        StmtKind::While(c, inv, _) => format!("while ({}) @ {inv} @", cond(c)),
        StmtKind::New(p) => format!("new({})", place(p)),
        StmtKind::Delete(p) => format!("delete({})", place(p)),
        StmtKind::Call(n, args) => expr(&Expr::Call(n.clone(), args.clone())),
        StmtKind::Assert(f) => format!("@ {f} @"),
    }
}
