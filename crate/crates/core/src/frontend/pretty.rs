//! Source printer whose output parses back to the same AST (modulo spans).

use std::fmt::Write;

use super::ast::*;

pub fn pretty_print(p: &SourceProgram) -> String {
    let mut out = String::new();
    for d in &p.predicates {
        let _ = writeln!(out, "{}", d.def);
    }
    for c in &p.classes {
        let _ = writeln!(out, "class {} {{", c.name);
        for f in &c.fields {
            let _ = writeln!(out, "    {} {};", f.ty, f.name);
        }
        for m in &c.methods {
            method(&mut out, m, 1);
        }
        out.push_str("}\n");
    }
    for f in &p.functions {
        method(&mut out, f, 0);
    }
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn method(out: &mut String, m: &MethodDecl, level: usize) {
    indent(out, level);
    let params: Vec<String> = m.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
    let _ = writeln!(out, "{} {}({}) @ {} @ {{", m.ret, m.name, params.join(", "), m.pre);
    block(out, &m.body, level + 1);
    indent(out, level);
    let _ = writeln!(out, "}} @ {} @", m.post);
}

fn block(out: &mut String, b: &Block, level: usize) {
    for s in b {
        stmt(out, s, level);
    }
}

fn stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match &s.kind {
        StmtKind::Assign(targets, e) => {
            for t in targets {
                let _ = write!(out, "{} = ", lhs(t));
            }
            let _ = writeln!(out, "{};", expr(e));
        }
        StmtKind::If(c, then, els) => {
            let _ = writeln!(out, "if ({}) {{", cond(c));
            block(out, then, level + 1);
            indent(out, level);
            match els {
                Some(e) => {
                    out.push_str("} else {\n");
                    block(out, e, level + 1);
                    indent(out, level);
                    out.push_str("}\n");
                }
                None => out.push_str("}\n"),
            }
        }
        StmtKind::While(c, inv, body) => {
            let _ = writeln!(out, "while ({}) @ {} @ {{", cond(c), inv);
            block(out, body, level + 1);
            indent(out, level);
            out.push_str("}\n");
        }
        StmtKind::New(b) => {
            let _ = writeln!(out, "new({});", base(b));
        }
        StmtKind::Delete(b) => {
            let _ = writeln!(out, "delete({});", base(b));
        }
        StmtKind::Call(c) => {
            let _ = writeln!(out, "{};", call(c));
        }
        StmtKind::Assert(f) => {
            let _ = writeln!(out, "@ {f} @;");
        }
    }
}

pub fn base(b: &Base) -> String {
    match b {
        Base::Var(v) => v.clone(),
        Base::Field(o, f) => format!("{o}.{f}"),
    }
}

pub fn location(l: &Location) -> String {
    match l.offset {
        None => base(&l.base),
        Some(k) if k < 0 => format!("{} - {}", base(&l.base), k.unsigned_abs()),
        Some(k) => format!("{} + {}", base(&l.base), k),
    }
}

fn lhs(l: &Lhs) -> String {
    match l {
        Lhs::Loc(b) => base(b),
        Lhs::Mem(loc) => format!("[{}]", location(loc)),
    }
}

fn call(c: &Call) -> String {
    let args: Vec<String> = c.args.iter().map(expr).collect();
    match &c.receiver {
        Some(r) => format!("{r}.{}({})", c.name, args.join(", ")),
        None => format!("{}({})", c.name, args.join(", ")),
    }
}

fn escape(s: &str) -> String {
    let mut out = String::from("\"");
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(n) => n.to_string(),
        Expr::Str(s) => escape(s),
        Expr::Loc(b) => base(b),
        Expr::Mem(l) => format!("[{}]", location(l)),
        Expr::Neg(inner) => format!("-{}", atomic(inner)),
        Expr::Binary(op, a, b) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
            };
            format!("({} {sym} {})", expr(a), expr(b))
        }
        Expr::Call(c) => call(c),
    }
}

fn atomic(e: &Expr) -> String {
    match e {
        Expr::Neg(_) => format!("({})", expr(e)),
        _ => expr(e),
    }
}

fn cond(c: &Cond) -> String {
    match c {
        Cond::Cmp(op, a, b) => format!("{} {} {}", expr(a), op.symbol(), expr(b)),
        Cond::And(a, b) => format!("({}) && ({})", cond(a), cond(b)),
        Cond::Or(a, b) => format!("({}) || ({})", cond(a), cond(b)),
    }
}
