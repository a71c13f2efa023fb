use super::{Term, TermError};

const STATEMENTS: [&str; 7] = ["assign", "ite", "while", "new", "delete", "funcall", "assert"];

fn arity_ok(functor: &str, n: usize) -> Option<bool> {
    Some(match functor {
        "program" | "class" | "preddef" => n == 3,
        "function" => n == 4,
        "ite" => n == 2 || n == 3,
        "while" => n == 3,
        "funcall" | "offset" => n == 1 || n == 2,
        "new" | "delete" | "assert" | "mem" | "oa" | "neg" | "str" => n == 1,
        "assign" | "param" | "field" | "minus" | "add" | "sub" | "mul" | "le" | "lt" | "leq" | "ge" | "gt" | "geq" | "eq" | "ne"
        | "and" | "or" | "exists" | "pred" | "pto" | "star" | "->" | "*" | "." => n == 2,
        "object" => n >= 1,
        _ => return None,
    })
}

fn shape_err(msg: String) -> TermError {
    TermError::Shape(msg)
}

fn expect_list<'a>(t: &'a Term, ctx: &str) -> Result<&'a [Term], TermError> {
    match t {
        Term::List(items) => Ok(items),
        other => Err(shape_err(format!("{ctx}: expected a list, found {}", super::emit_text(other)))),
    }
}

fn check_block(items: &[Term]) -> Result<(), TermError> {
    for s in items {
        match s.functor() {
            Some((f, n)) if n > 0 && STATEMENTS.contains(&f) => {}
            _ => return Err(shape_err(format!("expected a statement, found {}", super::emit_text(s)))),
        }
    }
    Ok(())
}

/// Checks functor arities everywhere and the block/statement structure of
/// programs, functions and control-flow statements.
pub fn check_shape(t: &Term) -> Result<(), TermError> {
    match t {
        Term::Atom(a) if a.is_empty() => Err(shape_err("empty atom".into())),
        Term::Atom(_) | Term::Int(_) => Ok(()),
        Term::List(items) => items.iter().try_for_each(check_shape),
        Term::Compound(f, args) => {
            if f.is_empty() {
                return Err(shape_err("empty functor".into()));
            }
            if arity_ok(f, args.len()) == Some(false) {
                return Err(shape_err(format!("{f}/{} has the wrong arity", args.len())));
            }
            match f.as_str() {
                // String literal contents may be any text, including none.
                "str" if matches!(args.as_slice(), [Term::Atom(_)]) => return Ok(()),
                "program" => {
                    for a in args {
                        expect_list(a, "program")?;
                    }
                }
                "function" => {
                    for p in expect_list(&args[2], "function parameters")? {
                        if p.functor() != Some(("param", 2)) {
                            return Err(shape_err(format!("expected param/2, found {}", super::emit_text(p))));
                        }
                    }
                    check_block(expect_list(&args[3], "function body")?)?;
                }
                "ite" => {
                    for b in &args[1..] {
                        check_block(expect_list(b, "ite block")?)?;
                    }
                }
                "while" => check_block(expect_list(&args[2], "while block")?)?,
                "funcall" => {
                    if !matches!(args[0], Term::Atom(_)) {
                        return Err(shape_err("funcall: callee must be an atom".into()));
                    }
                    if let Some(a) = args.get(1) {
                        expect_list(a, "funcall arguments")?;
                    }
                }
                "class" => {
                    expect_list(&args[1], "class fields")?;
                    expect_list(&args[2], "class methods")?;
                }
                "preddef" | "pred" => {
                    expect_list(&args[1], f)?;
                }
                "oa" if args[0].functor() != Some((".", 2)) => {
                    return Err(shape_err("oa expects obj.field".into()));
                }
                _ => {}
            }
            args.iter().try_for_each(check_shape)
        }
    }
}
