//! Logic-term intermediate representation.
//!
//! Programs are lowered into functor/argument trees that can be written to
//! `.plt` files, edited or produced by other tools, and read back.

mod decode;
mod lower;
mod query;
mod shape;
mod text;

use serde::{Deserialize, Serialize};

pub use decode::{decode_formula, decode_program, decode_stmt};
pub use lower::{lower_formula, lower_program, Lowered};
pub use query::{parse_queries, Query};
pub use shape::check_shape;
pub use text::{emit_file, emit_text, parse_term, parse_term_unchecked};

use crate::span::Span;

/// Infix functors printed as operators: points-to, separation, field access.
pub const INFIX: [&str; 3] = ["->", "*", "."];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Atom(String),
    Int(i64),
    Compound(String, Vec<Term>),
    List(Vec<Term>),
}

impl Term {
    pub fn atom(name: impl Into<String>) -> Term {
        Term::Atom(name.into())
    }

    pub fn app(functor: impl Into<String>, args: Vec<Term>) -> Term {
        Term::Compound(functor.into(), args)
    }

    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::Compound(f, args) => Some((f, args.len())),
            Term::Atom(a) => Some((a, 0)),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_infix(&self) -> bool {
        matches!(self, Term::Compound(f, args) if args.len() == 2 && INFIX.contains(&f.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("term syntax error at {span}: {message}")]
    Syntax { message: String, span: Span },
    #[error("ill-shaped term: {0}")]
    Shape(String),
}
