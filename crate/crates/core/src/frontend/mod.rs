//! Lexer and parser for the annotated object-oriented C dialect.

pub mod assertion;
pub mod ast;
mod lexer;
mod parser;
mod pretty;

use thiserror::Error;

use crate::span::Span;

pub use assertion::{parse_assertion, parse_assertion_with, Arities};
pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse_program;
pub use pretty::pretty_print;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("lexical error at {span}: {message}")]
    Lex { message: String, span: Span },
    #[error("parse error at {span}: expected {}, found {found}", expected.join(" or "))]
    Parse { expected: Vec<String>, found: String, span: Span },
    #[error("duplicate {what} '{name}' at {span}")]
    Duplicate { what: String, name: String, span: Span },
    #[error("assertion error at {span}: {message}")]
    Assertion { message: String, span: Span },
    #[error("predicate '{name}' expects {expected} argument(s), found {found} at {span}")]
    Arity { name: String, expected: usize, found: usize, span: Span },
}

impl FrontendError {
    pub fn span(&self) -> Span {
        match self {
            FrontendError::Lex { span, .. }
            | FrontendError::Parse { span, .. }
            | FrontendError::Duplicate { span, .. }
            | FrontendError::Assertion { span, .. }
            | FrontendError::Arity { span, .. } => *span,
        }
    }
}

/// Tokenizes and parses a whole source file.
pub fn parse_source(text: &str) -> Result<SourceProgram, FrontendError> {
    let toks = tokenize(text)?;
    parse_program(&toks, text)
}
