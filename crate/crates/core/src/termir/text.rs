use std::fmt::Write;

use super::{check_shape, Term, TermError, INFIX};
use crate::span::Span;

fn is_bare_atom(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some('a'..='z')) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn write_atom(out: &mut String, s: &str) {
    if is_bare_atom(s) {
        out.push_str(s);
    } else {
        out.push('\'');
        for c in s.chars() {
            if c == '\'' || c == '\\' {
                out.push('\\');
            }
            out.push(c);
        }
        out.push('\'');
    }
}

fn write_operand(out: &mut String, t: &Term, parens: bool) {
    if parens {
        out.push('(');
        write_term(out, t);
        out.push(')');
    } else {
        write_term(out, t);
    }
}

fn infix_name(t: &Term) -> Option<&str> {
    match t {
        Term::Compound(f, args) if args.len() == 2 && INFIX.contains(&f.as_str()) => Some(f),
        _ => None,
    }
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Term::Atom(a) => write_atom(out, a),
        Term::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(out, item);
            }
            out.push(']');
        }
        Term::Compound(f, args) if t.is_infix() => {
            let (l, r) = (&args[0], &args[1]);
            match f.as_str() {
                "." => {
                    write_operand(out, l, infix_name(l).is_some());
                    out.push('.');
                    write_operand(out, r, infix_name(r).is_some());
                }
                "->" => {
                    write_operand(out, l, matches!(infix_name(l), Some("->" | "*")));
                    out.push_str("->");
                    write_operand(out, r, matches!(infix_name(r), Some("->" | "*")));
                }
                _ => {
                    write_operand(out, l, infix_name(l) == Some("*"));
                    out.push_str(" * ");
                    write_operand(out, r, false);
                }
            }
        }
        Term::Compound(f, args) => {
            write_atom(out, f);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(out, a);
            }
            out.push(')');
        }
    }
}

/// Canonical text: `f(a, b)`, `[a, b]`, decimal integers, bare or quoted
/// atoms, and the infix forms `l->v`, `a * b`, `o.f`.
pub fn emit_text(t: &Term) -> String {
    let mut out = String::new();
    write_term(&mut out, t);
    out
}

/// File form: the term followed by `.` and a newline.
pub fn emit_file(t: &Term) -> String {
    let mut s = emit_text(t);
    s.push_str(".\n");
    s
}

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Tok {
    Int(i64),
    Atom(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Arrow,
    Star,
    Dot,
    End,
    Turnstile,
}

pub(super) fn lex(text: &str) -> Result<Vec<(Tok, Span)>, TermError> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    let err = |message: String, start: usize, end: usize| TermError::Syntax { message, span: Span::new(start, end) };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'%' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBrack,
            b']' => Tok::RBrack,
            b',' => Tok::Comma,
            b'*' => Tok::Star,
            b'|' if bytes.get(i + 1) == Some(&b'-') => {
                i += 1;
                Tok::Turnstile
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            b'.' => {
                if bytes.get(i + 1).is_none_or(|b| b.is_ascii_whitespace() || *b == b'%') {
                    Tok::End
                } else {
                    Tok::Dot
                }
            }
            b'-' | b'0'..=b'9' => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if c == b'-' && j == i + 1 {
                    return Err(err("expected digits after '-'".into(), start, j));
                }
                let n: i64 = text[i..j].parse().map_err(|_| err("integer out of range".into(), start, j))?;
                out.push((Tok::Int(n), Span::new(start, j)));
                i = j;
                continue;
            }
            b'\'' => {
                let mut s = String::new();
                let mut j = i + 1;
                let mut chars = text[j..].char_indices();
                let mut closed = false;
                while let Some((off, ch)) = chars.next() {
                    match ch {
                        '\\' => match chars.next() {
                            Some((_, esc)) => s.push(esc),
                            None => break,
                        },
                        '\'' => {
                            j += off + 1;
                            closed = true;
                            break;
                        }
                        other => s.push(other),
                    }
                }
                if !closed {
                    return Err(err("unterminated quoted atom".into(), start, text.len()));
                }
                out.push((Tok::Atom(s), Span::new(start, j)));
                i = j;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                out.push((Tok::Atom(text[i..j].to_string()), Span::new(start, j)));
                i = j;
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(err(format!("unexpected character '{ch}'"), start, start + ch.len_utf8()));
            }
        };
        i += 1;
        out.push((tok, Span::new(start, i)));
    }
    Ok(out)
}

pub(super) struct TermParser<'a> {
    toks: &'a [(Tok, Span)],
    pub(super) pos: usize,
    len: usize,
}

impl<'a> TermParser<'a> {
    pub(super) fn new(toks: &'a [(Tok, Span)], len: usize) -> Self {
        TermParser { toks, pos: 0, len }
    }

    pub(super) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|(_, s)| *s).unwrap_or(Span::new(self.len, self.len))
    }

    pub(super) fn error(&self, message: impl Into<String>) -> TermError {
        TermError::Syntax { message: message.into(), span: self.span() }
    }

    pub(super) fn expect(&mut self, tok: Tok, what: &str) -> Result<(), TermError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    pub(super) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub(super) fn term(&mut self) -> Result<Term, TermError> {
        let left = self.arrow()?;
        if self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            let right = self.term()?;
            return Ok(Term::app("*", vec![left, right]));
        }
        Ok(left)
    }

    fn arrow(&mut self) -> Result<Term, TermError> {
        let left = self.dot()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let right = self.dot()?;
            return Ok(Term::app("->", vec![left, right]));
        }
        Ok(left)
    }

    fn dot(&mut self) -> Result<Term, TermError> {
        let left = self.primary()?;
        if self.peek() == Some(&Tok::Dot) {
            self.pos += 1;
            let right = self.primary()?;
            return Ok(Term::app(".", vec![left, right]));
        }
        Ok(left)
    }

    fn items(&mut self, close: Tok, what: &str) -> Result<Vec<Term>, TermError> {
        let mut items = Vec::new();
        if self.peek() == Some(&close) {
            self.pos += 1;
            return Ok(items);
        }
        loop {
            items.push(self.term()?);
            match self.peek() {
                Some(Tok::Comma) => self.pos += 1,
                Some(t) if *t == close => {
                    self.pos += 1;
                    return Ok(items);
                }
                _ => return Err(self.error(format!("expected ',' or {what}"))),
            }
        }
    }

    fn primary(&mut self) -> Result<Term, TermError> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Term::Int(n))
            }
            Some(Tok::Atom(a)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let args = self.items(Tok::RParen, "')'")?;
                    if args.is_empty() {
                        return Err(self.error("compound term needs at least one argument"));
                    }
                    Ok(Term::Compound(a, args))
                } else {
                    Ok(Term::Atom(a))
                }
            }
            Some(Tok::LBrack) => {
                self.pos += 1;
                Ok(Term::List(self.items(Tok::RBrack, "']'")?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(t)
            }
            _ => Err(self.error("expected a term")),
        }
    }
}

/// Parses one term (optionally terminated by `.`) without shape checks.
pub fn parse_term_unchecked(text: &str) -> Result<Term, TermError> {
    let toks = lex(text)?;
    let mut p = TermParser::new(&toks, text.len());
    let t = p.term()?;
    if p.peek() == Some(&Tok::End) {
        p.pos += 1;
    }
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(t)
}

/// Parses and shape-checks one term.
pub fn parse_term(text: &str) -> Result<Term, TermError> {
    let t = parse_term_unchecked(text)?;
    check_shape(&t)?;
    Ok(t)
}
