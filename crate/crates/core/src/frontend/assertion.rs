//! Parser for the assertion language used inside `@ ... @` annotations and
//! predicate bodies.

use std::collections::BTreeMap;

use crate::formula::{CmpOp, Formula, PredTable, SymExpr};
use crate::span::Span;

use super::FrontendError;

/// Predicate name to arity, used to check applications.
pub type Arities = BTreeMap<String, usize>;

pub fn default_arities() -> Arities {
    arities_of(&PredTable::default())
}

pub fn arities_of(table: &PredTable) -> Arities {
    table.iter().map(|d| (d.name.clone(), d.params.len())).collect()
}

/// Parses an assertion with only the builtin predicates in scope.
pub fn parse_assertion(text: &str) -> Result<Formula, FrontendError> {
    parse_assertion_with(text, 0, &default_arities())
}

/// Parses `text`, reporting spans shifted by `offset` into the enclosing file.
pub fn parse_assertion_with(text: &str, offset: usize, preds: &Arities) -> Result<Formula, FrontendError> {
    let toks = lex(text, offset)?;
    let mut p = Parser { toks, pos: 0, end: offset + text.len(), preds };
    if p.toks.is_empty() {
        return Err(FrontendError::Assertion { message: "empty assertion".into(), span: Span::new(offset, p.end) });
    }
    let f = p.formula()?;
    if p.pos < p.toks.len() {
        return Err(p.error("unexpected token after assertion"));
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Arrow,
    Star,
    AndAnd,
    OrOr,
    LParen,
    RParen,
    Comma,
    Dot,
    Cmp(CmpOp),
    Plus,
    Minus,
}

fn lex(text: &str, offset: usize) -> Result<Vec<(Tok, Span)>, FrontendError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let next = b.get(i + 1).copied();
        let (tok, len) = if c.is_ascii_digit() {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let n = text[start..i].parse::<i64>().map_err(|_| FrontendError::Assertion {
                message: "integer literal out of range".into(),
                span: Span::new(start, i).shift(offset),
            })?;
            out.push((Tok::Int(n), Span::new(start, i).shift(offset)));
            continue;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            while i < b.len() && b[i] == b'\'' {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), Span::new(start, i).shift(offset)));
            continue;
        } else {
            match (c, next) {
                (b'-', Some(b'>')) => (Tok::Arrow, 2),
                (b'&', Some(b'&')) => (Tok::AndAnd, 2),
                (b'|', Some(b'|')) => (Tok::OrOr, 2),
                (b'=', Some(b'=')) => (Tok::Cmp(CmpOp::Eq), 2),
                (b'!', Some(b'=')) => (Tok::Cmp(CmpOp::Ne), 2),
                (b'<', Some(b'=')) => (Tok::Cmp(CmpOp::Le), 2),
                (b'>', Some(b'=')) => (Tok::Cmp(CmpOp::Ge), 2),
                (b'=', _) => (Tok::Cmp(CmpOp::Eq), 1),
                (b'<', _) => (Tok::Cmp(CmpOp::Lt), 1),
                (b'>', _) => (Tok::Cmp(CmpOp::Gt), 1),
                (b'*', _) => (Tok::Star, 1),
                (b'(', _) => (Tok::LParen, 1),
                (b')', _) => (Tok::RParen, 1),
                (b',', _) => (Tok::Comma, 1),
                (b'.', _) => (Tok::Dot, 1),
                (b'+', _) => (Tok::Plus, 1),
                (b'-', _) => (Tok::Minus, 1),
                _ => {
                    let ch = text[i..].chars().next().unwrap_or('?');
                    return Err(FrontendError::Assertion {
                        message: format!("illegal character {ch:?} in assertion"),
                        span: Span::new(i, i + ch.len_utf8()).shift(offset),
                    });
                }
            }
        };
        out.push((tok, Span::new(start, start + len).shift(offset)));
        i += len;
    }
    Ok(out)
}

const KEYWORDS: [&str; 7] = ["emp", "true", "false", "exists", "nil", "null", "object"];

struct Parser<'a> {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    end: usize,
    preds: &'a Arities,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|(_, s)| *s).unwrap_or(Span::new(self.end, self.end))
    }

    fn error(&self, message: &str) -> FrontendError {
        FrontendError::Assertion { message: message.into(), span: self.span() }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), FrontendError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("expected an identifier")),
        }
    }

    fn formula(&mut self) -> Result<Formula, FrontendError> {
        let left = self.conj()?;
        if self.eat(&Tok::OrOr) {
            return Ok(Formula::or(left, self.formula()?));
        }
        Ok(left)
    }

    fn conj(&mut self) -> Result<Formula, FrontendError> {
        let left = self.star()?;
        if self.eat(&Tok::AndAnd) {
            return Ok(Formula::and(left, self.conj()?));
        }
        Ok(left)
    }

    fn star(&mut self) -> Result<Formula, FrontendError> {
        let left = self.unit()?;
        if self.eat(&Tok::Star) {
            return Ok(Formula::star(left, self.star()?));
        }
        Ok(left)
    }

    fn unit(&mut self) -> Result<Formula, FrontendError> {
        match self.peek() {
            Some(Tok::Ident(k)) if k == "exists" => {
                self.pos += 1;
                let mut vars = vec![self.ident()?];
                while self.eat(&Tok::Comma) {
                    vars.push(self.ident()?);
                }
                self.expect(Tok::Dot, "'.' after quantified variables")?;
                let mut body = self.formula()?;
                for v in vars.into_iter().rev() {
                    body = Formula::exists(v, body);
                }
                Ok(body)
            }
            Some(Tok::Ident(k)) if k == "emp" => {
                self.pos += 1;
                Ok(Formula::Emp)
            }
            Some(Tok::Ident(k)) if k == "true" => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Some(Tok::Ident(k)) if k == "false" => {
                self.pos += 1;
                Ok(Formula::False)
            }
            Some(Tok::Ident(k)) if !KEYWORDS.contains(&k.as_str()) && self.peek_at(1) == Some(&Tok::LParen) => self.pred_app(),
            Some(Tok::LParen) => {
                let save = self.pos;
                self.pos += 1;
                if let Ok(f) = self.formula() {
                    if self.eat(&Tok::RParen) && !self.continues_expression() {
                        return Ok(f);
                    }
                }
                self.pos = save;
                self.atom()
            }
            _ => self.atom(),
        }
    }

    fn continues_expression(&self) -> bool {
        matches!(self.peek(), Some(Tok::Arrow | Tok::Cmp(_) | Tok::Plus | Tok::Minus))
    }

    fn pred_app(&mut self) -> Result<Formula, FrontendError> {
        let span = self.span();
        let name = self.ident()?;
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                args.push(self.value()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "',' or ')'")?;
            }
        }
        match self.preds.get(&name) {
            None => Err(FrontendError::Assertion { message: format!("unknown predicate '{name}'"), span }),
            Some(&n) if n != args.len() => Err(FrontendError::Arity { name, expected: n, found: args.len(), span }),
            Some(_) => Ok(Formula::pred(name, args)),
        }
    }

    /// `E -> v[, v...]` or `E cmp E`.
    fn atom(&mut self) -> Result<Formula, FrontendError> {
        let lhs = self.value()?;
        match self.peek().cloned() {
            Some(Tok::Arrow) => {
                self.pos += 1;
                let mut vals = vec![self.value()?];
                while self.eat(&Tok::Comma) {
                    vals.push(self.value()?);
                }
                if vals.len() == 1 {
                    Ok(Formula::pto(lhs, vals.pop().expect("one value")))
                } else {
                    Ok(Formula::Chain(lhs, vals))
                }
            }
            Some(Tok::Cmp(op)) => {
                self.pos += 1;
                let rhs = self.value()?;
                Ok(Formula::pure(op, lhs, rhs))
            }
            _ => Err(self.error("expected '->' or a comparison")),
        }
    }

    /// Additive expression; `*` only inside parentheses.
    fn value(&mut self) -> Result<SymExpr, FrontendError> {
        let mut e = self.unary()?;
        loop {
            if self.eat(&Tok::Plus) {
                e = SymExpr::add(e, self.unary()?);
            } else if self.eat(&Tok::Minus) {
                e = SymExpr::sub(e, self.unary()?);
            } else {
                return Ok(e);
            }
        }
    }

    fn product(&mut self) -> Result<SymExpr, FrontendError> {
        let mut e = self.unary()?;
        while self.eat(&Tok::Star) {
            e = SymExpr::mul(e, self.unary()?);
        }
        Ok(e)
    }

    fn full_expr(&mut self) -> Result<SymExpr, FrontendError> {
        let mut e = self.product()?;
        loop {
            if self.eat(&Tok::Plus) {
                e = SymExpr::add(e, self.product()?);
            } else if self.eat(&Tok::Minus) {
                e = SymExpr::sub(e, self.product()?);
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> Result<SymExpr, FrontendError> {
        if self.eat(&Tok::Minus) {
            if let Some(Tok::Int(n)) = self.peek().cloned() {
                self.pos += 1;
                return Ok(SymExpr::Int(-n));
            }
            return Ok(SymExpr::neg(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<SymExpr, FrontendError> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(SymExpr::Int(n))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.full_expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(k)) if k == "nil" || k == "null" => {
                self.pos += 1;
                Ok(SymExpr::nil())
            }
            Some(Tok::Ident(k)) if k == "object" => {
                self.pos += 1;
                self.expect(Tok::LParen, "'(' after object")?;
                let class = self.ident()?;
                let mut fields = Vec::new();
                while self.eat(&Tok::Comma) {
                    fields.push(self.value()?);
                }
                self.expect(Tok::RParen, "')'")?;
                Ok(SymExpr::record(class, fields))
            }
            Some(Tok::Ident(_)) => {
                let name = self.ident()?;
                if self.peek() == Some(&Tok::Dot) && matches!(self.peek_at(1), Some(Tok::Ident(_))) {
                    return Err(self.error("field references are not supported in assertions; use object(...)"));
                }
                Ok(SymExpr::Var(name))
            }
            _ => Err(self.error("expected an expression")),
        }
    }
}
