use std::collections::BTreeSet;

use crate::formula::{CmpOp, Formula, PredDef, PredTable};
use crate::span::{SourceMap, Span};

use super::assertion::{arities_of, parse_assertion_with, Arities};
use super::ast::*;
use super::lexer::{Token, TokenKind as K};
use super::FrontendError;

/// Parses a token stream produced by `tokenize` over `source`.
pub fn parse_program(tokens: &[Token], source: &str) -> Result<SourceProgram, FrontendError> {
    let preds = collect_arities(tokens);
    let mut p = Parser { toks: tokens, pos: 0, end: source.len(), preds };
    let mut prog = SourceProgram { source_map: SourceMap::new(source), ..Default::default() };
    let mut table = PredTable::default();
    while !p.at_end() {
        match p.peek() {
            Some(K::KwClass) => {
                let class = p.class()?;
                if prog.classes.iter().any(|c| c.name == class.name) {
                    return Err(dup("class", &class.name, class.span));
                }
                prog.classes.push(class);
            }
            Some(K::KwPred) => {
                let decl = p.pred()?;
                if !table.insert(decl.def.clone()) || prog.predicates.iter().any(|d| d.def.name == decl.def.name) {
                    return Err(dup("predicate", &decl.def.name, decl.span));
                }
                prog.predicates.push(decl);
            }
            _ => {
                let f = p.method()?;
                if prog.functions.iter().any(|g| g.name == f.name) {
                    return Err(dup("function", &f.name, f.span));
                }
                prog.functions.push(f);
            }
        }
    }
    Ok(prog)
}

fn dup(what: &str, name: &str, span: Span) -> FrontendError {
    FrontendError::Duplicate { what: what.into(), name: name.into(), span }
}

/// Pre-scan for `pred name(params)` so annotations may use predicates
/// declared later in the file.
fn collect_arities(tokens: &[Token]) -> Arities {
    let mut table = arities_of(&PredTable::default());
    let mut i = 0;
    while i + 2 < tokens.len() {
        if let (K::KwPred, K::Ident(name), K::LParen) = (&tokens[i].kind, &tokens[i + 1].kind, &tokens[i + 2].kind) {
            let mut j = i + 3;
            let mut n = 0;
            while j < tokens.len() && tokens[j].kind != K::RParen {
                if matches!(tokens[j].kind, K::Ident(_)) {
                    n += 1;
                }
                j += 1;
            }
            table.entry(name.clone()).or_insert(n);
        }
        i += 1;
    }
    table
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    end: usize,
    preds: Arities,
}

type PResult<T> = Result<T, FrontendError>;

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&K> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, k: usize) -> Option<&K> {
        self.toks.get(self.pos + k).map(|t| &t.kind)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.span).unwrap_or(Span::new(self.end, self.end))
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].span.end
        }
    }

    fn fail<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(FrontendError::Parse {
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().map(|k| k.describe()).unwrap_or_else(|| "end of input".into()),
            span: self.span(),
        })
    }

    fn eat(&mut self, k: &K) -> bool {
        if self.peek() == Some(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, k: K) -> PResult<()> {
        if self.eat(&k) {
            Ok(())
        } else {
            let sym = format!("'{}'", k.symbol());
            self.fail(&[&sym])
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(K::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn ty(&mut self) -> PResult<String> {
        let mut t = self.ident()?;
        while self.eat(&K::Star) {
            t.push('*');
        }
        Ok(t)
    }

    fn annotation(&mut self) -> PResult<Option<Formula>> {
        if let Some(Token { kind: K::Annotation(text), span }) = self.toks.get(self.pos) {
            self.pos += 1;
            return parse_assertion_with(text, span.start, &self.preds).map(Some);
        }
        Ok(None)
    }

    fn class(&mut self) -> PResult<ClassDecl> {
        let start = self.span().start;
        self.expect(K::KwClass)?;
        let name = self.ident()?;
        self.expect(K::LBrace)?;
        let mut fields: Vec<FieldDecl> = Vec::new();
        let mut methods: Vec<MethodDecl> = Vec::new();
        while !self.eat(&K::RBrace) {
            if self.at_end() {
                return self.fail(&["'}'"]);
            }
            // `Type name ;` is a field, `Type name (` a method.
            let save = self.pos;
            let fstart = self.span().start;
            let ty = self.ty()?;
            let fname = self.ident()?;
            if self.eat(&K::Semi) {
                let span = Span::new(fstart, self.prev_end());
                if fields.iter().any(|f| f.name == fname) {
                    return Err(dup("field", &fname, span));
                }
                fields.push(FieldDecl { name: fname, ty, span });
                continue;
            }
            self.pos = save;
            let m = self.method()?;
            if methods.iter().any(|g| g.name == m.name) {
                return Err(dup("method", &m.name, m.span));
            }
            methods.push(m);
        }
        Ok(ClassDecl { name, fields, methods, span: Span::new(start, self.prev_end()) })
    }

    fn pred(&mut self) -> PResult<PredDecl> {
        let start = self.span().start;
        self.expect(K::KwPred)?;
        let name = self.ident()?;
        self.expect(K::LParen)?;
        let mut params = Vec::new();
        if !self.eat(&K::RParen) {
            loop {
                params.push(self.ident()?);
                if self.eat(&K::RParen) {
                    break;
                }
                self.expect(K::Comma)?;
            }
        }
        self.expect(K::Define)?;
        let body = match self.toks.get(self.pos) {
            Some(Token { kind: K::RawFormula(text), span }) => {
                self.pos += 1;
                parse_assertion_with(text, span.start, &self.preds)?
            }
            _ => return self.fail(&["predicate body"]),
        };
        self.expect(K::Semi)?;
        let span = Span::new(start, self.prev_end());
        let unique: BTreeSet<&String> = params.iter().collect();
        if unique.len() != params.len() {
            return Err(FrontendError::Assertion { message: format!("repeated parameter in predicate '{name}'"), span });
        }
        let stray: Vec<String> = crate::formula::free_vars(&body).into_iter().filter(|v| !params.contains(v)).collect();
        if !stray.is_empty() {
            return Err(FrontendError::Assertion {
                message: format!("predicate '{name}' body mentions unbound variables: {}", stray.join(", ")),
                span,
            });
        }
        Ok(PredDecl { def: PredDef { name, params, body, builtin: false }, span })
    }

    fn method(&mut self) -> PResult<MethodDecl> {
        let start = self.span().start;
        let ret = self.ty()?;
        let name = self.ident()?;
        self.expect(K::LParen)?;
        let mut params: Vec<Param> = Vec::new();
        if !self.eat(&K::RParen) {
            loop {
                let pspan = self.span();
                let ty = self.ty()?;
                let pname = self.ident()?;
                if params.iter().any(|p| p.name == pname) {
                    return Err(dup("parameter", &pname, pspan));
                }
                params.push(Param { name: pname, ty });
                if self.eat(&K::RParen) {
                    break;
                }
                self.expect(K::Comma)?;
            }
        }
        let pre = self.annotation()?.unwrap_or(Formula::True);
        let body = self.block()?;
        let post = self.annotation()?.unwrap_or(Formula::True);
        Ok(MethodDecl { name, ret, params, pre, body, post, span: Span::new(start, self.prev_end()) })
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect(K::LBrace)?;
        let mut out = Vec::new();
        while !self.eat(&K::RBrace) {
            if self.at_end() {
                return self.fail(&["'}'"]);
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.span().start;
        let kind = match self.peek() {
            Some(K::Annotation(_)) => {
                let f = self.annotation()?.expect("annotation token");
                self.expect(K::Semi)?;
                StmtKind::Assert(f)
            }
            Some(K::KwIf) => {
                self.pos += 1;
                let c = self.cond()?;
                let then = self.block()?;
                let els = if self.eat(&K::KwElse) {
                    if self.peek() == Some(&K::KwIf) {
                        Some(vec![self.stmt()?])
                    } else {
                        Some(self.block()?)
                    }
                } else {
                    None
                };
                StmtKind::If(c, then, els)
            }
            Some(K::KwWhile) => {
                self.pos += 1;
                let c = self.cond()?;
                let inv = self.annotation()?.unwrap_or(Formula::True);
                let body = self.block()?;
                StmtKind::While(c, inv, body)
            }
            Some(K::KwNew) | Some(K::KwDelete) => {
                let is_new = self.peek() == Some(&K::KwNew);
                self.pos += 1;
                self.expect(K::LParen)?;
                let base = self.base()?;
                self.expect(K::RParen)?;
                self.expect(K::Semi)?;
                if is_new {
                    StmtKind::New(base)
                } else {
                    StmtKind::Delete(base)
                }
            }
            _ if self.at_call() => {
                let call = self.call()?;
                self.expect(K::Semi)?;
                StmtKind::Call(call)
            }
            _ => {
                let mut targets = vec![self.lhs()?];
                self.expect(K::Assign)?;
                loop {
                    let save = self.pos;
                    if let Ok(l) = self.lhs() {
                        if self.eat(&K::Assign) {
                            targets.push(l);
                            continue;
                        }
                    }
                    self.pos = save;
                    break;
                }
                let e = self.expr()?;
                self.expect(K::Semi)?;
                StmtKind::Assign(targets, e)
            }
        };
        Ok(Stmt { kind, span: Span::new(start, self.prev_end()) })
    }

    fn at_call(&self) -> bool {
        matches!(
            (self.peek(), self.peek_at(1), self.peek_at(2), self.peek_at(3)),
            (Some(K::Ident(_)), Some(K::LParen), _, _) | (Some(K::Ident(_) | K::KwThis), Some(K::Dot), Some(K::Ident(_)), Some(K::LParen))
        )
    }

    fn call(&mut self) -> PResult<Call> {
        let receiver = if self.peek_at(1) == Some(&K::Dot) {
            let r = if self.eat(&K::KwThis) { "this".to_string() } else { self.ident()? };
            self.expect(K::Dot)?;
            Some(r)
        } else {
            None
        };
        let name = self.ident()?;
        self.expect(K::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&K::RParen) {
            loop {
                args.push(self.expr()?);
                if self.eat(&K::RParen) {
                    break;
                }
                self.expect(K::Comma)?;
            }
        }
        Ok(Call { receiver, name, args })
    }

    fn base(&mut self) -> PResult<Base> {
        let obj = if self.eat(&K::KwThis) {
            if self.peek() != Some(&K::Dot) {
                return self.fail(&["'.'"]);
            }
            "this".to_string()
        } else {
            self.ident()?
        };
        if self.eat(&K::Dot) {
            let field = self.ident()?;
            return Ok(Base::Field(obj, field));
        }
        Ok(Base::Var(obj))
    }

    fn location(&mut self) -> PResult<Location> {
        let base = self.base()?;
        let sign = if self.eat(&K::Plus) {
            1
        } else if self.eat(&K::Minus) {
            -1
        } else {
            return Ok(Location { base, offset: None });
        };
        match self.peek() {
            Some(K::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(Location { base, offset: Some(sign * n) })
            }
            _ => self.fail(&["integer offset"]),
        }
    }

    fn lhs(&mut self) -> PResult<Lhs> {
        if self.eat(&K::LBrack) {
            let loc = self.location()?;
            self.expect(K::RBrack)?;
            return Ok(Lhs::Mem(loc));
        }
        Ok(Lhs::Loc(self.base()?))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.term()?;
        loop {
            let op = match self.peek() {
                Some(K::Plus) => BinOp::Add,
                Some(K::Minus) => BinOp::Sub,
                _ => return Ok(e),
            };
            self.pos += 1;
            e = Expr::Binary(op, Box::new(e), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        while self.eat(&K::Star) {
            e = Expr::Binary(BinOp::Mul, Box::new(e), Box::new(self.unary()?));
        }
        Ok(e)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&K::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().cloned() {
            Some(K::Int(n)) => {
                self.pos += 1;
                Ok(Expr::Int(n))
            }
            Some(K::Str(s)) => {
                self.pos += 1;
                Ok(Expr::Str(s))
            }
            Some(K::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(K::RParen)?;
                Ok(e)
            }
            Some(K::LBrack) => {
                self.pos += 1;
                let loc = self.location()?;
                self.expect(K::RBrack)?;
                Ok(Expr::Mem(loc))
            }
            Some(K::Ident(_)) | Some(K::KwThis) => {
                if self.at_call() {
                    return Ok(Expr::Call(self.call()?));
                }
                Ok(Expr::Loc(self.base()?))
            }
            _ => self.fail(&["expression"]),
        }
    }

    fn cond(&mut self) -> PResult<Cond> {
        let mut c = self.conj()?;
        while self.eat(&K::OrOr) {
            c = Cond::Or(Box::new(c), Box::new(self.conj()?));
        }
        Ok(c)
    }

    fn conj(&mut self) -> PResult<Cond> {
        let mut c = self.rel()?;
        while self.eat(&K::AndAnd) {
            c = Cond::And(Box::new(c), Box::new(self.rel()?));
        }
        Ok(c)
    }

    fn rel(&mut self) -> PResult<Cond> {
        if self.peek() == Some(&K::LParen) {
            let save = self.pos;
            self.pos += 1;
            if let Ok(c) = self.cond() {
                if self.eat(&K::RParen) && !self.at_rel_or_arith() {
                    return Ok(c);
                }
            }
            self.pos = save;
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Some(K::EqEq) => CmpOp::Eq,
            Some(K::NotEq) => CmpOp::Ne,
            Some(K::Lt) => CmpOp::Lt,
            Some(K::Le) => CmpOp::Le,
            Some(K::Gt) => CmpOp::Gt,
            Some(K::Ge) => CmpOp::Ge,
            _ => return self.fail(&["'=='", "'!='", "'<'", "'<='", "'>'", "'>='"]),
        };
        self.pos += 1;
        let rhs = self.expr()?;
        Ok(Cond::Cmp(op, lhs, rhs))
    }

    fn at_rel_or_arith(&self) -> bool {
        matches!(self.peek(), Some(K::EqEq | K::NotEq | K::Lt | K::Le | K::Gt | K::Ge | K::Plus | K::Minus | K::Star))
    }
}
