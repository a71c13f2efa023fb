use crate::span::Span;

use super::FrontendError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Str(String),
    KwClass,
    KwIf,
    KwElse,
    KwWhile,
    KwNew,
    KwDelete,
    KwThis,
    KwPred,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Semi,
    Comma,
    Dot,
    Assign,
    Define,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Plus,
    Minus,
    Star,
    /// Text between `@` delimiters.
    Annotation(String),
    /// Text of a predicate body after `:=`, up to the closing `;`.
    RawFormula(String),
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier '{s}'"),
            TokenKind::Int(n) => format!("integer {n}"),
            TokenKind::Str(_) => "string literal".into(),
            TokenKind::Annotation(_) => "annotation".into(),
            TokenKind::RawFormula(_) => "predicate body".into(),
            other => format!("'{}'", other.symbol()),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            TokenKind::KwClass => "class",
            TokenKind::KwIf => "if",
            TokenKind::KwElse => "else",
            TokenKind::KwWhile => "while",
            TokenKind::KwNew => "new",
            TokenKind::KwDelete => "delete",
            TokenKind::KwThis => "this",
            TokenKind::KwPred => "pred",
            TokenKind::LBrace => "{",
            TokenKind::RBrace => "}",
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::LBrack => "[",
            TokenKind::RBrack => "]",
            TokenKind::Semi => ";",
            TokenKind::Comma => ",",
            TokenKind::Dot => ".",
            TokenKind::Assign => "=",
            TokenKind::Define => ":=",
            TokenKind::EqEq => "==",
            TokenKind::NotEq => "!=",
            TokenKind::Lt => "<",
            TokenKind::Le => "<=",
            TokenKind::Gt => ">",
            TokenKind::Ge => ">=",
            TokenKind::AndAnd => "&&",
            TokenKind::OrOr => "||",
            TokenKind::Plus => "+",
            TokenKind::Minus => "-",
            TokenKind::Star => "*",
            TokenKind::Ident(_) | TokenKind::Int(_) | TokenKind::Str(_) | TokenKind::Annotation(_) | TokenKind::RawFormula(_) => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// For annotations and raw formulas, the span of the inner text.
    pub span: Span,
}

fn keyword(word: &str) -> Option<TokenKind> {
    Some(match word {
        "class" => TokenKind::KwClass,
        "if" => TokenKind::KwIf,
        "else" => TokenKind::KwElse,
        "while" => TokenKind::KwWhile,
        "new" => TokenKind::KwNew,
        "delete" => TokenKind::KwDelete,
        "this" => TokenKind::KwThis,
        "pred" => TokenKind::KwPred,
        _ => return None,
    })
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, FrontendError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |message: String, at: usize| FrontendError::Lex { message, span: Span::new(at, (at + 1).min(text.len().max(at))) };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            match text[i + 2..].find("*/") {
                Some(k) => i = i + 2 + k + 2,
                None => return Err(err("unterminated block comment".into(), start)),
            }
            continue;
        }
        if c == b'@' {
            let Some(k) = text[i + 1..].find('@') else {
                return Err(err("unterminated '@' annotation".into(), start));
            };
            let inner = Span::new(i + 1, i + 1 + k);
            out.push(Token { kind: TokenKind::Annotation(text[inner.start..inner.end].to_string()), span: inner });
            i = inner.end + 1;
            continue;
        }
        if c == b':' && bytes.get(i + 1) == Some(&b'=') {
            out.push(Token { kind: TokenKind::Define, span: Span::new(i, i + 2) });
            let body_start = i + 2;
            let Some(k) = text[body_start..].find(';') else {
                return Err(err("predicate body is missing its ';'".into(), start));
            };
            let inner = Span::new(body_start, body_start + k);
            out.push(Token { kind: TokenKind::RawFormula(text[inner.start..inner.end].to_string()), span: inner });
            i = inner.end;
            continue;
        }
        if c == b'"' {
            let mut s = String::new();
            i += 1;
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => return Err(err("unterminated string literal".into(), start)),
                    Some(b'"') => {
                        i += 1;
                        break;
                    }
                    Some(b'\\') => {
                        match bytes.get(i + 1) {
                            Some(b'n') => s.push('\n'),
                            Some(b't') => s.push('\t'),
                            Some(b'"') => s.push('"'),
                            Some(b'\\') => s.push('\\'),
                            _ => return Err(err("bad escape in string literal".into(), i)),
                        }
                        i += 2;
                    }
                    Some(_) => {
                        let ch = text[i..].chars().next().unwrap_or('?');
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            out.push(Token { kind: TokenKind::Str(s), span: Span::new(start, i) });
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = text[start..i].parse::<i64>().map_err(|_| err("integer literal out of range".into(), start))?;
            out.push(Token { kind: TokenKind::Int(n), span: Span::new(start, i) });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let kind = keyword(word).unwrap_or_else(|| TokenKind::Ident(word.to_string()));
            out.push(Token { kind, span: Span::new(start, i) });
            continue;
        }
        let two = bytes.get(i + 1).copied();
        let (kind, len) = match (c, two) {
            (b'=', Some(b'=')) => (TokenKind::EqEq, 2),
            (b'!', Some(b'=')) => (TokenKind::NotEq, 2),
            (b'<', Some(b'=')) => (TokenKind::Le, 2),
            (b'>', Some(b'=')) => (TokenKind::Ge, 2),
            (b'&', Some(b'&')) => (TokenKind::AndAnd, 2),
            (b'|', Some(b'|')) => (TokenKind::OrOr, 2),
            (b'=', _) => (TokenKind::Assign, 1),
            (b'<', _) => (TokenKind::Lt, 1),
            (b'>', _) => (TokenKind::Gt, 1),
            (b'{', _) => (TokenKind::LBrace, 1),
            (b'}', _) => (TokenKind::RBrace, 1),
            (b'(', _) => (TokenKind::LParen, 1),
            (b')', _) => (TokenKind::RParen, 1),
            (b'[', _) => (TokenKind::LBrack, 1),
            (b']', _) => (TokenKind::RBrack, 1),
            (b';', _) => (TokenKind::Semi, 1),
            (b',', _) => (TokenKind::Comma, 1),
            (b'.', _) => (TokenKind::Dot, 1),
            (b'+', _) => (TokenKind::Plus, 1),
            (b'-', _) => (TokenKind::Minus, 1),
            (b'*', _) => (TokenKind::Star, 1),
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(FrontendError::Lex { message: format!("illegal character {ch:?}"), span: Span::new(i, i + ch.len_utf8()) });
            }
        };
        out.push(Token { kind, span: Span::new(start, start + len) });
        i += len;
    }
    Ok(out)
}
