use super::text::{lex, TermParser, Tok};
use super::{Term, TermError};

/// One `entail. A |- B.` query.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub antecedent: Term,
    pub consequent: Term,
}

/// Parses a query file: a sequence of `entail. <term> |- <term>.` entries.
pub fn parse_queries(text: &str) -> Result<Vec<Query>, TermError> {
    let toks = lex(text)?;
    let mut p = TermParser::new(&toks, text.len());
    let mut out = Vec::new();
    while !p.at_end() {
        match p.peek() {
            Some(Tok::Atom(a)) if a == "entail" => p.pos += 1,
            _ => return Err(p.error("expected 'entail.'")),
        }
        p.expect(Tok::End, "'.' after entail")?;
        let antecedent = p.term()?;
        p.expect(Tok::Turnstile, "'|-'")?;
        let consequent = p.term()?;
        p.expect(Tok::End, "terminating '.'")?;
        out.push(Query { antecedent, consequent });
    }
    Ok(out)
}
