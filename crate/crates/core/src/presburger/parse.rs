//! Recursive-descent parser for formulas and summation weights.
//!
//! ```text
//! formula := conj ("or" conj)*
//! conj    := unary ("and" unary)*
//! unary   := "not" unary | ("exists"|"forall") ident ("," ident)* unary
//!          | "true" | "false" | "(" formula ")" | chain
//! chain   := term (rel term)+ | term ("≡"|"=") term ["("] "mod" int [")"]
//! term    := prod (("+"|"-") prod)*
//! prod    := signed (("*")? signed)*     at most one non-constant factor
//! signed  := "-" signed | int | ident | "(" term ")"
//! ```
//! `∧ ∨ ¬ ∃ ∀ ≤ ≥ ≠` are accepted for the corresponding ASCII forms.

use std::collections::BTreeMap;

use super::{Atom, Linear, PresburgerError, PresburgerFormula as F, Relation, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Comma,
    Dot,
    Rel(Relation),
    Cong,
    Mod,
    And,
    Or,
    Not,
    Exists,
    Forall,
    True,
    False,
}

fn syntax(pos: usize, msg: &str) -> PresburgerError {
    PresburgerError::Syntax {
        pos,
        msg: msg.to_string(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize, usize)>, PresburgerError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
            continue;
        }
        if c.is_ascii_digit() {
            let mut end = i;
            while let Some(&(j, d)) = it.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                end = j + 1;
                it.next();
            }
            let v = text[i..end]
                .parse()
                .map_err(|_| syntax(i, "integer literal too large"))?;
            out.push((Tok::Int(v), i, end));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut end = i;
            while let Some(&(j, d)) = it.peek() {
                if !(d.is_alphanumeric() || d == '_' || d == '\'') {
                    break;
                }
                end = j + d.len_utf8();
                it.next();
            }
            let word = &text[i..end];
            let tok = match word {
                "and" => Tok::And,
                "or" => Tok::Or,
                "not" => Tok::Not,
                "exists" => Tok::Exists,
                "forall" => Tok::Forall,
                "mod" => Tok::Mod,
                "true" => Tok::True,
                "false" => Tok::False,
                _ => Tok::Ident(word.to_string()),
            };
            out.push((tok, i, end));
            continue;
        }
        it.next();
        let next = it.peek().map(|&(_, d)| d);
        let (tok, len) = match (c, next) {
            ('<', Some('=')) => (Tok::Rel(Relation::Le), 2),
            ('>', Some('=')) => (Tok::Rel(Relation::Ge), 2),
            ('!', Some('=')) => (Tok::Rel(Relation::Ne), 2),
            ('=', Some('=')) => (Tok::Rel(Relation::Eq), 2),
            ('&', Some('&')) => (Tok::And, 2),
            ('|', Some('|')) => (Tok::Or, 2),
            ('<', _) => (Tok::Rel(Relation::Lt), 1),
            ('>', _) => (Tok::Rel(Relation::Gt), 1),
            ('=', _) => (Tok::Rel(Relation::Eq), 1),
            ('!', _) => (Tok::Not, 1),
            ('≤', _) => (Tok::Rel(Relation::Le), 1),
            ('≥', _) => (Tok::Rel(Relation::Ge), 1),
            ('≠', _) => (Tok::Rel(Relation::Ne), 1),
            ('≡', _) => (Tok::Cong, 1),
            ('∧', _) => (Tok::And, 1),
            ('∨', _) => (Tok::Or, 1),
            ('¬', _) => (Tok::Not, 1),
            ('∃', _) => (Tok::Exists, 1),
            ('∀', _) => (Tok::Forall, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('^', _) => (Tok::Caret, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            ('.', _) | (':', _) => (Tok::Dot, 1),
            _ => return Err(syntax(i, &format!("unexpected character `{c}`"))),
        };
        let mut end = i + c.len_utf8();
        if len == 2 {
            let (j, d) = it.next().unwrap();
            end = j + d.len_utf8();
        }
        out.push((tok, i, end));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.len)
    }

    fn last_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].2
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), PresburgerError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(syntax(self.offset(), &format!("expected {what}")))
        }
    }

    fn formula(&mut self) -> Result<F, PresburgerError> {
        let mut parts = vec![self.conj()?];
        while self.eat(&Tok::Or) {
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            F::Or(parts)
        })
    }

    fn conj(&mut self) -> Result<F, PresburgerError> {
        let mut parts = vec![self.unary()?];
        while self.eat(&Tok::And) {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            F::And(parts)
        })
    }

    fn unary(&mut self) -> Result<F, PresburgerError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(F::Not(self.unary()?.into()))
            }
            Some(Tok::Exists | Tok::Forall) => {
                let exists = self.peek() == Some(&Tok::Exists);
                self.pos += 1;
                let mut vars = Vec::new();
                loop {
                    match self.peek() {
                        Some(Tok::Ident(v)) => {
                            vars.push(v.clone());
                            self.pos += 1;
                        }
                        _ => return Err(syntax(self.offset(), "expected a variable name")),
                    }
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.eat(&Tok::Dot);
                let mut body = self.unary()?;
                for v in vars.into_iter().rev() {
                    body = if exists {
                        F::Exists(v, body.into())
                    } else {
                        F::Forall(v, body.into())
                    };
                }
                Ok(body)
            }
            Some(Tok::True) => {
                self.pos += 1;
                Ok(F::True)
            }
            Some(Tok::False) => {
                self.pos += 1;
                Ok(F::False)
            }
            Some(Tok::LParen) => {
                let save = self.pos;
                match self.chain() {
                    Ok(f) => Ok(f),
                    Err(e1) => {
                        let after_chain = self.pos;
                        self.pos = save + 1;
                        let r = self
                            .formula()
                            .and_then(|f| self.expect(&Tok::RParen, "`)`").map(|_| f));
                        match r {
                            Ok(f) => Ok(f),
                            Err(e2) => {
                                // report whichever attempt got further
                                let p1 = err_pos(&e1).max(after_chain);
                                if p1 > err_pos(&e2) {
                                    Err(e1)
                                } else {
                                    Err(e2)
                                }
                            }
                        }
                    }
                }
            }
            _ => self.chain(),
        }
    }

    fn chain(&mut self) -> Result<F, PresburgerError> {
        let start = self.offset();
        let first = self.term()?;
        let mut atoms = Vec::new();
        let mut lhs = first;
        loop {
            let rel = match self.peek() {
                Some(Tok::Rel(r)) => Some(*r),
                Some(Tok::Cong) => None,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            let congruence = rel.is_none() || (rel == Some(Relation::Eq) && self.at_mod());
            let atom = if congruence {
                let m = self.modulus()?;
                Atom::Congruent {
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                    modulus: m,
                }
            } else {
                Atom::Compare {
                    rel: rel.unwrap(),
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                }
            };
            atoms.push(F::Atom {
                atom,
                span: Span {
                    start,
                    end: self.last_end(),
                },
            });
            lhs = rhs;
        }
        match atoms.len() {
            0 => Err(syntax(self.offset(), "expected a comparison")),
            1 => Ok(atoms.pop().unwrap()),
            _ => Ok(F::And(atoms)),
        }
    }

    fn at_mod(&self) -> bool {
        matches!(self.peek(), Some(Tok::Mod))
            || (self.peek() == Some(&Tok::LParen)
                && matches!(self.toks.get(self.pos + 1), Some((Tok::Mod, _, _))))
    }

    fn modulus(&mut self) -> Result<i64, PresburgerError> {
        let paren = self.eat(&Tok::LParen);
        self.expect(&Tok::Mod, "`mod`")?;
        let pos = self.offset();
        let m = match self.peek() {
            Some(Tok::Int(m)) => *m,
            _ => return Err(syntax(pos, "expected an integer modulus")),
        };
        self.pos += 1;
        if paren {
            self.expect(&Tok::RParen, "`)`")?;
        }
        if m <= 0 {
            return Err(PresburgerError::Modulus { pos });
        }
        Ok(m)
    }

    fn term(&mut self) -> Result<Linear, PresburgerError> {
        let mut acc = self.prod()?;
        loop {
            if self.eat(&Tok::Plus) {
                acc = acc.add(&self.prod()?);
            } else if self.eat(&Tok::Minus) {
                acc = acc.sub(&self.prod()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn prod(&mut self) -> Result<Linear, PresburgerError> {
        let start = self.offset();
        let mut acc = self.signed()?;
        loop {
            let explicit = self.eat(&Tok::Star);
            // juxtaposition such as `2k`
            if !explicit && !(acc.is_constant() && matches!(self.peek(), Some(Tok::Ident(_)))) {
                return Ok(acc);
            }
            let rhs = self.signed()?;
            acc = match (acc.is_constant(), rhs.is_constant()) {
                (true, _) => rhs.scale(acc.constant),
                (_, true) => acc.scale(rhs.constant),
                _ => {
                    return Err(PresburgerError::Nonlinear {
                        start,
                        end: self.last_end(),
                    })
                }
            };
        }
    }

    fn signed(&mut self) -> Result<Linear, PresburgerError> {
        match self.peek().cloned() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.signed()?.scale(-1))
            }
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(Linear::constant(v))
            }
            Some(Tok::Ident(v)) => {
                self.pos += 1;
                Ok(Linear::var(&v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => Err(syntax(self.offset(), "expected a term")),
        }
    }
}

fn err_pos(e: &PresburgerError) -> usize {
    match e {
        PresburgerError::Syntax { pos, .. } | PresburgerError::Modulus { pos } => *pos,
        PresburgerError::Nonlinear { start, .. } => *start,
        _ => 0,
    }
}

pub fn parse(text: &str) -> Result<F, PresburgerError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        len: text.len(),
    };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return Err(syntax(p.offset(), "trailing input"));
    }
    Ok(f)
}

/// Polynomial in the variables and `s`, as monomial (sorted names) to coefficient.
type WPoly = BTreeMap<Vec<String>, i64>;

struct WeightParser {
    inner: Parser,
}

impl WeightParser {
    fn sum(&mut self) -> Result<WPoly, PresburgerError> {
        let mut acc = self.prod()?;
        loop {
            let sign = if self.inner.eat(&Tok::Plus) {
                1
            } else if self.inner.eat(&Tok::Minus) {
                -1
            } else {
                return Ok(acc);
            };
            for (m, c) in self.prod()? {
                *acc.entry(m).or_insert(0) += sign * c;
            }
            acc.retain(|_, c| *c != 0);
        }
    }

    fn prod(&mut self) -> Result<WPoly, PresburgerError> {
        let mut acc = self.signed()?;
        while self.inner.eat(&Tok::Star) || matches!(self.inner.peek(), Some(Tok::Ident(_))) {
            let rhs = self.signed()?;
            let mut out = WPoly::new();
            for (m1, c1) in &acc {
                for (m2, c2) in &rhs {
                    let mut m = m1.clone();
                    m.extend(m2.iter().cloned());
                    m.sort();
                    *out.entry(m).or_insert(0) += c1 * c2;
                }
            }
            out.retain(|_, c| *c != 0);
            acc = out;
        }
        Ok(acc)
    }

    fn signed(&mut self) -> Result<WPoly, PresburgerError> {
        let p = &mut self.inner;
        match p.peek().cloned() {
            Some(Tok::Minus) => {
                p.pos += 1;
                Ok(self.signed()?.into_iter().map(|(m, c)| (m, -c)).collect())
            }
            Some(Tok::Int(v)) => {
                p.pos += 1;
                Ok(if v == 0 {
                    WPoly::new()
                } else {
                    [(vec![], v)].into()
                })
            }
            Some(Tok::Ident(v)) => {
                p.pos += 1;
                Ok([(vec![v], 1)].into())
            }
            Some(Tok::LParen) => {
                p.pos += 1;
                let t = self.sum()?;
                self.inner.expect(&Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => Err(syntax(p.offset(), "expected a term")),
        }
    }
}

/// Parses `q^(E)` (or bare `E`) with `E` linear in the variables and in `v*s`.
/// Returns the exponents of `X = q` and `Y = q^{-s}` as linear forms.
pub fn parse_weight(text: &str) -> Result<(Linear, Linear), PresburgerError> {
    let toks = lex(text)?;
    let mut inner = Parser {
        toks,
        pos: 0,
        len: text.len(),
    };
    if matches!(inner.peek(), Some(Tok::Ident(q)) if q == "q")
        && matches!(inner.toks.get(1), Some((Tok::Caret, _, _)))
    {
        inner.pos = 2;
    }
    let mut wp = WeightParser { inner };
    let poly = wp.sum()?;
    if wp.inner.pos != wp.inner.toks.len() {
        return Err(syntax(wp.inner.offset(), "trailing input"));
    }
    let mut x = Linear::default();
    let mut y = Linear::default();
    for (m, c) in poly {
        let s_count = m.iter().filter(|v| *v == "s").count();
        let others: Vec<&String> = m.iter().filter(|v| *v != "s").collect();
        if s_count > 1 || others.len() > 1 {
            return Err(PresburgerError::Weight(format!(
                "monomial {} is not of the form k*v or k*v*s",
                m.join("*")
            )));
        }
        let term = match others.first() {
            Some(v) => Linear::var(v).scale(c),
            None => Linear::constant(c),
        };
        if s_count == 1 {
            // q^{c v s} = Y^{-c v}
            y = y.sub(&term);
        } else {
            x = x.add(&term);
        }
    }
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights() {
        let (x, y) = parse_weight("q^(-n*s - l)").unwrap();
        assert_eq!(x, Linear::var("l").scale(-1));
        assert_eq!(y, Linear::var("n"));
        let (x, y) = parse_weight("2*l - 3 - s*(n + 1)").unwrap();
        assert_eq!(x, Linear::var("l").scale(2).shift(-3));
        assert_eq!(y, Linear::var("n").shift(1));
        assert!(matches!(
            parse_weight("q^(n*l)"),
            Err(PresburgerError::Weight(_))
        ));
    }

    #[test]
    fn spans_and_errors() {
        let F::And(parts) = parse("0 <= l and l <= n").unwrap() else {
            panic!()
        };
        let F::Atom { span, .. } = &parts[1] else {
            panic!()
        };
        assert_eq!((span.start, span.end), (11, 17));
        assert!(matches!(
            parse("(n <= 3"),
            Err(PresburgerError::Syntax { pos: 7, .. })
        ));
        assert!(matches!(
            parse("n <= 3 )"),
            Err(PresburgerError::Syntax { pos: 7, .. })
        ));
        assert!(matches!(
            parse("2*(x*y) < 1"),
            Err(PresburgerError::Nonlinear { start: 3, .. })
        ));
        assert!(parse("∃k (n = 2k ∧ k ≥ 0)").is_ok());
    }
}
