//! Presburger formulas over the integers: parsing, Cooper elimination, and
//! symbolic summation of `q^{<a,x>} (q^{-s})^{<b,x>}` over definable sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

mod corpus;
mod parse;
mod qe;
mod sum;

pub use corpus::{qe_corpus, sum_corpus, CorpusEntry};
pub use parse::{parse, parse_weight};
pub use qe::eliminate_quantifiers;
pub use sum::{
    brute_force_coefficients, brute_force_sum, sum_rational, SliceCheck, SumResult, SummationSpec,
};

pub const MAX_VARIABLES: usize = 4;
pub const MAX_MODULUS: i64 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PresburgerError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("nonlinear product at bytes {start}..{end}")]
    Nonlinear { start: usize, end: usize },
    #[error("modulus must be positive (byte {pos})")]
    Modulus { pos: usize },
    #[error("sum diverges along +/-{variable} with weight X^{x} Y^{y}")]
    Divergent {
        variable: String,
        direction: i64,
        x: i64,
        y: i64,
    },
    #[error("{found} summation variables exceed the budget of {max}")]
    VariableBudget { found: usize, max: usize },
    #[error("modulus {found} after elimination exceeds the budget of {max}")]
    ModulusBudget { found: i64, max: i64 },
    #[error("weight variable `{0}` is not free in the formula")]
    NotFree(String),
    #[error("invalid weight: {0}")]
    Weight(String),
    #[error("no finite range for quantified `{0}` under the oracle")]
    Unbounded(String),
    #[error("arithmetic overflow")]
    Overflow,
}

/// `sum coeffs[v] * v + constant`; zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Linear {
    pub coeffs: BTreeMap<String, i64>,
    pub constant: i64,
}

impl Linear {
    pub fn constant(c: i64) -> Self {
        Self {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(name: &str) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.to_string(), 1);
        Self {
            coeffs,
            constant: 0,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, v: &str) -> i64 {
        self.coeffs.get(v).copied().unwrap_or(0)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (v, c) in &o.coeffs {
            let e = out.coeffs.entry(v.clone()).or_insert(0);
            *e += c;
            if *e == 0 {
                out.coeffs.remove(v);
            }
        }
        out.constant += o.constant;
        out
    }

    pub fn scale(&self, k: i64) -> Self {
        if k == 0 {
            return Self::default();
        }
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(v, c)| (v.clone(), c * k))
                .collect(),
            constant: self.constant * k,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1))
    }

    pub fn shift(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.constant += k;
        out
    }

    /// Replaces `v` by `t`.
    pub fn substitute(&self, v: &str, t: &Linear) -> Self {
        let c = self.coeff(v);
        if c == 0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.coeffs.remove(v);
        out.add(&t.scale(c))
    }

    pub fn rename(&self, from: &str, to: &str) -> Self {
        self.substitute(from, &Linear::var(to))
    }

    /// Evaluates when every variable is bound.
    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Option<i64> {
        let mut acc = self.constant;
        for (v, c) in &self.coeffs {
            acc += c * env.get(v)?;
        }
        Some(acc)
    }
}

impl fmt::Display for Linear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, &c) in &self.coeffs {
            let (sign, mag) = if c < 0 { ("-", -c) } else { ("+", c) };
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{mag}*{v}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)
        } else if self.constant < 0 {
            write!(f, " - {}", -self.constant)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    Ne,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Eq => "=",
            Relation::Ne => "!=",
        }
    }

    fn holds(self, a: i64, b: i64) -> bool {
        match self {
            Relation::Le => a <= b,
            Relation::Lt => a < b,
            Relation::Ge => a >= b,
            Relation::Gt => a > b,
            Relation::Eq => a == b,
            Relation::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Compare {
        rel: Relation,
        lhs: Linear,
        rhs: Linear,
    },
    /// `lhs ≡ rhs (mod modulus)`, modulus positive.
    Congruent {
        lhs: Linear,
        rhs: Linear,
        modulus: i64,
    },
}

impl Atom {
    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Option<bool> {
        match self {
            Atom::Compare { rel, lhs, rhs } => Some(rel.holds(lhs.eval(env)?, rhs.eval(env)?)),
            Atom::Congruent { lhs, rhs, modulus } => {
                Some((lhs.eval(env)? - rhs.eval(env)?).rem_euclid(*modulus) == 0)
            }
        }
    }

    fn rename(&self, from: &str, to: &str) -> Self {
        match self {
            Atom::Compare { rel, lhs, rhs } => Atom::Compare {
                rel: *rel,
                lhs: lhs.rename(from, to),
                rhs: rhs.rename(from, to),
            },
            Atom::Congruent { lhs, rhs, modulus } => Atom::Congruent {
                lhs: lhs.rename(from, to),
                rhs: rhs.rename(from, to),
                modulus: *modulus,
            },
        }
    }

    fn variables(&self, out: &mut BTreeSet<String>) {
        let (Atom::Compare { lhs, rhs, .. } | Atom::Congruent { lhs, rhs, .. }) = self;
        out.extend(lhs.coeffs.keys().cloned());
        out.extend(rhs.coeffs.keys().cloned());
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Compare { rel, lhs, rhs } => write!(f, "{lhs} {} {rhs}", rel.symbol()),
            Atom::Congruent { lhs, rhs, modulus } => write!(f, "{lhs} ≡ {rhs} (mod {modulus})"),
        }
    }
}

/// Source byte range of a parsed atom; empty for synthesized atoms.
/// Spans are metadata and never affect equality.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PresburgerFormula {
    True,
    False,
    Atom { atom: Atom, span: Span },
    Not(Box<PresburgerFormula>),
    And(Vec<PresburgerFormula>),
    Or(Vec<PresburgerFormula>),
    Exists(String, Box<PresburgerFormula>),
    Forall(String, Box<PresburgerFormula>),
}

use PresburgerFormula as F;

impl PresburgerFormula {
    pub fn atom(atom: Atom) -> Self {
        F::Atom {
            atom,
            span: Span::default(),
        }
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            F::True | F::False => {}
            F::Atom { atom, .. } => {
                let mut vs = BTreeSet::new();
                atom.variables(&mut vs);
                out.extend(vs.into_iter().filter(|v| !bound.contains(v)));
            }
            F::Not(g) => g.collect_free(bound, out),
            F::And(gs) | F::Or(gs) => gs.iter().for_each(|g| g.collect_free(bound, out)),
            F::Exists(v, g) | F::Forall(v, g) => {
                bound.push(v.clone());
                g.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn quantifier_count(&self) -> usize {
        match self {
            F::True | F::False | F::Atom { .. } => 0,
            F::Not(g) => g.quantifier_count(),
            F::And(gs) | F::Or(gs) => gs.iter().map(Self::quantifier_count).sum(),
            F::Exists(_, g) | F::Forall(_, g) => 1 + g.quantifier_count(),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.quantifier_count() == 0
    }

    /// Largest congruence modulus appearing in the formula.
    pub fn max_modulus(&self) -> i64 {
        match self {
            F::Atom {
                atom: Atom::Congruent { modulus, .. },
                ..
            } => *modulus,
            F::True | F::False | F::Atom { .. } => 1,
            F::Not(g) | F::Exists(_, g) | F::Forall(_, g) => g.max_modulus(),
            F::And(gs) | F::Or(gs) => gs.iter().map(Self::max_modulus).max().unwrap_or(1),
        }
    }

    fn rename_free(&self, from: &str, to: &str) -> Self {
        match self {
            F::True | F::False => self.clone(),
            F::Atom { atom, span } => F::Atom {
                atom: atom.rename(from, to),
                span: *span,
            },
            F::Not(g) => F::Not(g.rename_free(from, to).into()),
            F::And(gs) => F::And(gs.iter().map(|g| g.rename_free(from, to)).collect()),
            F::Or(gs) => F::Or(gs.iter().map(|g| g.rename_free(from, to)).collect()),
            F::Exists(v, _) | F::Forall(v, _) if v == from => self.clone(),
            F::Exists(v, g) => F::Exists(v.clone(), g.rename_free(from, to).into()),
            F::Forall(v, g) => F::Forall(v.clone(), g.rename_free(from, to).into()),
        }
    }

    /// Truth value under `env`. Quantifiers range over the interval cut out by
    /// the bounds on the quantified variable that the body states conjunctively;
    /// a quantifier without such bounds is reported as `Unbounded`.
    pub fn eval(&self, env: &mut BTreeMap<String, i64>) -> Result<bool, PresburgerError> {
        Ok(match self {
            F::True => true,
            F::False => false,
            F::Atom { atom, .. } => atom
                .eval(env)
                .ok_or_else(|| PresburgerError::Unbounded(format!("{atom}")))?,
            F::Not(g) => !g.eval(env)?,
            F::And(gs) => {
                for g in gs {
                    if !g.eval(env)? {
                        return Ok(false);
                    }
                }
                true
            }
            F::Or(gs) => {
                for g in gs {
                    if g.eval(env)? {
                        return Ok(true);
                    }
                }
                false
            }
            F::Exists(v, g) | F::Forall(v, g) => {
                let exists = matches!(self, F::Exists(..));
                // forall v g == not exists v (not g)
                let (lo, hi) = g.bounds(v, !exists, env);
                let (Some(lo), Some(hi)) = (lo, hi) else {
                    return Err(PresburgerError::Unbounded(v.clone()));
                };
                let saved = env.get(v).copied();
                let mut found = false;
                for x in lo..=hi {
                    env.insert(v.clone(), x);
                    let r = g.eval(env);
                    let r = match r {
                        Ok(r) => r,
                        Err(e) => {
                            restore(env, v, saved);
                            return Err(e);
                        }
                    };
                    if r == exists {
                        found = true;
                        break;
                    }
                }
                restore(env, v, saved);
                if exists {
                    found
                } else {
                    !found
                }
            }
        })
    }

    /// Interval for `v` implied by the conjunctive part of `self` (or of its
    /// negation), with every other variable read from `env`.
    fn bounds(
        &self,
        v: &str,
        negated: bool,
        env: &BTreeMap<String, i64>,
    ) -> (Option<i64>, Option<i64>) {
        let meet = |a: (Option<i64>, Option<i64>), b: (Option<i64>, Option<i64>)| {
            let lo = match (a.0, b.0) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            };
            let hi = match (a.1, b.1) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            };
            (lo, hi)
        };
        match (self, negated) {
            (F::Not(g), _) => g.bounds(v, !negated, env),
            (F::And(gs), false) | (F::Or(gs), true) => gs
                .iter()
                .fold((None, None), |acc, g| meet(acc, g.bounds(v, negated, env))),
            (
                F::Atom {
                    atom: Atom::Compare { rel, lhs, rhs },
                    ..
                },
                _,
            ) => {
                let t = lhs.sub(rhs);
                let c = t.coeff(v);
                let mut rest = t.clone();
                rest.coeffs.remove(v);
                let (Some(r), true) = (rest.eval(env), c != 0) else {
                    return (None, None);
                };
                let rel = if negated {
                    match rel {
                        Relation::Le => Relation::Gt,
                        Relation::Lt => Relation::Ge,
                        Relation::Ge => Relation::Lt,
                        Relation::Gt => Relation::Le,
                        Relation::Eq => Relation::Ne,
                        Relation::Ne => Relation::Eq,
                    }
                } else {
                    *rel
                };
                // c v + r rel 0
                let le = |k: i64| -> (Option<i64>, Option<i64>) {
                    // c v <= -r + k
                    let b = -r + k;
                    if c > 0 {
                        (None, Some(b.div_euclid(c)))
                    } else {
                        (Some(ceil_div(-b, -c)), None)
                    }
                };
                let ge = |k: i64| -> (Option<i64>, Option<i64>) {
                    // c v >= -r + k
                    let b = -r + k;
                    if c > 0 {
                        (Some(ceil_div(b, c)), None)
                    } else {
                        (None, Some((-b).div_euclid(-c)))
                    }
                };
                match rel {
                    Relation::Le => le(0),
                    Relation::Lt => le(-1),
                    Relation::Ge => ge(0),
                    Relation::Gt => ge(1),
                    Relation::Eq => meet(le(0), ge(0)),
                    Relation::Ne => (None, None),
                }
            }
            _ => (None, None),
        }
    }
}

fn restore(env: &mut BTreeMap<String, i64>, v: &str, saved: Option<i64>) {
    match saved {
        Some(x) => env.insert(v.to_string(), x),
        None => env.remove(v),
    };
}

pub(crate) fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

impl fmt::Display for PresburgerFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, gs: &[F], op: &str, empty: &str| -> fmt::Result {
            if gs.is_empty() {
                return write!(f, "{empty}");
            }
            write!(f, "(")?;
            for (i, g) in gs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{g}")?;
            }
            write!(f, ")")
        };
        match self {
            F::True => write!(f, "true"),
            F::False => write!(f, "false"),
            F::Atom { atom, .. } => write!(f, "{atom}"),
            F::Not(g) => write!(f, "not ({g})"),
            F::And(gs) => join(f, gs, "and", "true"),
            F::Or(gs) => join(f, gs, "or", "false"),
            F::Exists(v, g) => write!(f, "exists {v} ({g})"),
            F::Forall(v, g) => write!(f, "forall {v} ({g})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, i64)]) -> BTreeMap<String, i64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn parse_examples() {
        let f = parse("n >= 0").unwrap();
        assert_eq!(f.free_variables().into_iter().collect::<Vec<_>>(), ["n"]);
        let g = parse("exists k (l = 2*k and 0 <= l)").unwrap();
        assert!(matches!(g, F::Exists(..)));
        assert_eq!(g.free_variables().into_iter().collect::<Vec<_>>(), ["l"]);
        assert!(matches!(
            parse("x*y = 1"),
            Err(PresburgerError::Nonlinear { start: 0, end: 3 })
        ));
        assert!(matches!(
            parse("n >= "),
            Err(PresburgerError::Syntax { .. })
        ));
        assert!(matches!(
            parse("n ≡ 1 mod 0"),
            Err(PresburgerError::Modulus { .. })
        ));
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "0 <= l <= n and n ≡ 1 (mod 3)",
            "forall k (k < 0 or k > n or exists j (2*j = k or 2*j + 1 = k))",
            "not (x != 3) or -(x - 2*y) > 4",
            "l = n mod 2",
            "(n + 1) <= 3 or (n >= 7)",
        ] {
            let f = parse(text).unwrap();
            let g = parse(&f.to_string()).unwrap();
            assert_eq!(f, g, "{text}");
        }
    }

    #[test]
    fn bounded_oracle() {
        let f = parse("exists k (n = 2*k)").unwrap();
        assert!(f.eval(&mut env(&[("n", 6)])).unwrap());
        assert!(!f.eval(&mut env(&[("n", -7)])).unwrap());
        let g = parse("forall k (k < 0 or k > n or k <= 10)").unwrap();
        assert!(g.eval(&mut env(&[("n", 10)])).unwrap());
        assert!(!g.eval(&mut env(&[("n", 11)])).unwrap());
        let h = parse("exists k (k >= n)").unwrap();
        assert!(matches!(
            h.eval(&mut env(&[("n", 0)])),
            Err(PresburgerError::Unbounded(_))
        ));
    }
}
