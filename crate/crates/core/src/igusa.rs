//! Brute-force Igusa data: zero counts and level-set measures of `|f|`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::json::{ser_rational, ser_rationals};
use crate::rings::{RingElement, RingError, RingSpec};
use crate::zeta::{Provenance, ZetaSeries};

/// Default bound on the number of evaluated tuples.
pub const DEFAULT_GRID_CAP: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IgusaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("arity {arity} is smaller than the {vars} variables of the polynomial")]
    Arity { arity: usize, vars: usize },
    #[error("evaluation grid of {0} points exceeds the budget")]
    Budget(u128),
    #[error(transparent)]
    Ring(#[from] RingError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolyExpr {
    Const(i64),
    Var(String),
    Neg(Box<PolyExpr>),
    Add(Box<PolyExpr>, Box<PolyExpr>),
    Sub(Box<PolyExpr>, Box<PolyExpr>),
    Mul(Box<PolyExpr>, Box<PolyExpr>),
    Pow(Box<PolyExpr>, u32),
}

/// An integer polynomial with its variables in alphabetical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolySpec {
    expr: PolyExpr,
    vars: Vec<String>,
}

impl fmt::Display for PolyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyExpr::Const(c) => write!(f, "{c}"),
            PolyExpr::Var(v) => write!(f, "{v}"),
            PolyExpr::Neg(a) => write!(f, "-({a})"),
            PolyExpr::Add(a, b) => write!(f, "({a} + {b})"),
            PolyExpr::Sub(a, b) => write!(f, "({a} - {b})"),
            PolyExpr::Mul(a, b) => write!(f, "{a}*{b}"),
            PolyExpr::Pow(a, e) => write!(f, "{a}^{e}"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T, IgusaError> {
        Err(IgusaError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<PolyExpr, IgusaError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' {
                PolyExpr::Add(lhs.into(), rhs.into())
            } else {
                PolyExpr::Sub(lhs.into(), rhs.into())
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<PolyExpr, IgusaError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = PolyExpr::Mul(lhs.into(), rhs.into());
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<PolyExpr, IgusaError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(PolyExpr::Neg(self.unary()?.into()));
        }
        if self.peek() == Some(b'+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<PolyExpr, IgusaError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return self.err("expected a non-negative integer exponent");
            }
            let e: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| IgusaError::Syntax {
                    pos: start,
                    msg: "exponent too large".into(),
                })?;
            return Ok(PolyExpr::Pow(base.into(), e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<PolyExpr, IgusaError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                s.parse()
                    .map(PolyExpr::Const)
                    .map_err(|_| IgusaError::Syntax {
                        pos: start,
                        msg: "integer too large".into(),
                    })
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Ok(PolyExpr::Var(
                    std::str::from_utf8(&self.src[start..self.pos])
                        .unwrap()
                        .to_string(),
                ))
            }
            Some(_) => self.err("unexpected character"),
            None => self.err("unexpected end of input"),
        }
    }
}

fn collect_vars(e: &PolyExpr, out: &mut BTreeSet<String>) {
    match e {
        PolyExpr::Const(_) => {}
        PolyExpr::Var(v) => {
            out.insert(v.clone());
        }
        PolyExpr::Neg(a) | PolyExpr::Pow(a, _) => collect_vars(a, out),
        PolyExpr::Add(a, b) | PolyExpr::Sub(a, b) | PolyExpr::Mul(a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
    }
}

/// Compiled form: variables replaced by positions.
enum Node {
    Const(i64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Pow(Box<Node>, u32),
}

impl Node {
    fn eval(&self, r: &RingSpec, x: &[RingElement]) -> RingElement {
        match self {
            Node::Const(c) => r.from_int(*c),
            Node::Var(i) => x[*i],
            Node::Neg(a) => r.neg(a.eval(r, x)),
            Node::Add(a, b) => r.add(a.eval(r, x), b.eval(r, x)),
            Node::Sub(a, b) => r.sub(a.eval(r, x), b.eval(r, x)),
            Node::Mul(a, b) => r.mul(a.eval(r, x), b.eval(r, x)),
            Node::Pow(a, e) => r.pow(a.eval(r, x), *e as u64),
        }
    }
}

impl PolySpec {
    pub fn parse(text: &str) -> Result<Self, IgusaError> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let expr = p.expr()?;
        if p.peek().is_some() {
            return p.err("trailing input");
        }
        let mut vars = BTreeSet::new();
        collect_vars(&expr, &mut vars);
        Ok(Self {
            expr,
            vars: vars.into_iter().collect(),
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    fn compile(&self, e: &PolyExpr) -> Node {
        match e {
            PolyExpr::Const(c) => Node::Const(*c),
            PolyExpr::Var(v) => Node::Var(self.vars.binary_search(v).expect("collected variable")),
            PolyExpr::Neg(a) => Node::Neg(self.compile(a).into()),
            PolyExpr::Add(a, b) => Node::Add(self.compile(a).into(), self.compile(b).into()),
            PolyExpr::Sub(a, b) => Node::Sub(self.compile(a).into(), self.compile(b).into()),
            PolyExpr::Mul(a, b) => Node::Mul(self.compile(a).into(), self.compile(b).into()),
            PolyExpr::Pow(a, k) => Node::Pow(self.compile(a).into(), *k),
        }
    }

    /// Evaluates at a point whose first coordinates bind the sorted variables.
    pub fn eval(&self, ring: &RingSpec, x: &[RingElement]) -> RingElement {
        self.compile(&self.expr).eval(ring, x)
    }
}

impl fmt::Display for PolySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

fn check_grid(ring: &RingSpec, arity: usize, f: &PolySpec, cap: u64) -> Result<u64, IgusaError> {
    if arity < f.vars.len() {
        return Err(IgusaError::Arity {
            arity,
            vars: f.vars.len(),
        });
    }
    let pts = (ring.size() as u128).pow(arity as u32);
    if pts > cap as u128 {
        return Err(IgusaError::Budget(pts));
    }
    Ok(pts as u64)
}

/// Histogram of `v(f(x))` over `x in R^d`; entry `k` counts points with `v = k`.
/// Only the variables of `f` are enumerated; free coordinates multiply the counts.
fn valuation_histogram(
    f: &PolySpec,
    ring: &RingSpec,
    arity: usize,
    cap: u64,
) -> Result<Vec<u64>, IgusaError> {
    check_grid(ring, arity, f, cap)?;
    ring.valuation(ring.zero())?;
    let node = f.compile(&f.expr);
    let k = f.vars.len();
    let size = ring.size();
    let free = size.pow((arity - k) as u32);
    let level = ring.level() as usize;
    let outer = if k == 0 { 1 } else { size };
    let hist = (0..outer)
        .into_par_iter()
        .map(|first| {
            let mut h = vec![0u64; level + 1];
            let mut x = vec![RingElement(0); k];
            if k > 0 {
                x[0] = RingElement(first as u32);
            }
            loop {
                let v = ring.valuation(node.eval(ring, &x)).expect("local ring") as usize;
                h[v] += 1;
                let mut i = 1;
                loop {
                    if i >= k {
                        return h;
                    }
                    x[i].0 += 1;
                    if (x[i].0 as u64) < size {
                        break;
                    }
                    x[i].0 = 0;
                    i += 1;
                }
            }
        })
        .reduce(
            || vec![0u64; level + 1],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        );
    Ok(hist.into_iter().map(|c| c * free).collect())
}

/// `N_m = #{x in (o/p^m)^d : f(x) = 0}` at the ring's level.
pub fn zero_count(
    f: &PolySpec,
    ring: &RingSpec,
    arity: usize,
    cap: u64,
) -> Result<u64, IgusaError> {
    let h = valuation_histogram(f, ring, arity, cap)?;
    Ok(*h.last().expect("non-empty histogram"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelSetMeasures {
    pub q: u64,
    pub arity: usize,
    pub levels: usize,
    /// `N_n` for `n = 0..=M`.
    pub zero_counts: Vec<String>,
    /// `mu(v(f) = n)` for `n < M`.
    #[serde(serialize_with = "ser_rationals")]
    pub measures: Vec<BigRational>,
    /// `mu(v(f) >= M) = q^{-Md} N_M`.
    #[serde(serialize_with = "ser_rational")]
    pub tail: BigRational,
}

impl LevelSetMeasures {
    pub fn total(&self) -> BigRational {
        self.measures.iter().fold(self.tail.clone(), |a, b| a + b)
    }
}

/// Level-set measures from one enumeration at level `M` of the ring family:
/// `#{v >= n}` at level `M` equals `N_n q^{(M-n)d}`.
pub fn level_set_measures(
    f: &PolySpec,
    ring: &RingSpec,
    depth: usize,
    arity: usize,
    cap: u64,
) -> Result<LevelSetMeasures, IgusaError> {
    let top = ring.at_level(depth.max(1) as u32)?;
    let hist = valuation_histogram(f, &top, arity, cap)?;
    let q = ring.q();
    let m = depth;
    let total = BigRational::from_integer(BigInt::from(top.size()).pow(arity as u32));
    let mut at_least = vec![0u64; m + 1];
    for n in (0..=m).rev() {
        at_least[n] = hist[n..].iter().sum();
    }
    let zero_counts = (0..=m)
        .map(|n| {
            let scale = BigInt::from(q).pow(((m - n) * arity) as u32);
            (BigInt::from(at_least[n]) / scale).to_string()
        })
        .collect();
    let measures = (0..m)
        .map(|n| BigRational::new(hist[n].into(), BigInt::one()) / &total)
        .collect();
    let tail = BigRational::from_integer(at_least[m].into()) / &total;
    Ok(LevelSetMeasures {
        q,
        arity,
        levels: m,
        zero_counts,
        measures,
        tail,
    })
}

/// `sum_{n < M} mu(v(f) = n) t^n` with the tail bound.
pub fn igusa_truncation(
    f: &PolySpec,
    ring: &RingSpec,
    depth: usize,
    arity: usize,
    cap: u64,
) -> Result<(ZetaSeries, BigRational), IgusaError> {
    let l = level_set_measures(f, ring, depth, arity, cap)?;
    Ok((
        ZetaSeries::new(l.q, l.measures, Provenance::Enumerated),
        l.tail,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rings::{make_ring, RingKind};
    use crate::zeta::heisenberg;

    fn z(p: u64, m: u32) -> RingSpec {
        make_ring(RingKind::MixedChar, p, 1, m).unwrap()
    }

    #[test]
    fn parsing() {
        let f = PolySpec::parse("a*b - c*d").unwrap();
        assert_eq!(f.variables(), ["a", "b", "c", "d"]);
        let g = PolySpec::parse("-(x + 2)^3 + y*x").unwrap();
        let r = z(5, 2);
        let x = [r.from_int(1), r.from_int(4)];
        assert_eq!(g.eval(&r, &x), r.from_int(-27 + 4));
        assert!(matches!(
            PolySpec::parse("a + * b"),
            Err(IgusaError::Syntax { pos: 4, .. })
        ));
        assert!(PolySpec::parse("(a").is_err());
        assert!(PolySpec::parse("a b").is_err());
    }

    #[test]
    fn zero_counts() {
        let f = PolySpec::parse("a*b - c*d").unwrap();
        assert_eq!(zero_count(&f, &z(2, 1), 4, DEFAULT_GRID_CAP).unwrap(), 10);
        assert_eq!(
            zero_count(
                &PolySpec::parse("x").unwrap(),
                &z(3, 2),
                1,
                DEFAULT_GRID_CAP
            )
            .unwrap(),
            1
        );
        assert_eq!(
            zero_count(
                &PolySpec::parse("1").unwrap(),
                &z(3, 2),
                2,
                DEFAULT_GRID_CAP
            )
            .unwrap(),
            0
        );
        assert!(matches!(
            zero_count(&f, &z(2, 1), 3, DEFAULT_GRID_CAP),
            Err(IgusaError::Arity { .. })
        ));
        assert!(matches!(
            zero_count(&f, &z(3, 3), 4, 1000),
            Err(IgusaError::Budget(_))
        ));
    }

    #[test]
    fn measures_partition_unity() {
        let f = PolySpec::parse("a*b - c*d").unwrap();
        let l = level_set_measures(&f, &z(2, 1), 3, 4, DEFAULT_GRID_CAP).unwrap();
        assert_eq!(l.total(), BigRational::one());
        assert_eq!(
            BigRational::one() - &l.measures[0],
            BigRational::new(10.into(), 16.into())
        );
        let x = PolySpec::parse("x").unwrap();
        let l = level_set_measures(&x, &z(3, 1), 3, 1, DEFAULT_GRID_CAP).unwrap();
        for (n, mu) in l.measures.iter().enumerate() {
            assert_eq!(
                *mu,
                BigRational::new(2.into(), BigInt::from(3).pow(n as u32 + 1))
            );
        }
    }

    #[test]
    fn heisenberg_integrand_matches_closed_form() {
        let f = PolySpec::parse("a*b - c*d").unwrap();
        let (s, _) = igusa_truncation(&f, &z(2, 1), 4, 4, DEFAULT_GRID_CAP).unwrap();
        assert_eq!(
            s.coefficients,
            heisenberg::igusa_factor()
                .expand(2, 4)
                .unwrap()
                .coefficients
        );
    }
}
