//! Multivariate Laurent polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::matrix::Carrier;

/// Sorted `(variable, exponent)` pairs with nonzero exponents.
pub type Monomial = Vec<(u32, i32)>;

#[derive(Clone, PartialEq, Eq, Default)]
pub struct LaurentPoly {
    terms: BTreeMap<Monomial, BigRational>,
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push(b[j]);
            j += 1;
        } else {
            let e = a[i].1 + b[j].1;
            if e != 0 {
                out.push((a[i].0, e));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

impl LaurentPoly {
    pub fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Self { terms }
    }

    pub fn int(v: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn monomial(c: BigRational, mono: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(mono, c);
        }
        Self { terms }
    }

    /// The variable `x_var` raised to `exp`.
    pub fn var_pow(var: u32, exp: i32) -> Self {
        let mono = if exp == 0 {
            Vec::new()
        } else {
            vec![(var, exp)]
        };
        Self::monomial(BigRational::one(), mono)
    }

    pub fn var(var: u32) -> Self {
        Self::var_pow(var, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            let entry = terms.entry(m.clone()).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(m);
            }
        }
        Self { terms }
    }

    pub fn neg(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = mono_mul(ma, mb);
                let entry = terms.entry(m).or_insert_with(BigRational::zero);
                *entry += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Self { terms }
    }

    /// Only monomials are units.
    pub fn inverse(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        let inv_m: Monomial = m.iter().map(|&(v, e)| (v, -e)).collect();
        Some(Self::monomial(c.recip(), inv_m))
    }

    pub fn substitute_eval(&self, values: &BTreeMap<u32, BigRational>) -> Option<BigRational> {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in m {
                let x = values.get(&v)?;
                if x.is_zero() && e < 0 {
                    return None;
                }
                let p = num_traits::pow(x.clone(), e.unsigned_abs() as usize);
                t *= if e < 0 { p.recip() } else { p };
            }
            acc += t;
        }
        Some(acc)
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            let a = c.abs();
            if !a.is_one() || m.is_empty() {
                write!(f, "{a}")?;
            }
            for &(v, e) in m {
                if e == 1 {
                    write!(f, "x{v}")?;
                } else {
                    write!(f, "x{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

/// The carrier `Q[x_0^{±1}, x_1^{±1}, ...]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LaurentRing;

impl Carrier for LaurentRing {
    type Elem = LaurentPoly;

    fn zero(&self) -> LaurentPoly {
        LaurentPoly::default()
    }
    fn one(&self) -> LaurentPoly {
        LaurentPoly::int(1)
    }
    fn from_int(&self, v: i64) -> LaurentPoly {
        LaurentPoly::int(v)
    }
    fn add(&self, a: &LaurentPoly, b: &LaurentPoly) -> LaurentPoly {
        a.add(b)
    }
    fn mul(&self, a: &LaurentPoly, b: &LaurentPoly) -> LaurentPoly {
        a.mul(b)
    }
    fn neg(&self, a: &LaurentPoly) -> LaurentPoly {
        a.neg()
    }
    fn inverse(&self, a: &LaurentPoly) -> Option<LaurentPoly> {
        a.inverse()
    }
    fn is_zero(&self, a: &LaurentPoly) -> bool {
        a.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let x = LaurentPoly::var(0);
        let y = LaurentPoly::var(1);
        let s = x.add(&y);
        let sq = s.mul(&s);
        assert_eq!(sq.num_terms(), 3);
        let diff = sq.add(&x.mul(&x).neg()).add(&y.mul(&y).neg());
        assert_eq!(diff, x.mul(&y).mul(&LaurentPoly::int(2)));
        let xi = x.inverse().unwrap();
        assert_eq!(x.mul(&xi), LaurentPoly::int(1));
        assert!(s.inverse().is_none());
        assert_eq!(format!("{}", LaurentPoly::var_pow(2, -3)), "x2^-3");
    }

    #[test]
    fn evaluation() {
        let x = LaurentPoly::var(0);
        let p = x.add(&LaurentPoly::var_pow(0, -1));
        let mut env = BTreeMap::new();
        env.insert(0, BigRational::from_integer(2.into()));
        assert_eq!(
            p.substitute_eval(&env).unwrap(),
            BigRational::new(5.into(), 2.into())
        );
    }
}
