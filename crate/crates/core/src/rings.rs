//! Finite quotient rings `o/p^m` of unramified complete discrete valuation
//! rings, in both characteristics, plus composite `Z/n`.
//!
//! Elements are stored as their canonical index: the little-endian base-`p`
//! digit string of the element read as an integer. For a Galois ring
//! `Z[x]/(p^m, h(x))` the digits are the base-`p` expansions of the `f`
//! coefficients (each `m` digits long, constant coefficient first); for
//! `F_q[t]/t^m` they are the `F_p`-coordinates of the `m` coefficients of
//! `t^0, t^1, ...` (each `f` digits long). Composite `Z/n` uses the residue
//! itself.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rings up to this size carry precomputed addition and multiplication tables.
const TABLE_LIMIT: u64 = 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("level must be at least 1 (got {0})")]
    InvalidLevel(u32),
    #[error("residue degree must be at least 1 (got {0})")]
    InvalidDegree(u32),
    #[error("composite modulus must be at least 2 (got {0})")]
    InvalidModulus(u64),
    #[error("no irreducible modulus of degree {f} over F_{p} found")]
    NoIrreducibleModulus { p: u64, f: u32 },
    #[error("ring too large: {0} elements")]
    TooLarge(u128),
    #[error("valuation is undefined on the composite ring Z/{0}")]
    ValuationUndefined(u64),
    #[error("element {0} is not a unit")]
    NotAUnit(u32),
    #[error("cannot project from level {from} to level {to}")]
    LevelMismatch { from: u32, to: u32 },
    #[error("rings are not in the same family")]
    FamilyMismatch,
    #[error("invalid ring literal `{0}`: {1}")]
    Literal(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RingKind {
    /// Galois ring `Z[x]/(p^m, h)`, the level-`m` quotient of the unramified
    /// degree-`f` extension of `Z_p`.
    MixedChar,
    /// `F_q[t]/t^m`.
    EqualChar,
    /// `Z/n` for arbitrary `n >= 2`.
    Composite,
}

/// A ring element, identified by its canonical index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RingElement(pub u32);

impl RingElement {
    pub fn index(self) -> u32 {
        self.0
    }
}

struct Tables {
    add: Vec<u32>,
    mul: Vec<u32>,
    neg: Vec<u32>,
}

/// A finite ring together with its arithmetic.
pub struct RingSpec {
    kind: RingKind,
    p: u64,
    f: u32,
    m: u32,
    n: u64,
    /// Monic modulus `h`, coefficients in `[0, p)`, constant term first, length `f + 1`.
    modulus: Vec<u64>,
    size: u64,
    q: u64,
    tables: Option<Tables>,
}

impl fmt::Debug for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingSpec({})", self.literal())
    }
}

impl Clone for RingSpec {
    fn clone(&self) -> Self {
        match self.kind {
            RingKind::Composite => make_composite(self.n).expect("valid ring"),
            kind => make_ring(kind, self.p, self.f, self.m).expect("valid ring"),
        }
    }
}

impl PartialEq for RingSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.p == other.p
            && self.f == other.f
            && self.m == other.m
            && self.n == other.n
            && self.modulus == other.modulus
    }
}

impl Eq for RingSpec {}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn checked_pow(base: u64, exp: u32) -> Result<u64, RingError> {
    let v = (base as u128).pow(exp);
    if v > u32::MAX as u128 {
        return Err(RingError::TooLarge(v));
    }
    Ok(v as u64)
}

/// Builds `o/p^m` for the unramified extension of degree `f` (mixed
/// characteristic) or `F_{p^f}[t]/t^m` (equal characteristic).
pub fn make_ring(kind: RingKind, p: u64, f: u32, m: u32) -> Result<RingSpec, RingError> {
    if kind == RingKind::Composite {
        return Err(RingError::Literal(
            format!("{kind:?}"),
            "use make_composite for Z/n".into(),
        ));
    }
    if !is_prime(p) {
        return Err(RingError::NotPrime(p));
    }
    if m < 1 {
        return Err(RingError::InvalidLevel(m));
    }
    if f < 1 {
        return Err(RingError::InvalidDegree(f));
    }
    let q = checked_pow(p, f)?;
    let size = checked_pow(q, m)?;
    let modulus = find_modulus(p, f)?;
    let mut ring = RingSpec {
        kind,
        p,
        f,
        m,
        n: 0,
        modulus,
        size,
        q,
        tables: None,
    };
    ring.build_tables();
    Ok(ring)
}

pub fn make_composite(n: u64) -> Result<RingSpec, RingError> {
    if n < 2 {
        return Err(RingError::InvalidModulus(n));
    }
    if n > u32::MAX as u64 {
        return Err(RingError::TooLarge(n as u128));
    }
    let mut ring = RingSpec {
        kind: RingKind::Composite,
        p: 0,
        f: 1,
        m: 1,
        n,
        modulus: vec![0, 1],
        size: n,
        q: n,
        tables: None,
    };
    ring.build_tables();
    Ok(ring)
}

/// Lowest monic degree-`f` polynomial over `F_p` that is irreducible, where
/// candidates are ordered by the integer whose base-`p` digits are the
/// non-leading coefficients (constant term least significant).
fn find_modulus(p: u64, f: u32) -> Result<Vec<u64>, RingError> {
    if f == 1 {
        return Ok(vec![0, 1]);
    }
    let count = p.pow(f);
    for code in 0..count {
        let mut poly = Vec::with_capacity(f as usize + 1);
        let mut c = code;
        for _ in 0..f {
            poly.push(c % p);
            c /= p;
        }
        poly.push(1);
        if is_irreducible_mod_p(&poly, p) {
            return Ok(poly);
        }
    }
    Err(RingError::NoIrreducibleModulus { p, f })
}

fn poly_rem_mod_p(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    // b is monic
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = *r.last().unwrap() % p;
        let shift = r.len() - 1 - db;
        if lead != 0 {
            for (i, &bc) in b.iter().enumerate() {
                let idx = i + shift;
                r[idx] = (r[idx] + p - (lead * bc) % p) % p;
            }
        }
        r.pop();
    }
    r
}

fn is_irreducible_mod_p(poly: &[u64], p: u64) -> bool {
    let deg = poly.len() - 1;
    // trial division by all monic polynomials of degree 1..=deg/2
    for d in 1..=deg / 2 {
        let count = p.pow(d as u32);
        for code in 0..count {
            let mut div = Vec::with_capacity(d + 1);
            let mut c = code;
            for _ in 0..d {
                div.push(c % p);
                c /= p;
            }
            div.push(1);
            if poly_rem_mod_p(poly, &div, p).iter().all(|&x| x == 0) {
                return false;
            }
        }
    }
    true
}

impl RingSpec {
    pub fn kind(&self) -> RingKind {
        self.kind
    }
    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn f(&self) -> u32 {
        self.f
    }
    pub fn level(&self) -> u32 {
        self.m
    }
    /// Composite modulus (0 for local kinds).
    pub fn composite_modulus(&self) -> u64 {
        self.n
    }
    /// Residue field size `q = p^f` (for composite rings, `n`).
    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn size(&self) -> u64 {
        self.size
    }
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }
    pub fn is_local(&self) -> bool {
        self.kind != RingKind::Composite
    }

    /// Same kind, characteristic, residue degree and modulus; the level may differ.
    pub fn same_family(&self, other: &RingSpec) -> bool {
        self.kind == other.kind
            && self.p == other.p
            && self.f == other.f
            && self.modulus == other.modulus
            && (self.kind != RingKind::Composite || self.n == other.n)
    }

    /// The same family at another level.
    pub fn at_level(&self, m: u32) -> Result<RingSpec, RingError> {
        match self.kind {
            RingKind::Composite => Err(RingError::ValuationUndefined(self.n)),
            kind => make_ring(kind, self.p, self.f, m),
        }
    }

    /// Literal in the CLI syntax, e.g. `zq:p=3,f=1,m=2`.
    pub fn literal(&self) -> String {
        match self.kind {
            RingKind::MixedChar => format!("zq:p={},f={},m={}", self.p, self.f, self.m),
            RingKind::EqualChar => format!("fqt:p={},f={},m={}", self.p, self.f, self.m),
            RingKind::Composite => format!("zn:n={}", self.n),
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = RingElement> {
        (0..self.size as u32).map(RingElement)
    }

    pub fn zero(&self) -> RingElement {
        RingElement(0)
    }

    pub fn one(&self) -> RingElement {
        RingElement(1 % self.size as u32)
    }

    /// Image of an integer under `Z -> R`.
    pub fn from_int(&self, v: i64) -> RingElement {
        let char_ = match self.kind {
            RingKind::MixedChar => self.p.pow(self.m),
            RingKind::EqualChar => self.p,
            RingKind::Composite => self.n,
        };
        let r = v.rem_euclid(char_ as i64) as u64;
        // integers sit in the constant coefficient, which occupies the lowest digits
        RingElement(r as u32)
    }

    pub fn element(&self, index: u32) -> Option<RingElement> {
        ((index as u64) < self.size).then_some(RingElement(index))
    }

    /// Little-endian base-`p` digits (base-`n` single digit for composite rings).
    pub fn digits(&self, a: RingElement) -> Vec<u64> {
        match self.kind {
            RingKind::Composite => vec![a.0 as u64],
            _ => {
                let len = (self.f * self.m) as usize;
                let mut out = Vec::with_capacity(len);
                let mut v = a.0 as u64;
                for _ in 0..len {
                    out.push(v % self.p);
                    v /= self.p;
                }
                out
            }
        }
    }

    pub fn from_digits(&self, digits: &[u64]) -> RingElement {
        match self.kind {
            RingKind::Composite => {
                RingElement((digits.first().copied().unwrap_or(0) % self.n) as u32)
            }
            _ => {
                let mut v = 0u64;
                for &d in digits.iter().rev() {
                    v = v * self.p + d % self.p;
                }
                RingElement(v as u32)
            }
        }
    }

    /// Digit string, least significant digit first, e.g. `"1021"`.
    pub fn encode(&self, a: RingElement) -> String {
        match self.kind {
            RingKind::Composite => a.0.to_string(),
            _ => self
                .digits(a)
                .iter()
                .map(|d| std::char::from_digit(*d as u32, 36).unwrap())
                .collect(),
        }
    }

    pub fn decode(&self, s: &str) -> Option<RingElement> {
        match self.kind {
            RingKind::Composite => s
                .parse::<u64>()
                .ok()
                .filter(|&v| v < self.n)
                .map(|v| RingElement(v as u32)),
            _ => {
                if s.len() != (self.f * self.m) as usize {
                    return None;
                }
                let mut digits = Vec::with_capacity(s.len());
                for ch in s.chars() {
                    let d = ch.to_digit(36)? as u64;
                    if d >= self.p {
                        return None;
                    }
                    digits.push(d);
                }
                Some(self.from_digits(&digits))
            }
        }
    }

    // --- coefficient views -------------------------------------------------

    /// Mixed characteristic: coefficients in `Z/p^m` of `1, x, ..., x^{f-1}`.
    fn galois_coeffs(&self, a: RingElement) -> Vec<u64> {
        let pm = self.p.pow(self.m);
        let mut v = a.0 as u64;
        (0..self.f)
            .map(|_| {
                let c = v % pm;
                v /= pm;
                c
            })
            .collect()
    }

    fn from_galois_coeffs(&self, coeffs: &[u64]) -> RingElement {
        let pm = self.p.pow(self.m);
        let mut v = 0u64;
        for &c in coeffs.iter().rev() {
            v = v * pm + c % pm;
        }
        RingElement(v as u32)
    }

    /// Equal characteristic: coefficients (as `F_q` indices) of `t^0..t^{m-1}`.
    fn series_coeffs(&self, a: RingElement) -> Vec<u64> {
        let mut v = a.0 as u64;
        (0..self.m)
            .map(|_| {
                let c = v % self.q;
                v /= self.q;
                c
            })
            .collect()
    }

    fn from_series_coeffs(&self, coeffs: &[u64]) -> RingElement {
        let mut v = 0u64;
        for &c in coeffs.iter().rev() {
            v = v * self.q + c;
        }
        RingElement(v as u32)
    }

    /// Multiplication of polynomials with coefficients mod `modulo`, reduced
    /// modulo the monic `h`.
    fn poly_mul_mod(&self, a: &[u64], b: &[u64], modulo: u64) -> Vec<u64> {
        let f = self.f as usize;
        let mut prod = vec![0u128; 2 * f - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u128 * y as u128) % modulo as u128;
            }
        }
        for k in (f..prod.len()).rev() {
            let lead = prod[k];
            if lead == 0 {
                continue;
            }
            prod[k] = 0;
            for (i, &h) in self.modulus[..f].iter().enumerate() {
                let idx = k - f + i;
                let sub = lead * h as u128 % modulo as u128;
                prod[idx] = (prod[idx] + modulo as u128 - sub) % modulo as u128;
            }
        }
        prod.truncate(f);
        prod.into_iter().map(|x| x as u64).collect()
    }

    fn fq_digits(&self, c: u64) -> Vec<u64> {
        let mut v = c;
        (0..self.f)
            .map(|_| {
                let d = v % self.p;
                v /= self.p;
                d
            })
            .collect()
    }

    fn fq_index(&self, digits: &[u64]) -> u64 {
        digits.iter().rev().fold(0, |acc, &d| acc * self.p + d)
    }

    fn fq_add(&self, a: u64, b: u64) -> u64 {
        let da = self.fq_digits(a);
        let db = self.fq_digits(b);
        let s: Vec<u64> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        self.fq_index(&s)
    }

    fn fq_mul(&self, a: u64, b: u64) -> u64 {
        let prod = self.poly_mul_mod(&self.fq_digits(a), &self.fq_digits(b), self.p);
        self.fq_index(&prod)
    }

    fn slow_add(&self, a: RingElement, b: RingElement) -> RingElement {
        match self.kind {
            RingKind::Composite => RingElement(((a.0 as u64 + b.0 as u64) % self.n) as u32),
            RingKind::MixedChar => {
                let pm = self.p.pow(self.m);
                let s: Vec<u64> = self
                    .galois_coeffs(a)
                    .iter()
                    .zip(self.galois_coeffs(b))
                    .map(|(x, y)| (x + y) % pm)
                    .collect();
                self.from_galois_coeffs(&s)
            }
            RingKind::EqualChar => {
                let s: Vec<u64> = self
                    .series_coeffs(a)
                    .iter()
                    .zip(self.series_coeffs(b))
                    .map(|(&x, y)| self.fq_add(x, y))
                    .collect();
                self.from_series_coeffs(&s)
            }
        }
    }

    fn slow_mul(&self, a: RingElement, b: RingElement) -> RingElement {
        match self.kind {
            RingKind::Composite => RingElement(((a.0 as u64 * b.0 as u64) % self.n) as u32),
            RingKind::MixedChar => {
                let pm = self.p.pow(self.m);
                let prod = self.poly_mul_mod(&self.galois_coeffs(a), &self.galois_coeffs(b), pm);
                self.from_galois_coeffs(&prod)
            }
            RingKind::EqualChar => {
                let ca = self.series_coeffs(a);
                let cb = self.series_coeffs(b);
                let m = self.m as usize;
                let mut out = vec![0u64; m];
                for i in 0..m {
                    if ca[i] == 0 {
                        continue;
                    }
                    for j in 0..m - i {
                        let t = self.fq_mul(ca[i], cb[j]);
                        out[i + j] = self.fq_add(out[i + j], t);
                    }
                }
                self.from_series_coeffs(&out)
            }
        }
    }

    fn slow_neg(&self, a: RingElement) -> RingElement {
        match self.kind {
            RingKind::Composite => RingElement(((self.n - a.0 as u64) % self.n) as u32),
            RingKind::MixedChar => {
                let pm = self.p.pow(self.m);
                let c: Vec<u64> = self
                    .galois_coeffs(a)
                    .iter()
                    .map(|&x| (pm - x) % pm)
                    .collect();
                self.from_galois_coeffs(&c)
            }
            // characteristic p: negate every base-p digit
            RingKind::EqualChar => {
                let neg: Vec<u64> = self
                    .digits(a)
                    .iter()
                    .map(|&d| (self.p - d) % self.p)
                    .collect();
                self.from_digits(&neg)
            }
        }
    }

    fn build_tables(&mut self) {
        if self.size > TABLE_LIMIT {
            return;
        }
        let n = self.size as usize;
        let mut add = vec![0u32; n * n];
        let mut mul = vec![0u32; n * n];
        let mut neg = vec![0u32; n];
        for a in 0..n {
            neg[a] = self.slow_neg(RingElement(a as u32)).0;
            for b in 0..n {
                add[a * n + b] = self
                    .slow_add(RingElement(a as u32), RingElement(b as u32))
                    .0;
                mul[a * n + b] = self
                    .slow_mul(RingElement(a as u32), RingElement(b as u32))
                    .0;
            }
        }
        self.tables = Some(Tables { add, mul, neg });
    }

    // --- arithmetic --------------------------------------------------------

    #[inline]
    pub fn add(&self, a: RingElement, b: RingElement) -> RingElement {
        match &self.tables {
            Some(t) => RingElement(t.add[a.0 as usize * self.size as usize + b.0 as usize]),
            None => self.slow_add(a, b),
        }
    }

    #[inline]
    pub fn mul(&self, a: RingElement, b: RingElement) -> RingElement {
        match &self.tables {
            Some(t) => RingElement(t.mul[a.0 as usize * self.size as usize + b.0 as usize]),
            None => self.slow_mul(a, b),
        }
    }

    #[inline]
    pub fn neg(&self, a: RingElement) -> RingElement {
        match &self.tables {
            Some(t) => RingElement(t.neg[a.0 as usize]),
            None => self.slow_neg(a),
        }
    }

    #[inline]
    pub fn sub(&self, a: RingElement, b: RingElement) -> RingElement {
        self.add(a, self.neg(b))
    }

    pub fn pow(&self, a: RingElement, mut e: u64) -> RingElement {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Truncated valuation: the largest `k <= m` with `a` in `p^k R`; `m` for zero.
    pub fn valuation(&self, a: RingElement) -> Result<u32, RingError> {
        match self.kind {
            RingKind::Composite => Err(RingError::ValuationUndefined(self.n)),
            RingKind::MixedChar => Ok(self
                .galois_coeffs(a)
                .iter()
                .map(|&c| p_adic_valuation(c, self.p, self.m))
                .min()
                .unwrap_or(self.m)),
            RingKind::EqualChar => Ok(self
                .series_coeffs(a)
                .iter()
                .position(|&c| c != 0)
                .map(|k| k as u32)
                .unwrap_or(self.m)),
        }
    }

    pub fn is_unit(&self, a: RingElement) -> bool {
        match self.kind {
            RingKind::Composite => num_integer::gcd(a.0 as u64, self.n) == 1,
            _ => self.valuation(a).map(|v| v == 0).unwrap_or(false),
        }
    }

    pub fn units(&self) -> Vec<RingElement> {
        self.elements().filter(|&a| self.is_unit(a)).collect()
    }

    pub fn unit_count(&self) -> u64 {
        match self.kind {
            RingKind::Composite => (0..self.n)
                .filter(|&a| num_integer::gcd(a, self.n) == 1)
                .count() as u64,
            _ => self.size - self.size / self.q,
        }
    }

    pub fn invert(&self, a: RingElement) -> Result<RingElement, RingError> {
        if !self.is_unit(a) {
            return Err(RingError::NotAUnit(a.0));
        }
        match self.kind {
            RingKind::Composite => {
                let (g, x, _) = ext_gcd(a.0 as i128, self.n as i128);
                debug_assert_eq!(g, 1);
                Ok(RingElement(x.rem_euclid(self.n as i128) as u32))
            }
            _ => Ok(self.pow(a, self.unit_count() - 1)),
        }
    }

    /// The uniformizer: `p` in mixed characteristic, `t` in equal characteristic.
    pub fn uniformizer(&self) -> Result<RingElement, RingError> {
        match self.kind {
            RingKind::Composite => Err(RingError::ValuationUndefined(self.n)),
            RingKind::MixedChar => Ok(self.from_int(self.p as i64)),
            RingKind::EqualChar => {
                if self.m == 1 {
                    Ok(self.zero())
                } else {
                    Ok(RingElement(self.q as u32))
                }
            }
        }
    }

    /// A generating set of the additive group (the `Z`-module basis elements).
    pub fn additive_generators(&self) -> Vec<RingElement> {
        match self.kind {
            RingKind::Composite => vec![self.one()],
            RingKind::MixedChar => {
                let pm = self.p.pow(self.m);
                (0..self.f).map(|i| RingElement(pm.pow(i) as u32)).collect()
            }
            RingKind::EqualChar => {
                let mut gens = Vec::new();
                for j in 0..self.m {
                    for i in 0..self.f {
                        gens.push(RingElement((self.q.pow(j) * self.p.pow(i)) as u32));
                    }
                }
                gens
            }
        }
    }

    /// Reduction modulo `p^k`, landing in `target` (the same family at level `k`).
    pub fn project(&self, a: RingElement, target: &RingSpec) -> Result<RingElement, RingError> {
        if self.kind == RingKind::Composite {
            if target.kind != RingKind::Composite || self.n % target.n != 0 {
                return Err(RingError::FamilyMismatch);
            }
            return Ok(RingElement((a.0 as u64 % target.n) as u32));
        }
        if !self.same_family(target) {
            return Err(RingError::FamilyMismatch);
        }
        if target.m > self.m {
            return Err(RingError::LevelMismatch {
                from: self.m,
                to: target.m,
            });
        }
        Ok(self.project_unchecked(a, target.m))
    }

    /// Reduction to level `k <= m` without family checks.
    #[inline]
    pub fn project_unchecked(&self, a: RingElement, k: u32) -> RingElement {
        match self.kind {
            RingKind::EqualChar => RingElement((a.0 as u64 % self.q.pow(k)) as u32),
            RingKind::MixedChar => {
                if self.f == 1 {
                    RingElement((a.0 as u64 % self.p.pow(k)) as u32)
                } else {
                    let pk = self.p.pow(k);
                    let c: Vec<u64> = self.galois_coeffs(a).iter().map(|&x| x % pk).collect();
                    let mut v = 0u64;
                    for &x in c.iter().rev() {
                        v = v * pk + x;
                    }
                    RingElement(v as u32)
                }
            }
            RingKind::Composite => a,
        }
    }
}

fn p_adic_valuation(c: u64, p: u64, m: u32) -> u32 {
    if c == 0 {
        return m;
    }
    let mut v = 0;
    let mut x = c;
    while x % p == 0 && v < m {
        x /= p;
        v += 1;
    }
    v
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// The explicit isomorphism `Z/(n1 n2) -> Z/n1 x Z/n2` and its inverse, for
/// coprime `n1`, `n2`.
pub struct CrtSplit {
    pub whole: RingSpec,
    pub left: RingSpec,
    pub right: RingSpec,
    /// `e1 = 1 mod n1, 0 mod n2`; `e2` symmetric.
    idempotents: (u64, u64),
}

impl CrtSplit {
    pub fn new(n1: u64, n2: u64) -> Result<Self, RingError> {
        if num_integer::gcd(n1, n2) != 1 {
            return Err(RingError::Literal(
                format!("{n1}x{n2}"),
                "factors are not coprime".into(),
            ));
        }
        let whole = make_composite(n1 * n2)?;
        let left = make_composite(n1)?;
        let right = make_composite(n2)?;
        let n = n1 * n2;
        let (_, x, _) = ext_gcd(n2 as i128, n1 as i128);
        let e1 = ((x.rem_euclid(n1 as i128) as u64) * n2) % n;
        let (_, y, _) = ext_gcd(n1 as i128, n2 as i128);
        let e2 = ((y.rem_euclid(n2 as i128) as u64) * n1) % n;
        Ok(Self {
            whole,
            left,
            right,
            idempotents: (e1, e2),
        })
    }

    pub fn split(&self, a: RingElement) -> (RingElement, RingElement) {
        let v = a.0 as u64;
        (
            RingElement((v % self.left.n) as u32),
            RingElement((v % self.right.n) as u32),
        )
    }

    pub fn join(&self, a: RingElement, b: RingElement) -> RingElement {
        let n = self.whole.n as u128;
        let (e1, e2) = self.idempotents;
        let v = (a.0 as u128 * e1 as u128 + b.0 as u128 * e2 as u128) % n;
        RingElement(v as u32)
    }
}

/// Parses `zq:p=3,f=1,m=2`, `fqt:p=3,f=1,m=2` or `zn:n=12`.
impl FromStr for RingSpec {
    type Err = RingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| RingError::Literal(s.to_string(), msg.to_string());
        let (head, rest) = s
            .split_once(':')
            .ok_or_else(|| bad("expected `kind:key=value,...`"))?;
        let mut p = None;
        let mut f = 1u32;
        let mut m = None;
        let mut n = None;
        for kv in rest.split(',').filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| bad("expected key=value"))?;
            let v: u64 = v.trim().parse().map_err(|_| bad("non-numeric value"))?;
            match k.trim() {
                "p" => p = Some(v),
                "f" => f = u32::try_from(v).map_err(|_| bad("f out of range"))?,
                "m" => m = Some(u32::try_from(v).map_err(|_| bad("m out of range"))?),
                "n" => n = Some(v),
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        match head.trim() {
            "zq" => make_ring(
                RingKind::MixedChar,
                p.ok_or_else(|| bad("missing p"))?,
                f,
                m.unwrap_or(1),
            ),
            "fqt" => make_ring(
                RingKind::EqualChar,
                p.ok_or_else(|| bad("missing p"))?,
                f,
                m.unwrap_or(1),
            ),
            "zn" => make_composite(n.ok_or_else(|| bad("missing n"))?),
            other => Err(bad(&format!("unknown ring kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_rings() -> Vec<RingSpec> {
        let mut rings = Vec::new();
        for (p, f, m) in [
            (2, 1, 1),
            (2, 1, 2),
            (2, 1, 3),
            (3, 1, 2),
            (2, 2, 2),
            (5, 1, 2),
            (3, 2, 1),
            (2, 3, 2),
            (2, 1, 8),
            (3, 1, 5),
        ] {
            rings.push(make_ring(RingKind::MixedChar, p, f, m).unwrap());
            rings.push(make_ring(RingKind::EqualChar, p, f, m).unwrap());
        }
        rings.push(make_composite(12).unwrap());
        rings.push(make_composite(6).unwrap());
        rings
    }

    #[test]
    fn sizes_and_moduli() {
        let z4 = make_ring(RingKind::MixedChar, 2, 1, 2).unwrap();
        assert_eq!(z4.size(), 4);
        let f2t = make_ring(RingKind::EqualChar, 2, 1, 2).unwrap();
        assert_eq!(f2t.size(), 4);
        let gr = make_ring(RingKind::MixedChar, 2, 2, 2).unwrap();
        assert_eq!(gr.size(), 16);
        assert_eq!(gr.q(), 4);
        assert_eq!(gr.modulus(), &[1, 1, 1]);
        assert_eq!(gr.units().len(), 12);
        let f27 = make_ring(RingKind::EqualChar, 3, 3, 1).unwrap();
        assert_eq!(f27.modulus(), &[1, 2, 0, 1]); // x^3 + 2x + 1
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            make_ring(RingKind::MixedChar, 4, 1, 1).unwrap_err(),
            RingError::NotPrime(4)
        );
        assert_eq!(
            make_ring(RingKind::MixedChar, 2, 1, 0).unwrap_err(),
            RingError::InvalidLevel(0)
        );
        assert!(make_composite(1).is_err());
        let z12 = make_composite(12).unwrap();
        assert_eq!(
            z12.valuation(z12.one()),
            Err(RingError::ValuationUndefined(12))
        );
    }

    #[test]
    fn valuation_examples() {
        let z27 = make_ring(RingKind::MixedChar, 3, 1, 3).unwrap();
        assert_eq!(z27.valuation(z27.zero()).unwrap(), 3);
        assert_eq!(z27.valuation(z27.from_int(3)).unwrap(), 1);
        let f2t3 = make_ring(RingKind::EqualChar, 2, 1, 3).unwrap();
        let t = f2t3.uniformizer().unwrap();
        let a = f2t3.add(t, f2t3.mul(t, t));
        assert_eq!(f2t3.valuation(a).unwrap(), 1);
    }

    #[test]
    fn inverse_examples() {
        let z4 = make_ring(RingKind::MixedChar, 2, 1, 2).unwrap();
        assert_eq!(z4.invert(z4.one()).unwrap(), z4.one());
        assert_eq!(z4.invert(z4.from_int(3)).unwrap(), z4.from_int(3));
        assert_eq!(z4.invert(z4.from_int(2)), Err(RingError::NotAUnit(2)));
        let f2t = make_ring(RingKind::EqualChar, 2, 1, 2).unwrap();
        let one_plus_t = f2t.add(f2t.one(), f2t.uniformizer().unwrap());
        assert_eq!(f2t.invert(one_plus_t).unwrap(), one_plus_t);
    }

    #[test]
    fn projection_examples() {
        let z4 = make_ring(RingKind::MixedChar, 2, 1, 2).unwrap();
        let z2 = z4.at_level(1).unwrap();
        assert_eq!(z4.project(z4.from_int(3), &z2).unwrap(), z2.one());
        assert!(z2.project(z2.one(), &z4).is_err());
        let f2t = make_ring(RingKind::EqualChar, 2, 1, 2).unwrap();
        let f2 = f2t.at_level(1).unwrap();
        let one_plus_t = f2t.add(f2t.one(), f2t.uniformizer().unwrap());
        assert_eq!(f2t.project(one_plus_t, &f2).unwrap(), f2.one());
        let z9 = make_ring(RingKind::MixedChar, 3, 1, 2).unwrap();
        let z3 = z9.at_level(1).unwrap();
        for a in z9.elements() {
            for b in z9.elements() {
                let lhs = z9.project(z9.mul(a, b), &z3).unwrap();
                let rhs = z3.mul(z9.project(a, &z3).unwrap(), z9.project(b, &z3).unwrap());
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn ring_axioms_exhaustive() {
        for r in small_rings().iter().filter(|r| r.size() <= 256) {
            let els: Vec<_> = r.elements().collect();
            for &a in &els {
                assert_eq!(r.add(a, r.neg(a)), r.zero());
                assert_eq!(r.mul(a, r.one()), a);
                for &b in &els {
                    assert_eq!(r.add(a, b), r.add(b, a), "{r:?}");
                    assert_eq!(r.mul(a, b), r.mul(b, a), "{r:?}");
                    if r.is_local() {
                        let v = (r.valuation(a).unwrap() + r.valuation(b).unwrap()).min(r.level());
                        assert_eq!(r.valuation(r.mul(a, b)).unwrap(), v, "{r:?}");
                    }
                }
            }
            // associativity and distributivity on a stride to keep this fast for 256-element rings
            let step = (els.len() / 16).max(1);
            for &a in els.iter().step_by(step) {
                for &b in &els {
                    for &c in els.iter().step_by(step) {
                        assert_eq!(r.mul(r.mul(a, b), c), r.mul(a, r.mul(b, c)));
                        assert_eq!(r.add(r.add(a, b), c), r.add(a, r.add(b, c)));
                        assert_eq!(r.mul(a, r.add(b, c)), r.add(r.mul(a, b), r.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn unit_counts_and_inverses() {
        for r in small_rings() {
            let units = r.units();
            if r.is_local() {
                assert_eq!(units.len() as u64, r.size() - r.size() / r.q(), "{r:?}");
            }
            for u in units {
                assert_eq!(r.mul(u, r.invert(u).unwrap()), r.one());
            }
        }
    }

    #[test]
    fn residue_field_has_q_elements() {
        for r in small_rings().into_iter().filter(|r| r.is_local()) {
            let k = r.at_level(1).unwrap();
            assert_eq!(k.size(), r.q());
            // F_q: every nonzero element is a unit
            assert_eq!(k.units().len() as u64, r.q() - 1);
        }
    }

    #[test]
    fn table_and_formula_paths_agree() {
        let r = make_ring(RingKind::MixedChar, 2, 2, 3).unwrap();
        for a in r.elements().step_by(3) {
            for b in r.elements().step_by(5) {
                assert_eq!(r.mul(a, b), r.slow_mul(a, b));
                assert_eq!(r.add(a, b), r.slow_add(a, b));
            }
        }
        // no tables beyond the limit
        let big = make_ring(RingKind::EqualChar, 3, 1, 7).unwrap();
        assert!(big.tables.is_none());
        let t = big.uniformizer().unwrap();
        assert_eq!(big.valuation(big.pow(t, 6)).unwrap(), 6);
        assert_eq!(big.pow(t, 7), big.zero());
    }

    #[test]
    fn crt_is_an_isomorphism() {
        let crt = CrtSplit::new(4, 3).unwrap();
        let w = &crt.whole;
        let mut seen = std::collections::HashSet::new();
        for a in w.elements() {
            let (x, y) = crt.split(a);
            assert!(seen.insert((x, y)));
            assert_eq!(crt.join(x, y), a);
            for b in w.elements() {
                let (u, v) = crt.split(b);
                assert_eq!(
                    crt.split(w.mul(a, b)),
                    (crt.left.mul(x, u), crt.right.mul(y, v))
                );
                assert_eq!(
                    crt.split(w.add(a, b)),
                    (crt.left.add(x, u), crt.right.add(y, v))
                );
            }
        }
        assert_eq!(seen.len(), 12);
        assert!(CrtSplit::new(4, 6).is_err());
    }

    #[test]
    fn literals_and_encodings() {
        let r: RingSpec = "zq:p=3,f=1,m=2".parse().unwrap();
        assert_eq!(r.size(), 9);
        assert_eq!(r.literal(), "zq:p=3,f=1,m=2");
        let r: RingSpec = "fqt:p=2,f=2,m=2".parse().unwrap();
        assert_eq!(r.kind(), RingKind::EqualChar);
        let z: RingSpec = "zn:n=12".parse().unwrap();
        assert_eq!(z.size(), 12);
        assert!("zq:p=4".parse::<RingSpec>().is_err());
        assert!("foo:p=2".parse::<RingSpec>().is_err());
        let z9 = make_ring(RingKind::MixedChar, 3, 1, 2).unwrap();
        assert_eq!(z9.encode(z9.from_int(5)), "21");
        for a in r.elements() {
            assert_eq!(r.decode(&r.encode(a)), Some(a));
        }
    }
}
