//! Symbolic summation over Presburger sets by eliminating one variable at a
//! time. Each step splits the remaining variables into residue classes so that
//! the bounds on the eliminated variable become integral affine forms, splits
//! on which bound is active, and sums `y^e r^y` in closed form.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use super::qe::{exists, to_nnf, Lit, Nnf};
use super::{
    ceil_div, parse, parse_weight, Linear, PresburgerError, PresburgerFormula, MAX_MODULUS,
    MAX_VARIABLES,
};
use crate::zeta::BivariateRational;

/// Sum of `X^{x_exponent} Y^{y_exponent}` over the solutions of `formula`,
/// where `X = q` and `Y = q^{-s}`. Every free variable is summed over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummationSpec {
    pub formula: PresburgerFormula,
    pub variables: Vec<String>,
    pub x_exponent: Linear,
    pub y_exponent: Linear,
}

impl SummationSpec {
    pub fn new(
        formula: PresburgerFormula,
        x_exponent: Linear,
        y_exponent: Linear,
    ) -> Result<Self, PresburgerError> {
        let free = formula.free_variables();
        for v in x_exponent.coeffs.keys().chain(y_exponent.coeffs.keys()) {
            if !free.contains(v) {
                return Err(PresburgerError::NotFree(v.clone()));
            }
        }
        Ok(Self {
            formula,
            variables: free.into_iter().collect(),
            x_exponent,
            y_exponent,
        })
    }

    /// `weight` is `q^(...)` in the variables and `s`; `formula` defines the set.
    pub fn parse(weight: &str, formula: &str) -> Result<Self, PresburgerError> {
        let (x, y) = parse_weight(weight)?;
        Self::new(parse(formula)?, x, y)
    }

    /// Weight `q^{-ns - l_1 - ... - l_m}`.
    pub fn standard(
        formula: PresburgerFormula,
        n: &str,
        ls: &[&str],
    ) -> Result<Self, PresburgerError> {
        let x = ls
            .iter()
            .fold(Linear::default(), |acc, l| acc.sub(&Linear::var(l)));
        Self::new(formula, x, Linear::var(n))
    }

    fn exponents(&self) -> (Vec<i64>, Vec<i64>) {
        (
            self.variables
                .iter()
                .map(|v| self.x_exponent.coeff(v))
                .collect(),
            self.variables
                .iter()
                .map(|v| self.y_exponent.coeff(v))
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct SumResult {
    pub value: BivariateRational,
    /// Smallest integer `s` at which every recession ray contracts; `None`
    /// when the sum converges for every `s`.
    pub sigma0: Option<i64>,
    /// Supremum of the `a/b` over contracting rays `X^a Y^b` with `b > 0`.
    pub abscissa: Option<BigRational>,
    pub quantifier_free: PresburgerFormula,
    pub cells: usize,
}

/// `sum c_i x_i + k <= 0`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Ineq {
    c: Vec<i64>,
    k: i64,
}

/// `d | sum c_i x_i + k`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Cong {
    d: i64,
    c: Vec<i64>,
    k: i64,
}

#[derive(Debug, Clone, Default)]
struct Cell {
    ineqs: Vec<Ineq>,
    congs: Vec<Cong>,
    infeasible: bool,
}

impl Cell {
    fn merge(&self, o: &Cell) -> Cell {
        let mut out = self.clone();
        out.ineqs.extend(o.ineqs.iter().cloned());
        out.congs.extend(o.congs.iter().cloned());
        out.infeasible |= o.infeasible;
        out.normalize();
        out
    }

    fn normalize(&mut self) {
        if self.infeasible {
            self.ineqs.clear();
            self.congs.clear();
            return;
        }
        let mut ineqs = Vec::new();
        for mut q in std::mem::take(&mut self.ineqs) {
            let g = q.c.iter().fold(0i64, |g, c| g.gcd(c));
            if g == 0 {
                if q.k > 0 {
                    self.infeasible = true;
                }
                continue;
            }
            if g > 1 {
                q.c.iter_mut().for_each(|c| *c /= g);
                q.k = ceil_div(q.k, g);
            }
            ineqs.push(q);
        }
        let mut congs = Vec::new();
        for mut q in std::mem::take(&mut self.congs) {
            q.c.iter_mut().for_each(|c| *c = c.rem_euclid(q.d));
            q.k = q.k.rem_euclid(q.d);
            if q.c.iter().all(|&c| c == 0) || q.d == 1 {
                if q.k != 0 {
                    self.infeasible = true;
                }
                continue;
            }
            let g =
                q.c.iter()
                    .chain([q.d, q.k].iter())
                    .fold(0i64, |g, c| g.gcd(c));
            if g > 1 {
                q.c.iter_mut().for_each(|c| *c /= g);
                q.k /= g;
                q.d /= g;
            }
            congs.push(q);
        }
        ineqs.sort();
        ineqs.dedup();
        congs.sort();
        congs.dedup();
        // opposite inequalities with an empty gap
        for (i, a) in ineqs.iter().enumerate() {
            for b in &ineqs[i + 1..] {
                if a.c.iter().zip(&b.c).all(|(x, y)| *x == -y) && a.k + b.k > 0 {
                    self.infeasible = true;
                }
            }
        }
        for (i, a) in congs.iter().enumerate() {
            for b in &congs[i + 1..] {
                if a.d == b.d && a.c == b.c && a.k != b.k {
                    self.infeasible = true;
                }
            }
        }
        if self.infeasible {
            ineqs.clear();
            congs.clear();
        }
        self.ineqs = ineqs;
        self.congs = congs;
    }

    /// `x_i -> n x_i + r`.
    fn substitute(&mut self, i: usize, n: i64, r: i64) {
        for q in &mut self.ineqs {
            q.k += q.c[i] * r;
            q.c[i] *= n;
        }
        for q in &mut self.congs {
            q.k += q.c[i] * r;
            q.c[i] *= n;
        }
    }

    fn negations(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        let mut prefix = Cell::default();
        for q in &self.ineqs {
            let neg = Ineq {
                c: q.c.iter().map(|c| -c).collect(),
                k: 1 - q.k,
            };
            out.push(prefix.merge(&Cell {
                ineqs: vec![neg],
                ..Default::default()
            }));
            prefix = prefix.merge(&Cell {
                ineqs: vec![q.clone()],
                ..Default::default()
            });
        }
        for q in &self.congs {
            for r in 1..q.d {
                let neg = Cong {
                    d: q.d,
                    c: q.c.clone(),
                    k: q.k - r,
                };
                out.push(prefix.merge(&Cell {
                    congs: vec![neg],
                    ..Default::default()
                }));
            }
            prefix = prefix.merge(&Cell {
                congs: vec![q.clone()],
                ..Default::default()
            });
        }
        out.into_iter().filter(|c| !c.infeasible).collect()
    }

    fn to_nnf(&self, names: &[String]) -> Nnf {
        let lin = |c: &[i64], k: i64| Linear {
            coeffs: c
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(|(i, &v)| (names[i].clone(), v))
                .collect(),
            constant: k,
        };
        if self.infeasible {
            return Nnf::False;
        }
        let mut parts: Vec<Nnf> = self
            .ineqs
            .iter()
            .map(|q| Nnf::Lit(Lit::Le(lin(&q.c, q.k))))
            .collect();
        parts.extend(
            self.congs
                .iter()
                .map(|q| Nnf::Lit(Lit::Div(q.d, lin(&q.c, q.k)))),
        );
        Nnf::and(parts)
    }
}

fn lin_vec(t: &Linear, names: &[String]) -> (Vec<i64>, i64) {
    (names.iter().map(|v| t.coeff(v)).collect(), t.constant)
}

/// Disjunctive normal form as cells; negated congruences become residue classes.
fn dnf(n: &Nnf, names: &[String]) -> Vec<Cell> {
    match n {
        Nnf::True => vec![Cell::default()],
        Nnf::False => vec![],
        Nnf::Lit(l) => {
            let mut cells = Vec::new();
            match l {
                Lit::Le(t) => {
                    let (c, k) = lin_vec(t, names);
                    cells.push(Cell {
                        ineqs: vec![Ineq { c, k }],
                        ..Default::default()
                    });
                }
                Lit::Div(d, t) => {
                    let (c, k) = lin_vec(t, names);
                    cells.push(Cell {
                        congs: vec![Cong { d: *d, c, k }],
                        ..Default::default()
                    });
                }
                Lit::NDiv(d, t) => {
                    let (c, k) = lin_vec(t, names);
                    for r in 1..*d {
                        cells.push(Cell {
                            congs: vec![Cong {
                                d: *d,
                                c: c.clone(),
                                k: k - r,
                            }],
                            ..Default::default()
                        });
                    }
                }
            }
            cells.iter_mut().for_each(Cell::normalize);
            cells.retain(|c| !c.infeasible);
            cells
        }
        Nnf::Or(ps) => ps.iter().flat_map(|p| dnf(p, names)).collect(),
        Nnf::And(ps) => {
            let mut acc = vec![Cell::default()];
            for p in ps {
                let parts = dnf(p, names);
                let mut next = Vec::new();
                for a in &acc {
                    for b in &parts {
                        let m = a.merge(b);
                        if !m.infeasible {
                            next.push(m);
                        }
                    }
                }
                acc = next;
            }
            acc
        }
    }
}

/// Pairwise disjoint cells with the same union.
fn disjoint(cells: Vec<Cell>) -> Vec<Cell> {
    let mut out: Vec<Cell> = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let mut current = vec![cell.clone()];
        for prev in &cells[..i] {
            let mut next = Vec::new();
            for p in current {
                if p.merge(prev).infeasible {
                    next.push(p);
                    continue;
                }
                for neg in prev.negations() {
                    let m = p.merge(&neg);
                    if !m.infeasible {
                        next.push(m);
                    }
                }
            }
            current = next;
        }
        out.extend(current);
    }
    out
}

/// `coef * prod x_i^{pow_i} * X^{<a,x>} Y^{<b,x>}`
#[derive(Debug, Clone)]
struct Term {
    coef: BivariateRational,
    pow: Vec<u32>,
    a: Vec<i64>,
    b: Vec<i64>,
}

type TermKey = (Vec<u32>, Vec<i64>, Vec<i64>);

fn collect_terms(terms: impl IntoIterator<Item = Term>) -> Vec<Term> {
    let mut map: BTreeMap<TermKey, BivariateRational> = BTreeMap::new();
    for t in terms {
        let e = map
            .entry((t.pow, t.a, t.b))
            .or_insert_with(BivariateRational::zero);
        *e = e.add(&t.coef);
    }
    map.into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|((pow, a, b), coef)| Term { coef, pow, a, b })
        .collect()
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

fn big_pow(b: i64, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(b), e as usize)
}

/// `x_i -> n x_i + r` in a term, expanding the power of `x_i`.
fn substitute_term(t: &Term, i: usize, n: i64, r: i64) -> Vec<Term> {
    let p = t.pow[i];
    let shift = BivariateRational::monomial(BigInt::one(), t.a[i] * r, t.b[i] * r);
    let base = t.coef.mul(&shift);
    (0..=p)
        .filter_map(|j| {
            let c = binomial(p, j) * big_pow(n, j) * big_pow(r, p - j);
            if c.is_zero() {
                return None;
            }
            let mut out = t.clone();
            out.coef = base.mul(&BivariateRational::monomial(c, 0, 0));
            out.pow[i] = j;
            out.a[i] *= n;
            out.b[i] *= n;
            Some(out)
        })
        .collect()
}

/// Affine form `<c, x> + k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Affine {
    c: Vec<i64>,
    k: i64,
}

impl Affine {
    fn shift(&self, d: i64) -> Affine {
        Affine {
            c: self.c.clone(),
            k: self.k + d,
        }
    }

    fn minus(&self, o: &Affine) -> Ineq {
        Ineq {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect(),
            k: self.k - o.k,
        }
    }

    /// Monomial expansion of `self^p`: exponent vector to coefficient.
    fn power(&self, p: u32) -> BTreeMap<Vec<u32>, BigInt> {
        let n = self.c.len();
        let mut acc: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
        acc.insert(vec![0; n], BigInt::one());
        for _ in 0..p {
            let mut next: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
            for (e, c) in &acc {
                if self.k != 0 {
                    *next.entry(e.clone()).or_insert_with(BigInt::zero) += c * self.k;
                }
                for (i, &ci) in self.c.iter().enumerate() {
                    if ci != 0 {
                        let mut e2 = e.clone();
                        e2[i] += 1;
                        *next.entry(e2).or_insert_with(BigInt::zero) += c * ci;
                    }
                }
            }
            next.retain(|_, c| !c.is_zero());
            acc = next;
        }
        acc
    }
}

/// `b > 0`, or `b = 0` and `a < 0`: the monomial tends to 0 for large `s`.
fn contracting(a: i64, b: i64) -> bool {
    b > 0 || (b == 0 && a < 0)
}

struct Ctx {
    names: Vec<String>,
    abscissa: Option<BigRational>,
    cells: usize,
    eulerian: BTreeMap<(i64, i64, u32), BivariateRational>,
}

impl Ctx {
    /// `sum_{k >= 0} k^j r^k` for contracting `r = X^a Y^b`.
    fn moment(&mut self, a: i64, b: i64, j: u32) -> BivariateRational {
        if let Some(v) = self.eulerian.get(&(a, b, j)) {
            return v.clone();
        }
        let mut num = BivariateRational::zero();
        if j == 0 {
            num = BivariateRational::one();
        } else {
            // Eulerian numbers A(j, m)
            let mut row = vec![BigInt::one()];
            for n in 2..=j as usize {
                let mut next = vec![BigInt::zero(); n];
                for m in 0..n {
                    let mut v = BigInt::zero();
                    if m < row.len() {
                        v += &row[m] * BigInt::from(m + 1);
                    }
                    if m >= 1 && m - 1 < row.len() {
                        v += &row[m - 1] * BigInt::from(n - m);
                    }
                    next[m] = v;
                }
                row = next;
            }
            for (m, c) in row.iter().enumerate() {
                let e = m as i64 + 1;
                num = num.add(&BivariateRational::monomial(c.clone(), a * e, b * e));
            }
        }
        let mut out = num;
        for _ in 0..=j {
            out = out.divide_by_factor(a, b);
        }
        self.eulerian.insert((a, b, j), out.clone());
        out
    }

    /// `X^a Y^b` with `b > 0` contracts exactly for `s > a/b`.
    fn record_ray(&mut self, a: i64, b: i64) {
        if b > 0 {
            let r = BigRational::new(a.into(), b.into());
            if self.abscissa.as_ref().map_or(true, |x| r > *x) {
                self.abscissa = Some(r);
            }
        }
    }

    fn feasible(&self, cell: &Cell, alive: &[bool]) -> bool {
        if cell.infeasible {
            return false;
        }
        let mut phi = cell.to_nnf(&self.names);
        for (i, name) in self.names.iter().enumerate() {
            if alive[i] {
                phi = exists(name, &phi);
            }
        }
        phi == Nnf::True
    }
}

/// `base * A^p * r^A` with `r = X^a Y^b`, where `base` carries no power or
/// weight in the eliminated variable.
fn affine_terms(
    base: &Term,
    scale: &BivariateRational,
    form: &Affine,
    p: u32,
    a: i64,
    b: i64,
) -> Vec<Term> {
    let head = base.coef.mul(scale).mul(&BivariateRational::monomial(
        BigInt::one(),
        a * form.k,
        b * form.k,
    ));
    let mut out = Vec::new();
    for (e, c) in form.power(p) {
        let mut t = base.clone();
        t.coef = head.mul(&BivariateRational::monomial(c, 0, 0));
        for i in 0..e.len() {
            t.pow[i] += e[i];
            t.a[i] += a * form.c[i];
            t.b[i] += b * form.c[i];
        }
        out.push(t);
    }
    out
}

fn bernoulli(n: usize) -> Vec<BigRational> {
    let mut bs = vec![BigRational::one()];
    for m in 1..=n {
        let mut acc = BigRational::zero();
        for (k, bk) in bs.iter().enumerate() {
            acc += BigRational::from_integer(binomial(m as u32 + 1, k as u32)) * bk;
        }
        bs.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    bs
}

/// Coefficients of `S_e(n) = sum_{y=0}^{n-1} y^e` as a polynomial in `n`.
fn faulhaber(e: u32) -> Vec<BigRational> {
    let bs = bernoulli(e as usize);
    let mut out = vec![BigRational::zero(); e as usize + 2];
    let inv = BigRational::new(BigInt::one(), BigInt::from(e + 1));
    for (j, bj) in bs.iter().enumerate() {
        out[e as usize + 1 - j] += &inv * BigRational::from_integer(binomial(e + 1, j as u32)) * bj;
    }
    out
}

fn rational(c: &BigRational) -> BivariateRational {
    BivariateRational::one().scale(c)
}

enum Range<'a> {
    From(&'a Affine),
    To(&'a Affine),
}

impl Ctx {
    /// `sum y^e r^y` over `y >= L` or `y <= U`; `r` (resp. `1/r`) must contract.
    fn half_line(&mut self, base: &Term, range: Range<'_>, e: u32, a: i64, b: i64) -> Vec<Term> {
        let mut out = Vec::new();
        for j in 0..=e {
            let binom = BivariateRational::monomial(binomial(e, j), 0, 0);
            match range {
                Range::From(l) => {
                    let g = self.moment(a, b, j).mul(&binom);
                    out.extend(affine_terms(base, &g, l, e - j, a, b));
                }
                Range::To(u) => {
                    let sign = if j % 2 == 1 { binom.neg() } else { binom };
                    let g = self.moment(-a, -b, j).mul(&sign);
                    out.extend(affine_terms(base, &g, u, e - j, a, b));
                }
            }
        }
        out
    }

    /// `sum_{y=L}^{U} y^e r^y`, valid whenever `L <= U + 1`.
    fn segment(
        &mut self,
        base: &Term,
        l: &Affine,
        u: &Affine,
        e: u32,
        a: i64,
        b: i64,
    ) -> Vec<Term> {
        let negate = |ts: Vec<Term>| {
            ts.into_iter().map(|mut t| {
                t.coef = t.coef.neg();
                t
            })
        };
        if (a, b) == (0, 0) {
            let s = faulhaber(e);
            let mut out = Vec::new();
            for (i, c) in s.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let k = rational(c);
                out.extend(affine_terms(base, &k, &u.shift(1), i as u32, 0, 0));
                out.extend(negate(affine_terms(base, &k, l, i as u32, 0, 0)));
            }
            out
        } else if contracting(a, b) {
            let mut out = self.half_line(base, Range::From(l), e, a, b);
            out.extend(negate(self.half_line(
                base,
                Range::From(&u.shift(1)),
                e,
                a,
                b,
            )));
            out
        } else {
            let mut out = self.half_line(base, Range::To(u), e, a, b);
            out.extend(negate(self.half_line(
                base,
                Range::To(&l.shift(-1)),
                e,
                a,
                b,
            )));
            out
        }
    }
}

struct Piece {
    cell: Cell,
    terms: Vec<Term>,
}

impl Ctx {
    fn choose(&self, p: &Piece, alive: &[bool]) -> (usize, i64, Vec<i64>) {
        let n = alive.len();
        let mut best: Option<((u128, bool, usize), usize, i64, Vec<i64>)> = None;
        for x in (0..n).filter(|&i| alive[i]) {
            let xi: Vec<&Ineq> = p.cell.ineqs.iter().filter(|q| q.c[x] != 0).collect();
            let xc: Vec<&Cong> = p.cell.congs.iter().filter(|q| q.c[x] != 0).collect();
            let d = xc.iter().fold(1i64, |acc, q| acc.lcm(&q.d));
            let mut nv = vec![1i64; n];
            for v in (0..n).filter(|&v| v != x && alive[v]) {
                for q in &xi {
                    if q.c[v] != 0 {
                        let m = q.c[x].abs() * d;
                        nv[v] = nv[v].lcm(&(m / m.gcd(&q.c[v])));
                    }
                }
                for q in &xc {
                    if q.c[v] != 0 {
                        nv[v] = nv[v].lcm(&(q.d / q.d.gcd(&q.c[v])));
                    }
                }
            }
            let lower = xi.iter().filter(|q| q.c[x] < 0).count().max(1) as u128;
            let upper = xi.iter().filter(|q| q.c[x] > 0).count().max(1) as u128;
            let splits = nv
                .iter()
                .fold(d as u128, |acc, &k| acc.saturating_mul(k as u128));
            let weightless = p.terms.iter().all(|t| t.a[x] == 0 && t.b[x] == 0);
            let key = (splits.saturating_mul(lower * upper), weightless, x);
            if best.as_ref().map_or(true, |b| key < b.0) {
                best = Some((key, x, d, nv));
            }
        }
        let (_, x, d, nv) = best.expect("an alive variable");
        (x, d, nv)
    }

    fn sum_piece(
        &mut self,
        mut p: Piece,
        alive: &mut Vec<bool>,
    ) -> Result<BivariateRational, PresburgerError> {
        p.cell.normalize();
        if p.cell.infeasible || p.terms.is_empty() {
            return Ok(BivariateRational::zero());
        }
        if !alive.iter().any(|&a| a) {
            self.cells += 1;
            return Ok(p
                .terms
                .iter()
                .fold(BivariateRational::zero(), |acc, t| acc.add(&t.coef)));
        }
        let (x, d, nv) = self.choose(&p, alive);
        let n = alive.len();
        let splits: Vec<usize> = (0..n).filter(|&v| nv[v] > 1).collect();
        let mut total = BivariateRational::zero();
        let mut residues = vec![0i64; n];
        loop {
            for rho in 0..d {
                let mut cell = p.cell.clone();
                let mut terms = p.terms.clone();
                for &v in &splits {
                    cell.substitute(v, nv[v], residues[v]);
                    terms = terms
                        .iter()
                        .flat_map(|t| substitute_term(t, v, nv[v], residues[v]))
                        .collect();
                }
                cell.substitute(x, d, rho);
                terms = terms
                    .iter()
                    .flat_map(|t| substitute_term(t, x, d, rho))
                    .collect();
                cell.normalize();
                if cell.infeasible {
                    continue;
                }
                total = total.add(&self.eliminate(x, cell, collect_terms(terms), alive)?);
            }
            // next residue vector
            let mut i = 0;
            loop {
                if i == splits.len() {
                    return Ok(total);
                }
                let v = splits[i];
                residues[v] += 1;
                if residues[v] < nv[v] {
                    break;
                }
                residues[v] = 0;
                i += 1;
            }
        }
    }

    /// Sums out `x`, whose bounds now have integral affine quotients.
    fn eliminate(
        &mut self,
        x: usize,
        cell: Cell,
        terms: Vec<Term>,
        alive: &mut Vec<bool>,
    ) -> Result<BivariateRational, PresburgerError> {
        let mut lowers = Vec::new();
        let mut uppers = Vec::new();
        let mut rest = Cell {
            congs: cell.congs.clone(),
            ..Default::default()
        };
        debug_assert!(cell.congs.iter().all(|q| q.c[x] == 0));
        for q in &cell.ineqs {
            let e = q.c[x];
            if e == 0 {
                rest.ineqs.push(q.clone());
                continue;
            }
            let mut c: Vec<i64> = q.c.clone();
            c[x] = 0;
            if e > 0 {
                // y <= -(c z + k)/e
                uppers.push(Affine {
                    c: c.iter().map(|v| -v / e).collect(),
                    k: (-q.k).div_euclid(e),
                });
            } else {
                // y >= (c z + k)/|e|
                lowers.push(Affine {
                    c: c.iter().map(|v| v / -e).collect(),
                    k: ceil_div(q.k, -e),
                });
            }
        }
        lowers.sort();
        lowers.dedup();
        uppers.sort();
        uppers.dedup();
        let li: Vec<Option<usize>> = if lowers.is_empty() {
            vec![None]
        } else {
            (0..lowers.len()).map(Some).collect()
        };
        let ui: Vec<Option<usize>> = if uppers.is_empty() {
            vec![None]
        } else {
            (0..uppers.len()).map(Some).collect()
        };
        alive[x] = false;
        let mut total = BivariateRational::zero();
        for &i in &li {
            for &j in &ui {
                let mut case = rest.clone();
                if let Some(i) = i {
                    for (m, lm) in lowers.iter().enumerate() {
                        if m != i {
                            let mut q = lm.minus(&lowers[i]);
                            if m < i {
                                q.k += 1;
                            }
                            case.ineqs.push(q);
                        }
                    }
                }
                if let Some(j) = j {
                    for (m, um) in uppers.iter().enumerate() {
                        if m != j {
                            let mut q = uppers[j].minus(um);
                            if m < j {
                                q.k += 1;
                            }
                            case.ineqs.push(q);
                        }
                    }
                }
                if let (Some(i), Some(j)) = (i, j) {
                    case.ineqs.push(lowers[i].minus(&uppers[j]));
                }
                case.normalize();
                if case.infeasible {
                    continue;
                }
                let mut feasible: Option<bool> = None;
                let mut out = Vec::new();
                for t in &terms {
                    let e = t.pow[x];
                    let (a, b) = (t.a[x], t.b[x]);
                    let mut base = t.clone();
                    base.pow[x] = 0;
                    base.a[x] = 0;
                    base.b[x] = 0;
                    let unbounded = match (i, j) {
                        (Some(i), Some(j)) => {
                            out.extend(self.segment(&base, &lowers[i], &uppers[j], e, a, b));
                            continue;
                        }
                        (Some(i), None) if contracting(a, b) => {
                            Some((Range::From(&lowers[i]), a, b))
                        }
                        (None, Some(j)) if contracting(-a, -b) => {
                            Some((Range::To(&uppers[j]), -a, -b))
                        }
                        _ => None,
                    };
                    let ok = *feasible.get_or_insert_with(|| self.feasible(&case, alive));
                    if !ok {
                        break;
                    }
                    match unbounded {
                        Some((range, ra, rb)) => {
                            self.record_ray(ra, rb);
                            out.extend(self.half_line(&base, range, e, a, b));
                        }
                        None => {
                            let direction = if i.is_none() { -1 } else { 1 };
                            return Err(PresburgerError::Divergent {
                                variable: self.names[x].clone(),
                                direction,
                                x: a * direction,
                                y: b * direction,
                            });
                        }
                    }
                }
                if feasible == Some(false) {
                    continue;
                }
                let piece = Piece {
                    cell: case,
                    terms: collect_terms(out),
                };
                total = total.add(&self.sum_piece(piece, alive)?);
            }
        }
        alive[x] = true;
        Ok(total)
    }
}

/// `J(s, q) = P(q, q^{-s}) / Q(q, q^{-s})` for the spec's set and weight.
pub fn sum_rational(spec: &SummationSpec) -> Result<SumResult, PresburgerError> {
    let names = spec.variables.clone();
    if names.len() > MAX_VARIABLES {
        return Err(PresburgerError::VariableBudget {
            found: names.len(),
            max: MAX_VARIABLES,
        });
    }
    let nnf = to_nnf(&spec.formula, &mut 0);
    let m = nnf.max_modulus();
    if m > MAX_MODULUS {
        return Err(PresburgerError::ModulusBudget {
            found: m,
            max: MAX_MODULUS,
        });
    }
    let cells = disjoint(dnf(&nnf, &names));
    let (xa, yb) = spec.exponents();
    let head = BivariateRational::monomial(
        BigInt::one(),
        spec.x_exponent.constant,
        spec.y_exponent.constant,
    );
    let mut ctx = Ctx {
        names: names.clone(),
        abscissa: None,
        cells: 0,
        eulerian: BTreeMap::new(),
    };
    let mut total = BivariateRational::zero();
    for cell in cells {
        let term = Term {
            coef: head.clone(),
            pow: vec![0; names.len()],
            a: xa.clone(),
            b: yb.clone(),
        };
        let mut alive = vec![true; names.len()];
        total = total.add(&ctx.sum_piece(
            Piece {
                cell,
                terms: vec![term],
            },
            &mut alive,
        )?);
    }
    let sigma0 = ctx.abscissa.as_ref().map(|a| {
        a.floor()
            .to_integer()
            .try_into()
            .unwrap_or(i64::MAX)
            .saturating_add(1)
    });
    Ok(SumResult {
        value: total.reduce(),
        sigma0,
        abscissa: ctx.abscissa,
        quantifier_free: nnf.to_formula(),
        cells: ctx.cells,
    })
}

fn q_power(q: u64, e: i64) -> BigRational {
    let p = BigRational::from_integer(num_traits::pow(BigInt::from(q), e.unsigned_abs() as usize));
    if e < 0 {
        p.recip()
    } else {
        p
    }
}

/// Solutions in `[-bound, bound]^k`, checked with the bounded oracle.
fn solutions(spec: &SummationSpec, bound: i64) -> Result<Vec<Vec<i64>>, PresburgerError> {
    let k = spec.variables.len();
    if k == 0 {
        let ok = spec.formula.eval(&mut BTreeMap::new())?;
        return Ok(if ok { vec![vec![]] } else { vec![] });
    }
    let chunks: Vec<Result<Vec<Vec<i64>>, PresburgerError>> = (-bound..=bound)
        .into_par_iter()
        .map(|first| {
            let mut out = Vec::new();
            let mut point = vec![-bound; k];
            point[0] = first;
            let mut env: BTreeMap<String, i64> = BTreeMap::new();
            loop {
                for (v, &x) in spec.variables.iter().zip(&point) {
                    env.insert(v.clone(), x);
                }
                if spec.formula.eval(&mut env)? {
                    out.push(point.clone());
                }
                let mut i = 1;
                loop {
                    if i >= k {
                        return Ok(out);
                    }
                    point[i] += 1;
                    if point[i] <= bound {
                        break;
                    }
                    point[i] = -bound;
                    i += 1;
                }
            }
        })
        .collect();
    let mut all = Vec::new();
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

fn exponents_at(spec: &SummationSpec, point: &[i64]) -> (i64, i64) {
    let env: BTreeMap<String, i64> = spec
        .variables
        .iter()
        .cloned()
        .zip(point.iter().copied())
        .collect();
    (
        spec.x_exponent.eval(&env).unwrap(),
        spec.y_exponent.eval(&env).unwrap(),
    )
}

/// Exact sum of `q^{x - s y}` over the solutions in the box.
pub fn brute_force_sum(
    spec: &SummationSpec,
    q: u64,
    s: i64,
    bound: i64,
) -> Result<BigRational, PresburgerError> {
    let mut acc = BigRational::zero();
    for p in solutions(spec, bound)? {
        let (x, y) = exponents_at(spec, &p);
        acc += q_power(q, x - s * y);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceCheck {
    /// Sum of `q^x` over the box solutions with `Y`-exponent `m`, for `m < depth`.
    pub coefficients: Vec<BigRational>,
    /// False when a counted solution touches the box boundary, so a slice may
    /// extend beyond the box.
    pub complete: bool,
}

pub fn brute_force_coefficients(
    spec: &SummationSpec,
    q: u64,
    depth: usize,
    bound: i64,
) -> Result<SliceCheck, PresburgerError> {
    let mut coefficients = vec![BigRational::zero(); depth];
    let mut complete = true;
    for p in solutions(spec, bound)? {
        let (x, y) = exponents_at(spec, &p);
        if y >= 0 && (y as usize) < depth {
            coefficients[y as usize] += q_power(q, x);
            if p.iter().any(|v| v.abs() == bound) {
                complete = false;
            }
        }
    }
    Ok(SliceCheck {
        coefficients,
        complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn same(a: &BivariateRational, b: &BivariateRational) -> bool {
        a.sub(b).is_zero()
    }

    #[test]
    fn documented_sums() {
        let r = sum_rational(&SummationSpec::parse("q^(-n*s)", "n >= 0").unwrap()).unwrap();
        assert!(same(&r.value, &BivariateRational::geometric(0, 1)));
        assert_eq!(r.sigma0, Some(1));
        let r =
            sum_rational(&SummationSpec::parse("q^(-n*s)", "n >= 0 and n ≡ 0 (mod 2)").unwrap())
                .unwrap();
        assert!(same(&r.value, &BivariateRational::geometric(0, 2)));
        let r = sum_rational(&SummationSpec::parse("q^(-n*s - l)", "0 <= l and l <= n").unwrap())
            .unwrap();
        // [1/(1-Y) - X^{-1}/(1 - X^{-1} Y)] / (1 - X^{-1})
        let want = BivariateRational::geometric(0, 1)
            .sub(&BivariateRational::monomial(BigInt::one(), -1, 0).divide_by_factor(-1, 1))
            .divide_by_factor(-1, 0);
        assert!(same(&r.value, &want), "{}", r.value);
        assert_eq!(r.sigma0, Some(1));
    }

    #[test]
    fn polynomial_weights_and_divergence() {
        // sum over 0 <= l <= n of Y^n is sum (n+1) Y^n
        let r = sum_rational(&SummationSpec::parse("q^(-n*s)", "0 <= l <= n").unwrap()).unwrap();
        assert!(same(
            &r.value,
            &BivariateRational::geometric(0, 1).divide_by_factor(0, 1)
        ));
        let r =
            sum_rational(&SummationSpec::parse("q^(-n*s + l)", "0 <= l <= n").unwrap()).unwrap();
        assert_eq!(r.sigma0, Some(2));
        assert!(matches!(
            sum_rational(&SummationSpec::parse("q^(-l)", "0 <= l <= n").unwrap()),
            Err(PresburgerError::Divergent { .. })
        ));
        assert!(matches!(
            sum_rational(&SummationSpec::parse("q^(n*s)", "n >= 0").unwrap()),
            Err(PresburgerError::Divergent { .. })
        ));
        let r =
            sum_rational(&SummationSpec::parse("q^(-n*s)", "n >= 0 and n <= -1").unwrap()).unwrap();
        assert!(r.value.is_zero());
        assert!(matches!(
            sum_rational(&SummationSpec::parse("q^(-n*s)", "n >= 0 and n ≡ 1 (mod 65)").unwrap()),
            Err(PresburgerError::ModulusBudget { .. })
        ));
        assert!(matches!(
            sum_rational(
                &SummationSpec::parse(
                    "q^(-a*s)",
                    "a >= 0 and b >= 0 and c >= 0 and d >= 0 and e >= 0"
                )
                .unwrap()
            ),
            Err(PresburgerError::VariableBudget { .. })
        ));
    }

    #[test]
    fn brute_force_examples() {
        let spec = SummationSpec::parse("q^(-n*s)", "n >= 0").unwrap();
        let v = brute_force_sum(&spec, 2, 1, 20).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        let want = (BigRational::one() - q_power(2, -21)) / (BigRational::one() - half);
        assert_eq!(v, want);
        let empty = SummationSpec::parse("q^(-n*s)", "n >= 0 and n <= -1").unwrap();
        assert!(brute_force_sum(&empty, 2, 1, 10).unwrap().is_zero());
        let spec = SummationSpec::parse("q^(-n*s - l)", "0 <= l and l <= n").unwrap();
        let closed = sum_rational(&spec).unwrap().value;
        for q in [2, 3] {
            let slices = brute_force_coefficients(&spec, q, 12, 12).unwrap();
            assert_eq!(
                closed.expand(q, 12).unwrap().coefficients,
                slices.coefficients
            );
        }
    }

    #[test]
    fn congruences_and_quantifiers() {
        let cases = [
            (
                "q^(-n*s - l)",
                "n >= 0 and l >= 0 and 2*l <= n + 1 and l ≡ n (mod 3)",
            ),
            (
                "q^(-n*s - l)",
                "n >= 0 and exists k (l = 2*k and 0 <= k and 3*l <= 2*n)",
            ),
            (
                "q^(-n*s - l - m)",
                "n >= 0 and 0 <= l and 0 <= m and l + m <= n and not (l = m)",
            ),
            (
                "q^(-n*s + l - m)",
                "n >= 1 and 0 <= l <= n and 0 <= m <= l and (n ≡ 1 (mod 2) or m < 2)",
            ),
            ("q^(-2*n*s - l)", "n >= 0 and l >= -n and l <= 2*n - 1"),
        ];
        for (w, f) in cases {
            let spec = SummationSpec::parse(w, f).unwrap();
            let closed = sum_rational(&spec).unwrap().value;
            for q in [2, 3, 5] {
                let slices = brute_force_coefficients(&spec, q, 8, 18).unwrap();
                assert!(slices.complete);
                assert_eq!(
                    closed.expand(q, 8).unwrap().coefficients,
                    slices.coefficients,
                    "{f} at q = {q}"
                );
            }
        }
    }
}
