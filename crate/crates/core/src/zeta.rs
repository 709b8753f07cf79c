//! Truncated zeta series, bivariate rational functions in `(X, Y) = (q, q^{-s})`,
//! and the counting identities that tie group enumeration to integrals.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::groups::{
    commutator_depth_histogram, conjugacy_class_count, double_coset_count, hecke_pair_count,
    parabolic_depth_histogram, ClassReport, GroupError, GroupFamily, GroupTable, ParabolicTower,
};
use crate::json::{ser_rational, ser_rationals};
use crate::rings::{make_composite, make_ring, RingError, RingKind, RingSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZetaError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("factor 1 - X^{0} has a pole at the substitution")]
    Pole(i64),
    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("truncation depth must be at least 1")]
    Depth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Enumerated,
    Expanded,
    Convention,
}

/// `sum_{m < M} c_m t^m` at a fixed `q`, with `t = q^{-s}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZetaSeries {
    pub q: u64,
    #[serde(serialize_with = "ser_rationals")]
    pub coefficients: Vec<BigRational>,
    pub provenance: Vec<Provenance>,
}

impl ZetaSeries {
    pub fn new(q: u64, coefficients: Vec<BigRational>, provenance: Provenance) -> Self {
        let provenance = vec![provenance; coefficients.len()];
        Self {
            q,
            coefficients,
            provenance,
        }
    }

    pub fn from_counts(q: u64, counts: &[u64]) -> Self {
        let mut s = Self::new(
            q,
            counts
                .iter()
                .map(|&c| BigRational::from_integer(c.into()))
                .collect(),
            Provenance::Enumerated,
        );
        if !s.provenance.is_empty() {
            s.provenance[0] = Provenance::Convention;
        }
        s
    }

    pub fn depth(&self) -> usize {
        self.coefficients.len()
    }

    /// Equality of coefficient values, ignoring provenance.
    pub fn same_values(&self, other: &ZetaSeries) -> bool {
        self.coefficients == other.coefficients
    }

    pub fn integer_coefficients(&self) -> Option<Vec<BigInt>> {
        self.coefficients
            .iter()
            .map(|c| c.is_integer().then(|| c.to_integer()))
            .collect()
    }
}

/// `numerator / (scalar * prod (1 - X^a Y^b)^k)` with a Laurent numerator in `X, Y`.
///
/// Denominator factors are normalized to `b > 0`, or `b = 0` and `a < 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BivariateRational {
    numerator: BTreeMap<(i64, i64), BigInt>,
    denominator: BTreeMap<(i64, i64), u32>,
    scalar: BigInt,
}

impl BivariateRational {
    pub fn zero() -> Self {
        Self {
            numerator: BTreeMap::new(),
            denominator: BTreeMap::new(),
            scalar: BigInt::one(),
        }
    }

    pub fn one() -> Self {
        Self::monomial(BigInt::one(), 0, 0)
    }

    /// `c X^a Y^b`.
    pub fn monomial(c: BigInt, a: i64, b: i64) -> Self {
        let mut numerator = BTreeMap::new();
        if !c.is_zero() {
            numerator.insert((a, b), c);
        }
        Self {
            numerator,
            denominator: BTreeMap::new(),
            scalar: BigInt::one(),
        }
    }

    pub fn from_terms(terms: &[(i64, i64, i64)]) -> Self {
        terms.iter().fold(Self::zero(), |acc, &(c, a, b)| {
            acc.add(&Self::monomial(c.into(), a, b))
        })
    }

    /// `1 / (1 - X^a Y^b)`.
    pub fn geometric(a: i64, b: i64) -> Self {
        Self::one().divide_by_factor(a, b)
    }

    /// Divides by `(1 - X^a Y^b)`, normalizing the factor's orientation.
    pub fn divide_by_factor(&self, a: i64, b: i64) -> Self {
        assert!((a, b) != (0, 0), "trivial denominator factor");
        let mut out = self.clone();
        if b < 0 || (b == 0 && a > 0) {
            // 1/(1 - m) = -m^{-1}/(1 - m^{-1})
            out = out.mul(&Self::monomial(-BigInt::one(), -a, -b));
            *out.denominator.entry((-a, -b)).or_insert(0) += 1;
        } else {
            *out.denominator.entry((a, b)).or_insert(0) += 1;
        }
        out
    }

    pub fn numerator(&self) -> &BTreeMap<(i64, i64), BigInt> {
        &self.numerator
    }

    pub fn denominator(&self) -> &BTreeMap<(i64, i64), u32> {
        &self.denominator
    }

    pub fn scalar(&self) -> &BigInt {
        &self.scalar
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_empty()
    }

    fn mul_numerators(
        a: &BTreeMap<(i64, i64), BigInt>,
        b: &BTreeMap<(i64, i64), BigInt>,
    ) -> BTreeMap<(i64, i64), BigInt> {
        let mut out: BTreeMap<(i64, i64), BigInt> = BTreeMap::new();
        for (&(a1, b1), c1) in a {
            for (&(a2, b2), c2) in b {
                *out.entry((a1 + a2, b1 + b2)).or_insert_with(BigInt::zero) += c1 * c2;
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    fn factor_poly(a: i64, b: i64) -> BTreeMap<(i64, i64), BigInt> {
        let mut m = BTreeMap::new();
        m.insert((0, 0), BigInt::one());
        *m.entry((a, b)).or_insert_with(BigInt::zero) -= 1;
        m.retain(|_, c: &mut BigInt| !c.is_zero());
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut denominator = self.denominator.clone();
        for (&k, &v) in &other.denominator {
            *denominator.entry(k).or_insert(0) += v;
        }
        let mut out = Self {
            numerator: Self::mul_numerators(&self.numerator, &other.numerator),
            denominator,
            scalar: &self.scalar * &other.scalar,
        };
        out.normalize_scalar();
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.numerator.values_mut() {
            *c = -c.clone();
        }
        out
    }

    /// Sum over the least common multiple of the factored denominators.
    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let mut denominator = self.denominator.clone();
        for (&k, &v) in &other.denominator {
            let e = denominator.entry(k).or_insert(0);
            *e = (*e).max(v);
        }
        let lift = |r: &Self| {
            let mut num = r.numerator.clone();
            for (&(a, b), &v) in &denominator {
                let have = r.denominator.get(&(a, b)).copied().unwrap_or(0);
                for _ in have..v {
                    num = Self::mul_numerators(&num, &Self::factor_poly(a, b));
                }
            }
            num
        };
        let scalar = self.scalar.lcm(&other.scalar);
        let mut numerator = BTreeMap::new();
        for (r, num) in [(self, lift(self)), (other, lift(other))] {
            let f = &scalar / &r.scalar;
            for (k, c) in num {
                *numerator.entry(k).or_insert_with(BigInt::zero) += c * &f;
            }
        }
        numerator.retain(|_, c: &mut BigInt| !c.is_zero());
        let mut out = Self {
            numerator,
            denominator,
            scalar,
        };
        out.normalize_scalar();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Divides by a nonzero integer.
    pub fn div_int(&self, d: &BigInt) -> Self {
        assert!(!d.is_zero());
        let mut out = self.clone();
        out.scalar *= d;
        out.normalize_scalar();
        out
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        self.mul(&Self::monomial(c.numer().clone(), 0, 0))
            .div_int(c.denom())
    }

    /// Cancels denominator factors that divide the numerator exactly.
    pub fn reduce(&self) -> Self {
        let mut out = self.clone();
        let factors: Vec<(i64, i64)> = out.denominator.keys().copied().collect();
        for (a, b) in factors {
            while out.denominator.get(&(a, b)).copied().unwrap_or(0) > 0 {
                match Self::divide_exact(&out.numerator, a, b) {
                    Some(q) => {
                        out.numerator = q;
                        let e = out.denominator.get_mut(&(a, b)).unwrap();
                        *e -= 1;
                        if *e == 0 {
                            out.denominator.remove(&(a, b));
                        }
                    }
                    None => break,
                }
            }
        }
        out.normalize_scalar();
        out
    }

    /// `n / (1 - X^a Y^b)` when the division is exact.
    fn divide_exact(
        n: &BTreeMap<(i64, i64), BigInt>,
        a: i64,
        b: i64,
    ) -> Option<BTreeMap<(i64, i64), BigInt>> {
        if n.is_empty() {
            return Some(BTreeMap::new());
        }
        // leading term under the grading (a, b), ties by the key order
        let grade = |k: &(i64, i64)| (a * k.0 + b * k.1, *k);
        let floor = n.keys().map(|k| a * k.0 + b * k.1).min().unwrap();
        let mut rem = n.clone();
        let mut q = BTreeMap::new();
        while let Some((&k, c)) = rem.iter().max_by_key(|(k, _)| grade(k)) {
            if a * k.0 + b * k.1 - (a * a + b * b) < floor {
                return None;
            }
            // c X^k = -X^{(a,b)} t  =>  t = -c X^{k - (a,b)}
            let t = (k.0 - a, k.1 - b);
            let tc = -c.clone();
            *rem.entry(t).or_insert_with(BigInt::zero) -= &tc;
            *rem.entry(k).or_insert_with(BigInt::zero) += &tc;
            rem.retain(|_, c| !c.is_zero());
            *q.entry(t).or_insert_with(BigInt::zero) += tc;
        }
        q.retain(|_, c: &mut BigInt| !c.is_zero());
        Some(q)
    }

    fn normalize_scalar(&mut self) {
        if self.numerator.is_empty() {
            self.scalar = BigInt::one();
            return;
        }
        let mut g = self.scalar.clone();
        for c in self.numerator.values() {
            g = g.gcd(c);
        }
        if self.scalar.is_negative() {
            g = -g;
        }
        if !g.is_one() {
            self.scalar = &self.scalar / &g;
            for c in self.numerator.values_mut() {
                *c = &*c / &g;
            }
        }
    }

    fn x_power(q: &BigRational, a: i64) -> BigRational {
        let p = num_traits::pow(q.clone(), a.unsigned_abs() as usize);
        if a < 0 {
            p.recip()
        } else {
            p
        }
    }

    /// Coefficients of `Y^0 .. Y^{M-1}` after substituting `X = q`.
    pub fn expand(&self, q: u64, depth: usize) -> Result<ZetaSeries, ZetaError> {
        let qq = BigRational::from_integer(q.into());
        let lo = self
            .numerator
            .keys()
            .map(|&(_, b)| b)
            .min()
            .unwrap_or(0)
            .min(0);
        let len = (depth as i64 - lo).max(0) as usize;
        let mut den = vec![BigRational::zero(); len];
        if len > 0 {
            den[0] = BigRational::one();
        }
        for (&(a, b), &mult) in &self.denominator {
            let c = Self::x_power(&qq, a);
            for _ in 0..mult {
                if b == 0 {
                    if c.is_one() {
                        return Err(ZetaError::Pole(a));
                    }
                    let f = (BigRational::one() - &c).recip();
                    for x in den.iter_mut() {
                        *x *= &f;
                    }
                } else {
                    // multiply by sum_k c^k Y^{bk}: den[n] += c * den[n - b]
                    let b = b as usize;
                    for n in b..len {
                        let prev = den[n - b].clone();
                        den[n] += &c * prev;
                    }
                }
            }
        }
        let scalar = BigRational::from_integer(self.scalar.clone());
        let mut out = vec![BigRational::zero(); depth];
        for (&(a, b), c) in &self.numerator {
            let coeff = BigRational::from_integer(c.clone()) * Self::x_power(&qq, a) / &scalar;
            for (n, slot) in out.iter_mut().enumerate() {
                let k = n as i64 - b;
                if k >= 0 && (k as usize) < len {
                    *slot += &coeff * &den[k as usize];
                }
            }
        }
        Ok(ZetaSeries::new(q, out, Provenance::Expanded))
    }

    /// Exact value at `X = q`, `Y = y` (all factors must be nonzero).
    pub fn evaluate(&self, q: &BigRational, y: &BigRational) -> Option<BigRational> {
        let mono = |a: i64, b: i64| -> Option<BigRational> {
            if y.is_zero() && b < 0 {
                return None;
            }
            let yb = num_traits::pow(y.clone(), b.unsigned_abs() as usize);
            Some(Self::x_power(q, a) * if b < 0 { yb.recip() } else { yb })
        };
        let mut num = BigRational::zero();
        for (&(a, b), c) in &self.numerator {
            num += BigRational::from_integer(c.clone()) * mono(a, b)?;
        }
        let mut den = BigRational::from_integer(self.scalar.clone());
        for (&(a, b), &k) in &self.denominator {
            den *= num_traits::pow(BigRational::one() - mono(a, b)?, k as usize);
        }
        (!den.is_zero()).then(|| num / den)
    }

    pub fn numerator_string(&self) -> String {
        format_poly(&self.numerator)
    }

    pub fn denominator_string(&self) -> String {
        let mut parts = Vec::new();
        if !self.scalar.is_one() {
            parts.push(self.scalar.to_string());
        }
        for (&(a, b), &k) in &self.denominator {
            let f = format!("(1 - {})", format_monomial(&BigInt::one(), a, b));
            parts.push(if k == 1 { f } else { format!("{f}^{k}") });
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

fn format_monomial(c: &BigInt, a: i64, b: i64) -> String {
    let mut vars = Vec::new();
    for (name, e) in [("X", a), ("Y", b)] {
        match e {
            0 => {}
            1 => vars.push(name.to_string()),
            _ => vars.push(format!("{name}^{e}")),
        }
    }
    match (c.is_one(), vars.is_empty()) {
        (_, true) => c.to_string(),
        (true, false) => vars.join("*"),
        (false, false) if c == &BigInt::from(-1) => format!("-{}", vars.join("*")),
        (false, false) => format!("{c}*{}", vars.join("*")),
    }
}

fn format_poly(p: &BTreeMap<(i64, i64), BigInt>) -> String {
    if p.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    // increasing Y degree, then X degree
    let mut terms: Vec<_> = p.iter().collect();
    terms.sort_by_key(|(&(a, b), _)| (b, a));
    for (k, (&(a, b), c)) in terms.into_iter().enumerate() {
        let m = format_monomial(&c.abs(), a, b);
        if k == 0 {
            if c.is_negative() {
                s.push('-');
            }
            s.push_str(&m);
        } else {
            s.push_str(if c.is_negative() { " - " } else { " + " });
            s.push_str(&m);
        }
    }
    s
}

impl fmt::Display for BivariateRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}) / ({})",
            self.numerator_string(),
            self.denominator_string()
        )
    }
}

impl Serialize for BivariateRational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("BivariateRational", 3)?;
        st.serialize_field("numerator", &self.numerator_string())?;
        st.serialize_field("denominator", &self.denominator_string())?;
        st.serialize_field("display", &self.to_string())?;
        st.end()
    }
}

/// Closed forms attached to the Heisenberg group over `o`.
pub mod heisenberg {
    use super::BivariateRational;

    /// `(1 - X^{-1})(1 - X^{-2}) / ((1 - X^{-1} Y)(1 - X^{-2} Y))`.
    pub fn igusa_factor() -> BivariateRational {
        BivariateRational::from_terms(&[(1, 0, 0), (-1, -1, 0), (-1, -2, 0), (1, -3, 0)])
            .divide_by_factor(-1, 1)
            .divide_by_factor(-2, 1)
    }

    /// `(1 - Y) / ((1 - X Y)(1 - X^2 Y))`, the form that matches enumeration.
    pub fn class_zeta() -> BivariateRational {
        BivariateRational::from_terms(&[(1, 0, 0), (-1, 0, 1)])
            .divide_by_factor(1, 1)
            .divide_by_factor(2, 1)
    }

    /// The five-term form `(1 + Y - XY - X^2Y + X^3Y)/((1 - XY)(1 - X^2Y)(1 - X^3Y))`.
    pub fn displayed_class_zeta() -> BivariateRational {
        BivariateRational::from_terms(&[(1, 0, 0), (1, 0, 1), (-1, 1, 1), (-1, 2, 1), (1, 3, 1)])
            .divide_by_factor(1, 1)
            .divide_by_factor(2, 1)
            .divide_by_factor(3, 1)
    }
}

/// Class counts of a family at levels `1..M-1`.
#[derive(Debug, Clone, Serialize)]
pub struct CcResult {
    pub family: String,
    pub ring: String,
    pub series: ZetaSeries,
    pub levels: Vec<ClassReport>,
}

fn check_depth(depth: usize) -> Result<(), ZetaError> {
    if depth == 0 {
        Err(ZetaError::Depth)
    } else {
        Ok(())
    }
}

pub fn cc_zeta(
    family: &GroupFamily,
    ring: &RingSpec,
    depth: usize,
    cap: usize,
    pair_limit: usize,
) -> Result<CcResult, ZetaError> {
    check_depth(depth)?;
    let mut counts = vec![1u64];
    let mut levels = Vec::new();
    for m in 1..depth as u32 {
        let g = family.build(&ring.at_level(m)?, cap)?;
        let rep = conjugacy_class_count(&g, pair_limit);
        counts.push(rep.classes);
        levels.push(rep);
    }
    Ok(CcResult {
        family: family.to_string(),
        ring: ring.literal(),
        series: ZetaSeries::from_counts(ring.q(), &counts),
        levels,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeckeLevel {
    pub level: u32,
    pub group_order: u64,
    pub p1_order: u64,
    pub p2_order: u64,
    pub double_cosets: u64,
    pub pair_count: u64,
    /// Double cosets times `|P1| |P2|` equals the pair count.
    pub pair_identity: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeckeResult {
    pub family: String,
    pub s1: String,
    pub s2: String,
    pub ring: String,
    pub series: ZetaSeries,
    pub levels: Vec<HeckeLevel>,
}

pub fn hecke_level(
    g: &GroupTable,
    p1: &GroupTable,
    p2: &GroupTable,
) -> Result<HeckeLevel, ZetaError> {
    let b = double_coset_count(g, p1, p2)?;
    let e = hecke_pair_count(g, p1, p2)?;
    let (o1, o2) = (p1.len() as u64, p2.len() as u64);
    Ok(HeckeLevel {
        level: g.level(),
        group_order: g.len() as u64,
        p1_order: o1,
        p2_order: o2,
        double_cosets: b,
        pair_count: e,
        pair_identity: b * o1 * o2 == e,
    })
}

pub fn hecke_zeta(
    family: &GroupFamily,
    s1: &GroupFamily,
    s2: &GroupFamily,
    ring: &RingSpec,
    depth: usize,
    cap: usize,
) -> Result<HeckeResult, ZetaError> {
    check_depth(depth)?;
    let mut counts = vec![1u64];
    let mut levels = Vec::new();
    for m in 1..depth as u32 {
        let r = ring.at_level(m)?;
        let lvl = hecke_level(
            &family.build(&r, cap)?,
            &s1.build(&r, cap)?,
            &s2.build(&r, cap)?,
        )?;
        counts.push(lvl.double_cosets);
        levels.push(lvl);
    }
    Ok(HeckeResult {
        family: family.to_string(),
        s1: s1.to_string(),
        s2: s2.to_string(),
        ring: ring.literal(),
        series: ZetaSeries::from_counts(ring.q(), &counts),
        levels,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prop62Level {
    pub level: u32,
    /// Pairs of the top-level group commuting modulo level `m`.
    pub pairs_at_depth: u64,
    #[serde(serialize_with = "ser_rational")]
    pub measure: BigRational,
    pub group_order: u64,
    pub classes: u64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop62Report {
    pub family: String,
    pub ring: String,
    pub top_level: u32,
    pub levels: Vec<Prop62Level>,
    pub kernel_agrees: bool,
}

impl Prop62Report {
    pub fn holds(&self) -> bool {
        self.levels.iter().all(|l| l.holds) && self.kernel_agrees
    }
}

/// Measures `nu(W_m)` of pairs commuting to depth `m` in the top-level group
/// and checks `nu(W_m) |G_m| = c_m` for `0 <= m < M`.
pub fn prop62_consistency(
    family: &GroupFamily,
    ring: &RingSpec,
    depth: usize,
    cap: usize,
) -> Result<Prop62Report, ZetaError> {
    if depth < 2 {
        return Err(ZetaError::Depth);
    }
    let top = depth as u32 - 1;
    let tables = family.tower(ring, top, cap)?;
    let g_top = tables.last().expect("non-empty tower");
    let hist = commutator_depth_histogram(g_top);
    let total = BigRational::from_integer((g_top.len() as u64).pow(2).into());
    // spot-check the kernel characterization of w on a stride of pairs
    let n = g_top.len() as u32;
    let stride = (n / 61).max(1);
    let kernel_agrees = (0..n).step_by(stride as usize).all(|x| {
        (0..n).step_by(stride as usize).all(|y| {
            crate::groups::commutator_depth(g_top, x, y)
                == crate::groups::commutator_depth_by_kernel(g_top, x, y)
        })
    });
    let mut levels = Vec::new();
    for m in 0..depth as u32 {
        let at_least: u64 = hist[m as usize..].iter().sum();
        let measure = BigRational::from_integer(at_least.into()) / &total;
        let (order, classes) = if m == 0 {
            (1, 1)
        } else {
            let g = &tables[m as usize - 1];
            (
                g.len() as u64,
                crate::groups::class_partition(g).len() as u64,
            )
        };
        let holds = &measure * BigRational::from_integer(order.into())
            == BigRational::from_integer(classes.into());
        levels.push(Prop62Level {
            level: m,
            pairs_at_depth: at_least,
            measure,
            group_order: order,
            classes,
            holds,
        });
    }
    Ok(Prop62Report {
        family: family.to_string(),
        ring: ring.literal(),
        top_level: top,
        levels,
        kernel_agrees,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prop73Level {
    pub level: u32,
    pub pairs_at_depth: u64,
    /// `nu(W_m) |G_m|^2`; must be an integer.
    #[serde(serialize_with = "ser_rational")]
    pub e_from_measure: BigRational,
    pub e_direct: u64,
    pub double_cosets: u64,
    pub p1_order: u64,
    pub p2_order: u64,
    pub holds: bool,
    /// `|P_S(m)| = |P_S(1)| q^{(m-1) dim P_S}` for both parabolics; recorded, not asserted.
    pub parabolic_order_law: (bool, bool),
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop73Report {
    pub family: String,
    pub s1: String,
    pub s2: String,
    pub ring: String,
    pub top_level: u32,
    pub levels: Vec<Prop73Level>,
    pub lambda_agrees: bool,
}

impl Prop73Report {
    pub fn holds(&self) -> bool {
        self.levels.iter().all(|l| l.holds) && self.lambda_agrees
    }
}

/// Level sets of `w(x, y) = min(lambda_2(y), lambda_1(x y x^{-1}))` in the
/// top-level group against `b_m |P1_m| |P2_m|` for `1 <= m < M`.
pub fn prop73_consistency(
    family: &GroupFamily,
    s1: &GroupFamily,
    s2: &GroupFamily,
    ring: &RingSpec,
    depth: usize,
    cap: usize,
) -> Result<Prop73Report, ZetaError> {
    if depth < 2 {
        return Err(ZetaError::Depth);
    }
    let top = depth as u32 - 1;
    let gs = family.tower(ring, top, cap)?;
    let t1 = ParabolicTower::new(s1.tower(ring, top, cap)?)?;
    let t2 = ParabolicTower::new(s2.tower(ring, top, cap)?)?;
    let g_top = gs.last().expect("non-empty tower");
    let hist = parabolic_depth_histogram(g_top, &t1, &t2);
    let total = BigRational::from_integer((g_top.len() as u64).pow(2).into());
    let n = g_top.len() as u32;
    let stride = (n / 97).max(1) as usize;
    let lambda_agrees = (0..n)
        .step_by(stride)
        .all(|x| t1.lambda_by_projection(g_top, x) == t1.lambda_by_coset(g_top, x));
    let q = ring.q();
    let (d1, d2) = (s1.group_dim()?, s2.group_dim()?);
    let law = |t: &ParabolicTower, m: u32, d: usize| {
        crate::groups::order_law_holds(t.at(m).len() as u64, t.at(1).len() as u64, q, m, d)
    };
    let mut levels = Vec::new();
    for m in 1..depth as u32 {
        let at_least: u64 = hist[m as usize..].iter().sum();
        let g = &gs[m as usize - 1];
        let gm = BigRational::from_integer((g.len() as u64).into());
        let e_from_measure = BigRational::from_integer(at_least.into()) / &total * &gm * &gm;
        let lvl = hecke_level(g, t1.at(m), t2.at(m))?;
        let holds = lvl.pair_identity
            && e_from_measure.is_integer()
            && e_from_measure == BigRational::from_integer(lvl.pair_count.into());
        levels.push(Prop73Level {
            level: m,
            pairs_at_depth: at_least,
            e_from_measure,
            e_direct: lvl.pair_count,
            double_cosets: lvl.double_cosets,
            p1_order: lvl.p1_order,
            p2_order: lvl.p2_order,
            holds,
            parabolic_order_law: (law(&t1, m, d1), law(&t2, m, d2)),
        });
    }
    Ok(Prop73Report {
        family: family.to_string(),
        s1: s1.to_string(),
        s2: s2.to_string(),
        ring: ring.literal(),
        top_level: top,
        levels,
        lambda_agrees,
    })
}

/// What a transfer comparison counts at each level.
#[derive(Debug, Clone)]
pub enum TransferQuantity {
    Classes(GroupFamily),
    DoubleCosets {
        group: GroupFamily,
        s1: GroupFamily,
        s2: GroupFamily,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferRow {
    pub p: u64,
    pub f: u32,
    pub q: u64,
    pub mixed: Vec<String>,
    pub equal: Vec<String>,
    pub equal_at_level: Vec<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    pub quantity: String,
    pub levels: usize,
    pub rows: Vec<TransferRow>,
}

impl TransferReport {
    pub fn all_equal(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.equal_at_level.iter().all(|&b| b))
    }
}

fn counts_for(
    quantity: &TransferQuantity,
    ring: &RingSpec,
    depth: usize,
    cap: usize,
) -> Result<Vec<u64>, ZetaError> {
    Ok(match quantity {
        TransferQuantity::Classes(f) => cc_zeta(f, ring, depth, cap, 0)?
            .levels
            .iter()
            .map(|l| l.classes)
            .collect(),
        TransferQuantity::DoubleCosets { group, s1, s2 } => {
            hecke_zeta(group, s1, s2, ring, depth, cap)?
                .levels
                .iter()
                .map(|l| l.double_cosets)
                .collect()
        }
    })
}

/// Side-by-side counts over `W(F_q)`-type and `F_q[[t]]`-type rings with the same `q`.
pub fn transfer_report(
    quantity: &TransferQuantity,
    primes: &[u64],
    f: u32,
    depth: usize,
    cap: usize,
) -> Result<TransferReport, ZetaError> {
    check_depth(depth)?;
    let mut rows = Vec::new();
    for &p in primes {
        let top = (depth as u32 - 1).max(1);
        let mixed_ring = make_ring(RingKind::MixedChar, p, f, top)?;
        let equal_ring = make_ring(RingKind::EqualChar, p, f, top)?;
        let a = counts_for(quantity, &mixed_ring, depth, cap)?;
        let b = counts_for(quantity, &equal_ring, depth, cap)?;
        rows.push(TransferRow {
            p,
            f,
            q: mixed_ring.q(),
            equal_at_level: a.iter().zip(&b).map(|(x, y)| x == y).collect(),
            mixed: a.iter().map(u64::to_string).collect(),
            equal: b.iter().map(u64::to_string).collect(),
        });
    }
    let quantity = match quantity {
        TransferQuantity::Classes(f) => format!("classes {f}"),
        TransferQuantity::DoubleCosets { group, s1, s2 } => {
            format!("double-cosets {group} {s1} {s2}")
        }
    };
    Ok(TransferReport {
        quantity,
        levels: depth,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EulerReport {
    pub family: String,
    pub n: u64,
    pub n1: u64,
    pub n2: u64,
    pub classes: u64,
    pub classes_1: u64,
    pub classes_2: u64,
    pub multiplicative: bool,
}

/// `cc(G(Z/n1 n2)) = cc(G(Z/n1)) cc(G(Z/n2))` for coprime `n1, n2`.
pub fn euler_multiplicativity(
    family: &GroupFamily,
    n1: u64,
    n2: u64,
    cap: usize,
) -> Result<EulerReport, ZetaError> {
    if n1.gcd(&n2) != 1 {
        return Err(ZetaError::NotCoprime(n1, n2));
    }
    let count = |n: u64| -> Result<u64, ZetaError> {
        if n == 1 {
            return Ok(1);
        }
        let g = family.build(&make_composite(n)?, cap)?;
        Ok(crate::groups::class_partition(&g).len() as u64)
    };
    let (c, c1, c2) = (count(n1 * n2)?, count(n1)?, count(n2)?);
    Ok(EulerReport {
        family: family.to_string(),
        n: n1 * n2,
        n1,
        n2,
        classes: c,
        classes_1: c1,
        classes_2: c2,
        multiplicative: c == c1 * c2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::DEFAULT_CAP;

    fn ints(s: &ZetaSeries) -> Vec<i64> {
        s.integer_coefficients()
            .unwrap()
            .iter()
            .map(|c| c.try_into().unwrap())
            .collect()
    }

    #[test]
    fn expansions() {
        assert_eq!(
            ints(&BivariateRational::geometric(0, 1).expand(2, 5).unwrap()),
            vec![1; 5]
        );
        assert_eq!(
            ints(&heisenberg::class_zeta().expand(2, 4).unwrap()),
            vec![1, 5, 22, 92]
        );
        assert_eq!(
            ints(&BivariateRational::geometric(0, 2).expand(3, 5).unwrap()),
            vec![1, 0, 1, 0, 1]
        );
    }

    #[test]
    fn displayed_form_has_wrong_linear_coefficient() {
        for q in [2u64, 3, 5] {
            let s = heisenberg::displayed_class_zeta().expand(q, 2).unwrap();
            assert_eq!(
                s.coefficients[1],
                BigRational::from_integer((1 + 2 * q.pow(3)).into())
            );
            assert_ne!(
                s.coefficients[1],
                BigRational::from_integer((q * q + q - 1).into())
            );
        }
    }

    #[test]
    fn igusa_factor_first_terms() {
        // (1 - 1/q)(1 - 1/q^2) sum_{i,j} q^{-i-2j} Y^{i+j}; at Y^1: (1-1/q)(1-1/q^2)(1/q + 1/q^2)
        let s = heisenberg::igusa_factor().expand(2, 2).unwrap();
        let base = BigRational::new(3.into(), 8.into());
        assert_eq!(s.coefficients[0], base);
        assert_eq!(
            s.coefficients[1],
            base * BigRational::new(3.into(), 4.into())
        );
    }

    #[test]
    fn add_and_mul_agree_with_expansion() {
        let a = heisenberg::class_zeta();
        let b =
            BivariateRational::geometric(-1, 1).add(&BivariateRational::monomial(3.into(), 2, -1));
        let sum = a.add(&b).expand(3, 6).unwrap();
        let prod = a.mul(&b).expand(3, 6).unwrap();
        let (ea, eb) = (a.expand(3, 7).unwrap(), b.expand(3, 7).unwrap());
        for n in 0..6 {
            assert_eq!(
                sum.coefficients[n],
                &ea.coefficients[n] + &eb.coefficients[n]
            );
        }
        // b has a Y^{-1} term, so compare the product against a Laurent convolution
        let b_neg = BigRational::from_integer(27.into());
        for n in 0..6 {
            let mut c = &ea.coefficients[n + 1] * &b_neg;
            for k in 0..=n {
                c += &ea.coefficients[k] * &eb.coefficients[n - k];
            }
            assert_eq!(prod.coefficients[n], c);
        }
    }

    #[test]
    fn factor_normalization() {
        let r = BivariateRational::geometric(2, 0);
        assert_eq!(
            r.denominator().keys().copied().collect::<Vec<_>>(),
            vec![(-2, 0)]
        );
        assert_eq!(
            r.expand(2, 1).unwrap().coefficients[0],
            BigRational::new((-1).into(), 3.into())
        );
        assert!(matches!(
            BivariateRational::geometric(0, 1)
                .divide_by_factor(0, -1)
                .expand(2, 1),
            Ok(_)
        ));
    }

    #[test]
    fn heisenberg_series() {
        let f: GroupFamily = "heisenberg".parse().unwrap();
        let r2 = make_ring(RingKind::MixedChar, 2, 1, 3).unwrap();
        assert_eq!(
            ints(&cc_zeta(&f, &r2, 3, DEFAULT_CAP, 1000).unwrap().series),
            vec![1, 5, 22]
        );
        let r3 = make_ring(RingKind::MixedChar, 3, 1, 2).unwrap();
        assert_eq!(
            ints(&cc_zeta(&f, &r3, 3, DEFAULT_CAP, 0).unwrap().series),
            vec![1, 11, 105]
        );
    }

    #[test]
    fn hecke_series() {
        let g: GroupFamily = "chevalley:A1".parse().unwrap();
        let b: GroupFamily = "borel:A1".parse().unwrap();
        let r = make_ring(RingKind::MixedChar, 2, 1, 2).unwrap();
        let res = hecke_zeta(&g, &b, &b, &r, 2, DEFAULT_CAP).unwrap();
        assert_eq!(ints(&res.series), vec![1, 2]);
        // |B(F_2)| = 2, so e = b |B|^2 = 8
        assert_eq!((res.levels[0].p1_order, res.levels[0].pair_count), (2, 8));
        let full = hecke_zeta(&g, &g, &g, &r, 3, DEFAULT_CAP).unwrap();
        assert_eq!(ints(&full.series), vec![1, 1, 1]);
        let g2: GroupFamily = "chevalley:A2".parse().unwrap();
        let b2: GroupFamily = "borel:A2".parse().unwrap();
        assert_eq!(
            ints(
                &hecke_zeta(&g2, &b2, &b2, &r, 2, DEFAULT_CAP)
                    .unwrap()
                    .series
            ),
            vec![1, 6]
        );
    }

    #[test]
    fn proposition_chains() {
        let f: GroupFamily = "heisenberg".parse().unwrap();
        let r = make_ring(RingKind::MixedChar, 2, 1, 3).unwrap();
        let rep = prop62_consistency(&f, &r, 3, DEFAULT_CAP).unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert_eq!(rep.levels[1].classes, 5);
        let g: GroupFamily = "chevalley:A1".parse().unwrap();
        let b: GroupFamily = "borel:A1".parse().unwrap();
        for kind in [RingKind::MixedChar, RingKind::EqualChar] {
            let r = make_ring(kind, 2, 1, 2).unwrap();
            let rep = prop73_consistency(&g, &b, &b, &r, 3, DEFAULT_CAP).unwrap();
            assert!(rep.holds(), "{rep:?}");
            assert_eq!(rep.levels[0].double_cosets, 2);
        }
    }

    #[test]
    fn euler_products() {
        let f: GroupFamily = "heisenberg".parse().unwrap();
        let r = euler_multiplicativity(&f, 2, 3, DEFAULT_CAP).unwrap();
        assert_eq!((r.classes, r.multiplicative), (55, true));
        assert!(euler_multiplicativity(&f, 2, 4, DEFAULT_CAP).is_err());
        assert!(
            euler_multiplicativity(&f, 1, 5, DEFAULT_CAP)
                .unwrap()
                .multiplicative
        );
    }

    #[test]
    fn transfer_small() {
        let q = TransferQuantity::Classes("heisenberg".parse().unwrap());
        let rep = transfer_report(&q, &[2, 3], 1, 3, DEFAULT_CAP).unwrap();
        assert!(rep.all_equal());
    }
}
