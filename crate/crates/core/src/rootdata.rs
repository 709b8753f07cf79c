//! Root systems of classical type with their positive/simple bookkeeping.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RootError {
    #[error("unsupported root system {0}")]
    Unsupported(String),
    #[error("vector {0:?} is not a root")]
    NotARoot(Vec<i32>),
    #[error("root {0} is not simple")]
    NotSimple(String),
    #[error("cannot parse root literal `{0}`")]
    Literal(String),
    #[error("root set {0} is not closed")]
    NotClosed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Family {
    A,
    B,
    C,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CartanType {
    pub family: Family,
    pub rank: usize,
}

impl fmt::Display for CartanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{}", self.family, self.rank)
    }
}

impl FromStr for CartanType {
    type Err = RootError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let mut chars = s.chars();
        let family = match chars.next().map(|c| c.to_ascii_uppercase()) {
            Some('A') => Family::A,
            Some('B') => Family::B,
            Some('C') => Family::C,
            Some('D') => Family::D,
            _ => return Err(RootError::Unsupported(s.to_string())),
        };
        let rank: usize = chars
            .as_str()
            .parse()
            .map_err(|_| RootError::Unsupported(s.to_string()))?;
        let t = CartanType { family, rank };
        if !t.is_supported() {
            return Err(RootError::Unsupported(s.to_string()));
        }
        Ok(t)
    }
}

impl CartanType {
    pub fn is_supported(&self) -> bool {
        match self.family {
            Family::A => (1..=4).contains(&self.rank),
            Family::B | Family::C => (2..=4).contains(&self.rank),
            Family::D => self.rank == 4,
        }
    }
}

/// Index of a root inside [`RootSystem::roots`].
pub type RootId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Root {
    /// Coefficients with respect to the simple roots.
    pub simple: Vec<i32>,
    /// Euclidean coordinates in the standard realization.
    pub coords: Vec<i32>,
}

impl Root {
    pub fn height(&self) -> i32 {
        self.simple.iter().sum()
    }
}

/// A root system. Roots `0..r` are the positive roots in the fixed total
/// order (height, then simple-root coordinates in decreasing lexicographic
/// order, so `a1` precedes `a2`); root `r + i` is the negative of root `i`.
/// The simple roots are `0..rank`.
#[derive(Debug, Clone)]
pub struct RootSystem {
    cartan: CartanType,
    roots: Vec<Root>,
    num_positive: usize,
}

fn simple_root_coords(t: CartanType) -> (usize, Vec<Vec<i32>>) {
    let l = t.rank;
    let dim = if t.family == Family::A { l + 1 } else { l };
    let e = |i: usize| -> Vec<i32> {
        let mut v = vec![0; dim];
        v[i] = 1;
        v
    };
    let diff =
        |i: usize, j: usize| -> Vec<i32> { e(i).iter().zip(e(j)).map(|(a, b)| a - b).collect() };
    let mut simple: Vec<Vec<i32>> = (0..l.saturating_sub(1)).map(|i| diff(i, i + 1)).collect();
    match t.family {
        Family::A => simple.push(diff(l - 1, l)),
        Family::B => simple.push(e(l - 1)),
        Family::C => simple.push(e(l - 1).iter().map(|x| 2 * x).collect()),
        Family::D => simple.push(e(l - 2).iter().zip(e(l - 1)).map(|(a, b)| a + b).collect()),
    }
    (dim, simple)
}

fn all_root_coords(t: CartanType) -> Vec<Vec<i32>> {
    let l = t.rank;
    let mut out = Vec::new();
    if t.family == Family::A {
        for i in 0..=l {
            for j in 0..=l {
                if i != j {
                    let mut v = vec![0; l + 1];
                    v[i] = 1;
                    v[j] = -1;
                    out.push(v);
                }
            }
        }
        return out;
    }
    for i in 0..l {
        for j in i + 1..l {
            for (si, sj) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let mut v = vec![0; l];
                v[i] = si;
                v[j] = sj;
                out.push(v);
            }
        }
        for s in [1, -1] {
            let mut v = vec![0; l];
            match t.family {
                Family::B => v[i] = s,
                Family::C => v[i] = 2 * s,
                _ => continue,
            }
            out.push(v);
        }
    }
    out
}

/// Solves `sum_i c_i simple_i = v` over the rationals; the result must be integral.
fn simple_coefficients(simple: &[Vec<i32>], v: &[i32]) -> Option<Vec<i32>> {
    let l = simple.len();
    let dim = v.len();
    // augmented matrix dim x (l + 1), columns are simple roots
    let mut a: Vec<Vec<i64>> = (0..dim)
        .map(|r| {
            let mut row: Vec<i64> = simple.iter().map(|s| s[r] as i64).collect();
            row.push(v[r] as i64);
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..l {
        let Some(piv) = (row..dim).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(row, piv);
        for r in 0..dim {
            if r != row && a[r][col] != 0 {
                let (x, y) = (a[row][col], a[r][col]);
                for c in 0..=l {
                    a[r][c] = a[r][c] * x - a[row][c] * y;
                }
            }
        }
        pivots.push((row, col));
        row += 1;
    }
    if (row..dim).any(|r| a[r][l] != 0) {
        return None;
    }
    let mut out = vec![0; l];
    for (r, c) in pivots {
        if a[r][l] % a[r][c] != 0 {
            return None;
        }
        out[c] = (a[r][l] / a[r][c]) as i32;
    }
    Some(out)
}

impl RootSystem {
    pub fn new(cartan: CartanType) -> Result<Self, RootError> {
        if !cartan.is_supported() {
            return Err(RootError::Unsupported(cartan.to_string()));
        }
        let (_, simple) = simple_root_coords(cartan);
        let mut positive: Vec<Root> = Vec::new();
        for coords in all_root_coords(cartan) {
            let c = simple_coefficients(&simple, &coords)
                .ok_or_else(|| RootError::NotARoot(coords.clone()))?;
            if c.iter().all(|&x| x >= 0) {
                positive.push(Root { simple: c, coords });
            }
        }
        positive.sort_by(|a, b| {
            a.height()
                .cmp(&b.height())
                .then_with(|| b.simple.cmp(&a.simple))
        });
        let num_positive = positive.len();
        let mut roots = positive.clone();
        roots.extend(positive.iter().map(|r| Root {
            simple: r.simple.iter().map(|x| -x).collect(),
            coords: r.coords.iter().map(|x| -x).collect(),
        }));
        Ok(Self {
            cartan,
            roots,
            num_positive,
        })
    }

    pub fn build(family: Family, rank: usize) -> Result<Self, RootError> {
        Self::new(CartanType { family, rank })
    }

    pub fn cartan_type(&self) -> CartanType {
        self.cartan
    }
    pub fn rank(&self) -> usize {
        self.cartan.rank
    }
    /// Number of positive roots.
    pub fn num_positive(&self) -> usize {
        self.num_positive
    }
    pub fn roots(&self) -> &[Root] {
        &self.roots
    }
    pub fn root(&self, id: RootId) -> &Root {
        &self.roots[id]
    }
    pub fn len(&self) -> usize {
        self.roots.len()
    }
    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }
    pub fn positive(&self) -> impl Iterator<Item = RootId> {
        0..self.num_positive
    }
    pub fn negative(&self) -> impl Iterator<Item = RootId> {
        self.num_positive..2 * self.num_positive
    }
    pub fn simple(&self) -> impl Iterator<Item = RootId> {
        0..self.cartan.rank
    }
    pub fn is_positive(&self, id: RootId) -> bool {
        id < self.num_positive
    }
    pub fn is_simple(&self, id: RootId) -> bool {
        id < self.cartan.rank
    }
    pub fn negate(&self, id: RootId) -> RootId {
        if id < self.num_positive {
            id + self.num_positive
        } else {
            id - self.num_positive
        }
    }
    /// Dimension of the Lie algebra, `rank + |roots|`.
    pub fn lie_dimension(&self) -> usize {
        self.rank() + self.len()
    }

    pub fn find(&self, simple: &[i32]) -> Option<RootId> {
        self.roots.iter().position(|r| r.simple == simple)
    }

    pub fn find_coords(&self, coords: &[i32]) -> Option<RootId> {
        self.roots.iter().position(|r| r.coords == coords)
    }

    /// `alpha + beta` if it is a root.
    pub fn add(&self, a: RootId, b: RootId) -> Option<RootId> {
        let s: Vec<i32> = self.roots[a]
            .simple
            .iter()
            .zip(&self.roots[b].simple)
            .map(|(x, y)| x + y)
            .collect();
        self.find(&s)
    }

    /// `k * alpha + beta` if it is a root.
    pub fn add_multiple(&self, k: i32, a: RootId, b: RootId) -> Option<RootId> {
        let s: Vec<i32> = self.roots[a]
            .simple
            .iter()
            .zip(&self.roots[b].simple)
            .map(|(x, y)| k * x + y)
            .collect();
        self.find(&s)
    }

    pub fn inner(&self, a: RootId, b: RootId) -> i32 {
        self.roots[a]
            .coords
            .iter()
            .zip(&self.roots[b].coords)
            .map(|(x, y)| x * y)
            .sum()
    }

    /// Cartan pairing `<alpha, beta> = 2 (alpha, beta) / (beta, beta)`.
    pub fn pairing(&self, a: RootId, b: RootId) -> i32 {
        let num = 2 * self.inner(a, b);
        let den = self.inner(b, b);
        debug_assert_eq!(num % den, 0);
        num / den
    }

    /// Pairing of an arbitrary vector in root (simple) coordinates with a root.
    pub fn pairing_vector(&self, simple_coeffs: &[i32], b: RootId) -> i32 {
        (0..self.rank())
            .map(|i| simple_coeffs[i] * self.pairing(i, b))
            .sum()
    }

    /// `rho` = sum of the positive roots, in simple-root coordinates.
    pub fn rho(&self) -> Vec<i32> {
        let mut rho = vec![0; self.rank()];
        for id in self.positive() {
            for (r, x) in rho.iter_mut().zip(&self.roots[id].simple) {
                *r += x;
            }
        }
        rho
    }

    /// `<rho, beta>` for a simple root `beta`.
    pub fn rho_pairing(&self, beta: RootId) -> Result<i32, RootError> {
        if !self.is_simple(beta) {
            return Err(RootError::NotSimple(self.label(beta)));
        }
        Ok(self.positive().map(|d| self.pairing(d, beta)).sum())
    }

    /// The `alpha`-string through `beta`: `(p, q)` with `beta - p alpha, ..., beta + q alpha` roots.
    pub fn string(&self, alpha: RootId, beta: RootId) -> (i32, i32) {
        let mut p = 0;
        while self.add_multiple(-(p + 1), alpha, beta).is_some() {
            p += 1;
        }
        let mut q = 0;
        while self.add_multiple(q + 1, alpha, beta).is_some() {
            q += 1;
        }
        (p, q)
    }

    /// Coroot of `alpha` in the basis of simple coroots.
    pub fn coroot_coefficients(&self, alpha: RootId) -> Vec<i32> {
        let aa = self.inner(alpha, alpha);
        (0..self.rank())
            .map(|i| {
                let num = self.roots[alpha].simple[i] * self.inner(i, i);
                debug_assert_eq!(num % aa, 0);
                num / aa
            })
            .collect()
    }

    /// Human-readable label such as `a1+2a2` or `-a1-a2`.
    pub fn label(&self, id: RootId) -> String {
        let mut s = String::new();
        for (i, &c) in self.roots[id].simple.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if c < 0 {
                s.push('-');
            } else if !s.is_empty() {
                s.push('+');
            }
            if c.abs() != 1 {
                s.push_str(&c.abs().to_string());
            }
            s.push_str(&format!("a{}", i + 1));
        }
        s
    }

    /// Parses a root literal like `a1+a2`, `-a2`, `a1+2a2` or `2*a2`.
    pub fn parse_root(&self, text: &str) -> Result<RootId, RootError> {
        let err = || RootError::Literal(text.to_string());
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(err());
        }
        let mut coeffs = vec![0i32; self.rank()];
        let bytes = t.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let mut sign = 1;
            if bytes[i] == b'+' || bytes[i] == b'-' {
                if bytes[i] == b'-' {
                    sign = -1;
                }
                i += 1;
            } else if i != 0 {
                return Err(err());
            }
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let k: i32 = if i > start {
                t[start..i].parse().map_err(|_| err())?
            } else {
                1
            };
            if i < bytes.len() && bytes[i] == b'*' {
                i += 1;
            }
            if i >= bytes.len() || bytes[i] != b'a' {
                return Err(err());
            }
            i += 1;
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let idx: usize = t[start..i].parse().map_err(|_| err())?;
            if idx == 0 || idx > self.rank() {
                return Err(err());
            }
            coeffs[idx - 1] += sign * k;
        }
        self.find(&coeffs).ok_or(RootError::NotARoot(coeffs))
    }

    /// Parses a comma-separated root set. The keywords `all`, `positive`
    /// (alias `borel`), `negative` and `none` are accepted.
    pub fn parse_root_set(&self, text: &str) -> Result<BTreeSet<RootId>, RootError> {
        match text.trim() {
            "all" => return Ok((0..self.len()).collect()),
            "positive" | "borel" => return Ok(self.positive().collect()),
            "negative" => return Ok(self.negative().collect()),
            "none" | "" => return Ok(BTreeSet::new()),
            _ => {}
        }
        text.split(',').map(|s| self.parse_root(s)).collect()
    }

    pub fn format_root_set(&self, set: &BTreeSet<RootId>) -> String {
        set.iter()
            .map(|&r| self.label(r))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn is_closed(&self, set: &BTreeSet<RootId>) -> bool {
        set.iter().all(|&a| {
            set.iter()
                .all(|&b| self.add(a, b).is_none_or(|c| set.contains(&c)))
        })
    }

    /// Smallest closed superset.
    pub fn closure(&self, set: &BTreeSet<RootId>) -> ClosedRootSet {
        let mut s = set.clone();
        loop {
            let mut added = Vec::new();
            for &a in &s {
                for &b in &s {
                    if let Some(c) = self.add(a, b) {
                        if !s.contains(&c) {
                            added.push(c);
                        }
                    }
                }
            }
            if added.is_empty() {
                return ClosedRootSet(s);
            }
            s.extend(added);
        }
    }

    pub fn closed(&self, set: BTreeSet<RootId>) -> Result<ClosedRootSet, RootError> {
        if self.is_closed(&set) {
            Ok(ClosedRootSet(set))
        } else {
            Err(RootError::NotClosed(self.format_root_set(&set)))
        }
    }
}

/// A set of roots closed under addition within the root system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClosedRootSet(BTreeSet<RootId>);

impl ClosedRootSet {
    pub fn roots(&self) -> &BTreeSet<RootId> {
        &self.0
    }
    pub fn contains(&self, id: RootId) -> bool {
        self.0.contains(&id)
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn supported() -> Vec<RootSystem> {
        let mut out = Vec::new();
        for (f, ranks) in [
            (Family::A, 1..=4),
            (Family::B, 2..=4),
            (Family::C, 2..=4),
            (Family::D, 4..=4),
        ] {
            for r in ranks {
                out.push(RootSystem::build(f, r).unwrap());
            }
        }
        out
    }

    #[test]
    fn sizes() {
        let a1 = RootSystem::build(Family::A, 1).unwrap();
        assert_eq!(a1.len(), 2);
        assert_eq!(a1.num_positive(), 1);
        let a2 = RootSystem::build(Family::A, 2).unwrap();
        assert_eq!(a2.num_positive(), 3);
        let heights: Vec<i32> = a2.positive().map(|i| a2.root(i).height()).collect();
        assert_eq!(heights, vec![1, 1, 2]);
        let b2 = RootSystem::build(Family::B, 2).unwrap();
        assert_eq!(b2.num_positive(), 4);
        let expected = [
            (Family::A, 3, 6),
            (Family::B, 3, 9),
            (Family::C, 3, 9),
            (Family::D, 4, 12),
            (Family::A, 4, 10),
        ];
        for (f, r, n) in expected {
            assert_eq!(RootSystem::build(f, r).unwrap().num_positive(), n);
        }
        assert!(RootSystem::build(Family::D, 3).is_err());
        assert!(RootSystem::build(Family::A, 5).is_err());
    }

    #[test]
    fn pairings() {
        let a1 = RootSystem::build(Family::A, 1).unwrap();
        assert_eq!(a1.pairing(0, 0), 2);
        let a2 = RootSystem::build(Family::A, 2).unwrap();
        assert_eq!(a2.pairing(0, 1), -1);
        let b2 = RootSystem::build(Family::B, 2).unwrap();
        // a1 long, a2 short
        assert_eq!(b2.pairing(0, 1), -2);
        assert_eq!(b2.pairing(1, 0), -1);
    }

    #[test]
    fn rho_pairings() {
        let a1 = RootSystem::build(Family::A, 1).unwrap();
        assert_eq!(a1.rho_pairing(0).unwrap(), 2);
        let a2 = RootSystem::build(Family::A, 2).unwrap();
        assert_eq!(a2.rho(), vec![2, 2]);
        assert_eq!(a2.rho_pairing(0).unwrap(), 2);
        assert!(a2.rho_pairing(2).is_err());
        for rs in supported() {
            for b in rs.simple() {
                // direct sum over positive roots vs pairing of the rho vector
                assert_eq!(rs.rho_pairing(b).unwrap(), rs.pairing_vector(&rs.rho(), b));
                assert_eq!(rs.rho_pairing(b).unwrap(), 2, "{}", rs.cartan_type());
                let neg: i32 = rs.negative().map(|a| rs.pairing(a, b)).sum();
                assert_eq!(neg, -rs.rho_pairing(b).unwrap());
            }
        }
    }

    #[test]
    fn structural_invariants() {
        for rs in supported() {
            assert_eq!(rs.len(), 2 * rs.num_positive());
            let dim = rs.root(0).coords.len();
            let total: Vec<i32> = (0..dim)
                .map(|k| rs.roots().iter().map(|r| r.coords[k]).sum())
                .collect();
            assert!(total.iter().all(|&x| x == 0));
            for a in 0..rs.len() {
                assert_eq!(rs.pairing(a, a), 2);
                assert_eq!(
                    rs.root(rs.negate(a)).simple,
                    rs.root(a).simple.iter().map(|x| -x).collect::<Vec<_>>()
                );
                for b in 0..rs.len() {
                    if a == b || a == rs.negate(b) {
                        continue;
                    }
                    let (p, q) = rs.string(a, b);
                    assert!(p + q + 1 <= 4);
                    assert_eq!(rs.pairing(b, a), p - q);
                }
            }
            // order refines the partial order
            for i in rs.positive() {
                for j in rs.positive() {
                    let diff: Vec<i32> = rs
                        .root(j)
                        .simple
                        .iter()
                        .zip(&rs.root(i).simple)
                        .map(|(x, y)| x - y)
                        .collect();
                    if i != j && diff.iter().all(|&d| d >= 0) {
                        assert!(i < j);
                    }
                }
            }
        }
    }

    #[test]
    fn closure_examples() {
        let a2 = RootSystem::build(Family::A, 2).unwrap();
        let pos: BTreeSet<_> = a2.positive().collect();
        assert!(a2.is_closed(&pos));
        let simple: BTreeSet<_> = [0, 1].into_iter().collect();
        assert!(!a2.is_closed(&simple));
        let c = a2.closure(&simple);
        assert!(c.contains(a2.parse_root("a1+a2").unwrap()));
        assert_eq!(c.len(), 3);
        let mut parab = pos.clone();
        parab.insert(a2.parse_root("-a1").unwrap());
        assert!(a2.is_closed(&parab));
    }

    #[test]
    fn literals() {
        let b2 = RootSystem::build(Family::B, 2).unwrap();
        let r = b2.parse_root("a1+2a2").unwrap();
        assert_eq!(b2.label(r), "a1+2a2");
        assert_eq!(b2.parse_root("a1 + 2*a2").unwrap(), r);
        assert!(b2.parse_root("2a1+a2").is_err());
        let a2 = RootSystem::build(Family::A, 2).unwrap();
        let s = a2.parse_root_set("a1,a1+a2,-a2").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(a2.format_root_set(&s), "a1,a1+a2,-a2");
        for rs in supported() {
            for id in 0..rs.len() {
                assert_eq!(rs.parse_root(&rs.label(id)).unwrap(), id);
            }
        }
    }
}
