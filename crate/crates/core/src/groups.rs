//! Enumerated finite matrix groups over truncated rings.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::BuildHasher;
use std::str::FromStr;

use hashbrown::{DefaultHashBuilder, HashTable};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chevalley::{ChevalleyData, ChevalleyError};
use crate::matrix::Mat;
use crate::rings::{RingElement, RingError, RingKind, RingSpec};
use crate::rootdata::{CartanType, RootError, RootId, RootSystem};

/// Default enumeration cap.
pub const DEFAULT_CAP: usize = 2_000_000;
/// Default size limit for quadratic pair scans used as cross-checks.
pub const DEFAULT_PAIR_LIMIT: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("group exceeds the enumeration cap of {cap} elements (reached {reached})")]
    TooLarge { cap: usize, reached: usize },
    #[error("subgroup generator {0} is not an element of the ambient group")]
    NotASubgroup(String),
    #[error("tables live over different rings or dimensions")]
    Mismatch,
    #[error("unknown group family `{0}`")]
    Family(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Chevalley(#[from] ChevalleyError),
}

/// A generator together with where it came from, e.g. `x[a1](1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Generator {
    pub label: String,
    #[serde(skip)]
    pub matrix: Vec<u32>,
}

/// A fully enumerated group of `d x d` matrices over a ring.
///
/// Element 0 is the identity; the rest follow breadth-first discovery order
/// from the sorted generator list.
pub struct GroupTable {
    ring: RingSpec,
    dim: usize,
    data: Vec<u32>,
    table: HashTable<u32>,
    hasher: DefaultHashBuilder,
    generators: Vec<Generator>,
    gen_index: Vec<u32>,
    inverse: Vec<u32>,
    valuation: Option<Vec<u32>>,
}

impl fmt::Debug for GroupTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupTable")
            .field("ring", &self.ring.literal())
            .field("dim", &self.dim)
            .field("order", &self.len())
            .finish()
    }
}

fn mat_mul_into(ring: &RingSpec, d: usize, a: &[u32], b: &[u32], out: &mut [u32]) {
    for i in 0..d {
        for j in 0..d {
            let mut acc = RingElement(0);
            for k in 0..d {
                let x = a[i * d + k];
                if x == 0 {
                    continue;
                }
                let y = b[k * d + j];
                if y == 0 {
                    continue;
                }
                acc = ring.add(acc, ring.mul(RingElement(x), RingElement(y)));
            }
            out[i * d + j] = acc.0;
        }
    }
}

fn identity_flat(ring: &RingSpec, d: usize) -> Vec<u32> {
    let one = ring.one().0;
    (0..d * d)
        .map(|k| if k % (d + 1) == 0 { one } else { 0 })
        .collect()
}

pub fn flatten(m: &Mat<RingElement>) -> Vec<u32> {
    m.data.iter().map(|e| e.0).collect()
}

impl GroupTable {
    /// Breadth-first closure of the generators under right multiplication.
    pub fn generate(
        ring: &RingSpec,
        dim: usize,
        generators: Vec<Generator>,
        cap: usize,
    ) -> Result<Self, GroupError> {
        let id = identity_flat(ring, dim);
        let mut gens = generators;
        gens.retain(|g| g.matrix != id);
        gens.sort_by(|a, b| a.matrix.cmp(&b.matrix).then_with(|| a.label.cmp(&b.label)));
        gens.dedup_by(|a, b| a.matrix == b.matrix);
        let valuation = (ring.kind() != RingKind::Composite).then(|| {
            ring.elements()
                .map(|a| ring.valuation(a).expect("local ring"))
                .collect()
        });
        let mut g = GroupTable {
            ring: ring.clone(),
            dim,
            data: Vec::new(),
            table: HashTable::new(),
            hasher: DefaultHashBuilder::default(),
            generators: Vec::new(),
            gen_index: Vec::new(),
            inverse: Vec::new(),
            valuation,
        };
        g.insert(&id);
        let mut parent: Vec<(u32, u32)> = vec![(0, 0)];
        let mut buf = vec![0u32; dim * dim];
        let mut next = 0usize;
        while next < g.len() {
            for (s, gen) in gens.iter().enumerate() {
                mat_mul_into(ring, dim, g.matrix(next as u32), &gen.matrix, &mut buf);
                if g.find(&buf).is_none() {
                    if g.len() >= cap {
                        return Err(GroupError::TooLarge {
                            cap,
                            reached: g.len() + 1,
                        });
                    }
                    g.insert(&buf);
                    parent.push((next as u32, s as u32));
                }
            }
            next += 1;
        }
        g.gen_index = gens
            .iter()
            .map(|s| g.find(&s.matrix).expect("generator in group"))
            .collect();
        // s^{-1} is the last power of s before the identity
        let gen_inverse: Vec<u32> = g
            .gen_index
            .iter()
            .map(|&s| {
                let mut prev = 0u32;
                let mut cur = s;
                while cur != 0 {
                    prev = cur;
                    cur = g.mul(cur, s);
                }
                prev
            })
            .collect();
        let mut inverse = vec![0u32; g.len()];
        for k in 1..g.len() {
            let (p, s) = parent[k];
            inverse[k] = g.mul(gen_inverse[s as usize], inverse[p as usize]);
        }
        g.inverse = inverse;
        g.generators = gens;
        Ok(g)
    }

    /// Rebuilds a table from its element list and inverse map, as stored by
    /// the cache. Generators are normalized exactly as in `generate`.
    pub fn from_parts(
        ring: &RingSpec,
        dim: usize,
        generators: Vec<Generator>,
        data: &[u32],
        inverse: Vec<u32>,
    ) -> Result<Self, GroupError> {
        let d2 = dim * dim;
        let id = identity_flat(ring, dim);
        let n = inverse.len();
        if d2 == 0 || data.len() != n * d2 || n == 0 || data[..d2] != id[..] {
            return Err(GroupError::Mismatch);
        }
        if data.iter().any(|&x| x as u64 >= ring.size()) || inverse.iter().any(|&i| i as usize >= n)
        {
            return Err(GroupError::Mismatch);
        }
        let mut gens = generators;
        gens.retain(|g| g.matrix != id);
        gens.sort_by(|a, b| a.matrix.cmp(&b.matrix).then_with(|| a.label.cmp(&b.label)));
        gens.dedup_by(|a, b| a.matrix == b.matrix);
        let valuation = (ring.kind() != RingKind::Composite).then(|| {
            ring.elements()
                .map(|a| ring.valuation(a).expect("local ring"))
                .collect()
        });
        let mut g = GroupTable {
            ring: ring.clone(),
            dim,
            data: Vec::with_capacity(data.len()),
            table: HashTable::with_capacity(n),
            hasher: DefaultHashBuilder::default(),
            generators: Vec::new(),
            gen_index: Vec::new(),
            inverse,
            valuation,
        };
        for m in data.chunks_exact(d2) {
            if g.find(m).is_some() {
                return Err(GroupError::Mismatch);
            }
            g.insert(m);
        }
        g.gen_index = gens
            .iter()
            .map(|s| g.find(&s.matrix).ok_or(GroupError::Mismatch))
            .collect::<Result<_, _>>()?;
        // closure under the generators and a stride of inverse checks
        for k in (0..n as u32).step_by((n / 257).max(1)) {
            let e = g.mul_matrices(g.matrix(k), g.matrix(g.inverse[k as usize]));
            if e != id {
                return Err(GroupError::Mismatch);
            }
            for &s in &g.gen_index {
                let prod = g.mul_matrices(g.matrix(k), g.matrix(s));
                g.find(&prod).ok_or(GroupError::Mismatch)?;
            }
        }
        g.generators = gens;
        Ok(g)
    }

    /// All elements, flattened row-major in index order.
    pub fn flat_data(&self) -> &[u32] {
        &self.data
    }

    pub fn inverses(&self) -> &[u32] {
        &self.inverse
    }

    fn hash_of(&self, m: &[u32]) -> u64 {
        self.hasher.hash_one(m)
    }

    fn insert(&mut self, m: &[u32]) -> u32 {
        let idx = self.len() as u32;
        self.data.extend_from_slice(m);
        let h = self.hash_of(m);
        let (data, d2, hasher) = (&self.data, self.dim * self.dim, &self.hasher);
        self.table.insert_unique(h, idx, |&i| {
            hasher.hash_one(&data[i as usize * d2..(i as usize + 1) * d2])
        });
        idx
    }

    pub fn find(&self, m: &[u32]) -> Option<u32> {
        let d2 = self.dim * self.dim;
        self.table
            .find(self.hash_of(m), |&i| {
                &self.data[i as usize * d2..(i as usize + 1) * d2] == m
            })
            .copied()
    }

    pub fn ring(&self) -> &RingSpec {
        &self.ring
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn level(&self) -> u32 {
        self.ring.level()
    }
    pub fn len(&self) -> usize {
        self.data.len() / (self.dim * self.dim)
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }
    /// Generator positions in the element list.
    pub fn generator_indices(&self) -> &[u32] {
        &self.gen_index
    }

    pub fn matrix(&self, i: u32) -> &[u32] {
        let d2 = self.dim * self.dim;
        &self.data[i as usize * d2..(i as usize + 1) * d2]
    }

    pub fn mul_matrices(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        let mut out = vec![0; self.dim * self.dim];
        mat_mul_into(&self.ring, self.dim, a, b, &mut out);
        out
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let m = self.mul_matrices(self.matrix(a), self.matrix(b));
        self.find(&m).expect("group is closed under multiplication")
    }

    pub fn inverse(&self, a: u32) -> u32 {
        self.inverse[a as usize]
    }

    /// `g x g^{-1}`.
    pub fn conjugate(&self, g: u32, x: u32) -> u32 {
        let t = self.mul_matrices(self.matrix(g), self.matrix(x));
        let m = self.mul_matrices(&t, self.matrix(self.inverse(g)));
        self.find(&m).expect("group is closed under conjugation")
    }

    /// Canonical little-endian byte encoding of an element.
    pub fn encode(&self, i: u32) -> Vec<u8> {
        let width = byte_width(self.ring.size());
        self.matrix(i)
            .iter()
            .flat_map(|&x| x.to_le_bytes()[..width].to_vec())
            .collect()
    }

    /// Truncated valuation of a ring element (local rings only).
    #[inline]
    fn val(&self, x: u32) -> u32 {
        self.valuation
            .as_ref()
            .expect("valuations need a local ring")[x as usize]
    }

    /// `min_ij v(m_ij - delta_ij)`, the congruence depth of a matrix.
    pub fn depth_of_matrix(&self, m: &[u32]) -> u32 {
        let d = self.dim;
        let one = self.ring.one();
        let mut best = self.level();
        for (k, &x) in m.iter().enumerate() {
            let e = if k % (d + 1) == 0 {
                self.ring.sub(RingElement(x), one).0
            } else {
                x
            };
            best = best.min(self.val(e));
            if best == 0 {
                break;
            }
        }
        best
    }

    pub fn depth(&self, i: u32) -> u32 {
        self.depth_of_matrix(self.matrix(i))
    }

    /// Reduction of every element to the level of `target`, as indices into `target`.
    pub fn project_to(&self, target: &GroupTable) -> Result<Vec<u32>, GroupError> {
        if !self.ring.same_family(&target.ring)
            || self.dim != target.dim
            || target.level() > self.level()
        {
            return Err(GroupError::Mismatch);
        }
        let k = target.level();
        (0..self.len() as u32)
            .map(|i| {
                let m: Vec<u32> = self
                    .matrix(i)
                    .iter()
                    .map(|&x| self.ring.project_unchecked(RingElement(x), k).0)
                    .collect();
                target.find(&m).ok_or(GroupError::Mismatch)
            })
            .collect()
    }

    /// `true` iff the reduction of `m` to level `k` lies in this table (which lives at level `k`).
    pub fn contains_reduction(&self, source: &RingSpec, m: &[u32]) -> bool {
        let k = self.level();
        let red: Vec<u32> = m
            .iter()
            .map(|&x| source.project_unchecked(RingElement(x), k).0)
            .collect();
        self.find(&red).is_some()
    }
}

fn byte_width(size: u64) -> usize {
    if size <= 1 << 8 {
        1
    } else if size <= 1 << 16 {
        2
    } else {
        4
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }
    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
    /// Sizes of all blocks, ordered by smallest member.
    fn block_sizes(&mut self) -> Vec<u64> {
        let n = self.parent.len();
        let mut count = vec![0u64; n];
        for x in 0..n as u32 {
            let r = self.find(x);
            count[r as usize] += 1;
        }
        count.into_iter().filter(|&c| c > 0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassReport {
    pub order: u64,
    pub classes: u64,
    /// Class sizes in increasing order.
    pub class_sizes: Vec<u64>,
    /// `#{(x, y) : xy = yx}` when the group is within the pair-scan limit.
    pub commuting_pairs: Option<u64>,
    pub burnside_ok: Option<bool>,
}

/// Orbits of the elements under conjugation by the generators.
pub fn class_partition(g: &GroupTable) -> Vec<u64> {
    let mut uf = UnionFind::new(g.len());
    for x in 0..g.len() as u32 {
        for &s in g.generator_indices() {
            uf.union(x, g.conjugate(s, x));
        }
    }
    let mut sizes = uf.block_sizes();
    sizes.sort_unstable();
    sizes
}

/// Counts pairs `(x, y)` with `xy = yx` by direct comparison.
pub fn commuting_pairs(g: &GroupTable) -> u64 {
    let d = g.dim();
    let ring = g.ring();
    let n = g.len() as u32;
    (0..n)
        .into_par_iter()
        .map(|x| {
            let a = g.matrix(x);
            let mut count = 0u64;
            'pairs: for y in 0..n {
                let b = g.matrix(y);
                for i in 0..d {
                    for j in 0..d {
                        let mut ab = RingElement(0);
                        let mut ba = RingElement(0);
                        for k in 0..d {
                            ab = ring.add(
                                ab,
                                ring.mul(RingElement(a[i * d + k]), RingElement(b[k * d + j])),
                            );
                            ba = ring.add(
                                ba,
                                ring.mul(RingElement(b[i * d + k]), RingElement(a[k * d + j])),
                            );
                        }
                        if ab != ba {
                            continue 'pairs;
                        }
                    }
                }
                count += 1;
            }
            count
        })
        .sum()
}

/// Conjugacy classes by orbit partition, cross-checked against the
/// commuting-pair count when `|G| <= pair_limit`.
pub fn conjugacy_class_count(g: &GroupTable, pair_limit: usize) -> ClassReport {
    let class_sizes = class_partition(g);
    let classes = class_sizes.len() as u64;
    let order = g.len() as u64;
    let commuting = (g.len() <= pair_limit).then(|| commuting_pairs(g));
    ClassReport {
        order,
        classes,
        class_sizes,
        commuting_pairs: commuting,
        burnside_ok: commuting.map(|c| c == classes * order),
    }
}

fn subgroup_generators(g: &GroupTable, q: &GroupTable) -> Result<Vec<u32>, GroupError> {
    if g.dim() != q.dim() || g.ring() != q.ring() {
        return Err(GroupError::Mismatch);
    }
    q.generators()
        .iter()
        .map(|s| {
            g.find(&s.matrix)
                .ok_or_else(|| GroupError::NotASubgroup(s.label.clone()))
        })
        .collect()
}

/// Number of double cosets `Q1 x Q2` in `G`.
pub fn double_coset_count(
    g: &GroupTable,
    q1: &GroupTable,
    q2: &GroupTable,
) -> Result<u64, GroupError> {
    let left = subgroup_generators(g, q1)?;
    let right = subgroup_generators(g, q2)?;
    let mut uf = UnionFind::new(g.len());
    for x in 0..g.len() as u32 {
        for &a in &left {
            uf.union(x, g.mul(a, x));
        }
        for &b in &right {
            uf.union(x, g.mul(x, b));
        }
    }
    Ok(uf.block_sizes().len() as u64)
}

/// `#{(x, y) in G x Q2 : x y x^{-1} in Q1}`.
pub fn hecke_pair_count(
    g: &GroupTable,
    q1: &GroupTable,
    q2: &GroupTable,
) -> Result<u64, GroupError> {
    subgroup_generators(g, q1)?;
    subgroup_generators(g, q2)?;
    let n = g.len() as u32;
    Ok((0..n)
        .into_par_iter()
        .map(|x| {
            let xm = g.matrix(x);
            let xi = g.matrix(g.inverse(x));
            (0..q2.len() as u32)
                .filter(|&y| {
                    let t = g.mul_matrices(xm, q2.matrix(y));
                    q1.find(&g.mul_matrices(&t, xi)).is_some()
                })
                .count() as u64
        })
        .sum())
}

/// `w(x, y) = min_ij v((xy - yx)_ij)`, truncated at the level.
pub fn commutator_depth(g: &GroupTable, x: u32, y: u32) -> u32 {
    let (a, b) = (g.matrix(x), g.matrix(y));
    let ab = g.mul_matrices(a, b);
    let ba = g.mul_matrices(b, a);
    let ring = g.ring();
    let mut best = g.level();
    for (u, v) in ab.iter().zip(&ba) {
        if u != v {
            best = best.min(g.val(ring.sub(RingElement(*u), RingElement(*v)).0));
            if best == 0 {
                break;
            }
        }
    }
    best
}

/// The largest `k` with `x^{-1} y^{-1} x y` trivial modulo level `k`, by reduction.
pub fn commutator_depth_by_kernel(g: &GroupTable, x: u32, y: u32) -> u32 {
    let c = g.mul(g.mul(g.inverse(x), g.inverse(y)), g.mul(x, y));
    let id = identity_flat(g.ring(), g.dim());
    let m = g.matrix(c);
    (0..=g.level())
        .rev()
        .find(|&k| {
            m.iter().zip(&id).all(|(&u, &v)| {
                g.ring().project_unchecked(RingElement(u), k)
                    == g.ring().project_unchecked(RingElement(v), k)
            })
        })
        .unwrap_or(0)
}

/// Histogram of `w(x, y)` over all pairs of `G`; entry `k` counts pairs with `w = k`.
pub fn commutator_depth_histogram(g: &GroupTable) -> Vec<u64> {
    let n = g.len() as u32;
    let levels = g.level() as usize + 1;
    (0..n)
        .into_par_iter()
        .map(|x| {
            let mut h = vec![0u64; levels];
            for y in 0..n {
                h[commutator_depth(g, x, y) as usize] += 1;
            }
            h
        })
        .reduce(
            || vec![0u64; levels],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        )
}

/// A parabolic subgroup enumerated at every level `1..=m`.
pub struct ParabolicTower {
    levels: Vec<GroupTable>,
}

impl ParabolicTower {
    /// `levels[k-1]` must live at level `k`.
    pub fn new(levels: Vec<GroupTable>) -> Result<Self, GroupError> {
        for (k, t) in levels.iter().enumerate() {
            if t.level() as usize != k + 1 {
                return Err(GroupError::Mismatch);
            }
        }
        Ok(Self { levels })
    }

    pub fn top(&self) -> &GroupTable {
        self.levels.last().expect("non-empty tower")
    }

    pub fn at(&self, level: u32) -> &GroupTable {
        &self.levels[level as usize - 1]
    }

    /// `lambda_S(x)`: largest `k <= m` such that `x` reduced to level `k` lies in `P_S`.
    pub fn lambda_by_projection(&self, g: &GroupTable, x: u32) -> u32 {
        let m = g.matrix(x);
        let mut k = 0;
        for t in &self.levels[..g.level() as usize] {
            if t.contains_reduction(g.ring(), m) {
                k = t.level();
            } else {
                break;
            }
        }
        k
    }

    /// `max_{y in P_S} min_ij v((y^{-1} x - I)_ij)` at the level of `g`.
    pub fn lambda_by_coset(&self, g: &GroupTable, x: u32) -> u32 {
        let p = self.at(g.level());
        let xm = g.matrix(x);
        let mut best = 0;
        for y in 0..p.len() as u32 {
            let prod = g.mul_matrices(p.matrix(p.inverse(y)), xm);
            best = best.max(g.depth_of_matrix(&prod));
            if best == g.level() {
                break;
            }
        }
        best
    }
}

/// Histogram over pairs `(x, y)` of `G` of `min(lambda_2(y), lambda_1(x y x^{-1}))`.
pub fn parabolic_depth_histogram(
    g: &GroupTable,
    p1: &ParabolicTower,
    p2: &ParabolicTower,
) -> Vec<u64> {
    let n = g.len() as u32;
    let levels = g.level() as usize + 1;
    let lambda1: Vec<u32> = (0..n).map(|z| p1.lambda_by_projection(g, z)).collect();
    let lambda2: Vec<u32> = (0..n).map(|y| p2.lambda_by_projection(g, y)).collect();
    let mut hist = (0..n)
        .into_par_iter()
        .filter(|&y| lambda2[y as usize] > 0)
        .map(|y| {
            let mut h = vec![0u64; levels];
            for x in 0..n {
                let z = g.conjugate(x, y);
                h[lambda2[y as usize].min(lambda1[z as usize]) as usize] += 1;
            }
            h
        })
        .reduce(
            || vec![0u64; levels],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        );
    hist[0] += lambda2.iter().filter(|&&l| l == 0).count() as u64 * n as u64;
    hist
}

/// Group families that can be instantiated over any ring.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroupFamily {
    /// Generated by all root elements `x_alpha(t)` in the adjoint representation.
    Chevalley(CartanType),
    /// Generated by the positive root elements.
    Unipotent(CartanType),
    /// Upper unitriangular `3 x 3` matrices.
    Heisenberg,
    /// Generated by `x_alpha(t)` for `alpha` in `S`, and by `h_beta(u)` for
    /// simple `beta` and units `u` when `torus` is set.
    Parabolic {
        cartan: CartanType,
        roots: BTreeSet<RootId>,
        torus: bool,
    },
    /// Generated by `h_beta(u)` for simple `beta` and units `u`.
    Torus(CartanType),
}

impl GroupFamily {
    pub fn borel(cartan: CartanType) -> Result<Self, GroupError> {
        let rs = RootSystem::new(cartan)?;
        Ok(GroupFamily::Parabolic {
            cartan,
            roots: rs.positive().collect(),
            torus: true,
        })
    }

    pub fn parabolic(cartan: CartanType, roots: &str) -> Result<Self, GroupError> {
        let rs = RootSystem::new(cartan)?;
        let set = rs.parse_root_set(roots)?;
        let closed = rs.closed(set)?;
        Ok(GroupFamily::Parabolic {
            cartan,
            roots: closed.roots().clone(),
            torus: true,
        })
    }

    pub fn cartan(&self) -> Option<CartanType> {
        match self {
            GroupFamily::Chevalley(c) | GroupFamily::Unipotent(c) | GroupFamily::Torus(c) => {
                Some(*c)
            }
            GroupFamily::Parabolic { cartan, .. } => Some(*cartan),
            GroupFamily::Heisenberg => None,
        }
    }

    /// Matrix size of the representation.
    pub fn matrix_dim(&self) -> Result<usize, GroupError> {
        match self.cartan() {
            Some(c) => Ok(RootSystem::new(c)?.lie_dimension()),
            None => Ok(3),
        }
    }

    /// Dimension of the group scheme, the exponent in `q^{(m-1) d}`.
    pub fn group_dim(&self) -> Result<usize, GroupError> {
        let rs = self.cartan().map(RootSystem::new).transpose()?;
        Ok(match self {
            GroupFamily::Heisenberg => 3,
            GroupFamily::Chevalley(_) => rs.unwrap().lie_dimension(),
            GroupFamily::Unipotent(_) => rs.unwrap().num_positive(),
            GroupFamily::Parabolic { roots, torus, .. } => {
                roots.len() + if *torus { rs.unwrap().rank() } else { 0 }
            }
            GroupFamily::Torus(_) => rs.unwrap().rank(),
        })
    }

    pub fn generators(&self, ring: &RingSpec) -> Result<Vec<Generator>, GroupError> {
        let adds = ring.additive_generators();
        if let GroupFamily::Heisenberg = self {
            let mut out = Vec::new();
            for &a in &adds {
                for (i, j, name) in [(0, 1, "x"), (1, 2, "y")] {
                    let mut m = identity_flat(ring, 3);
                    m[i * 3 + j] = a.0;
                    out.push(Generator {
                        label: format!("{name}({})", ring.encode(a)),
                        matrix: m,
                    });
                }
            }
            return Ok(out);
        }
        let cartan = self.cartan().expect("root-system family");
        let cd = ChevalleyData::new(RootSystem::new(cartan)?)?;
        let rs = cd.roots();
        let root_gens = |roots: &mut dyn Iterator<Item = RootId>| -> Vec<Generator> {
            let mut out = Vec::new();
            for alpha in roots {
                for &a in &adds {
                    out.push(Generator {
                        label: format!("x[{}]({})", rs.label(alpha), ring.encode(a)),
                        matrix: flatten(&cd.x_alpha(ring, alpha, &a)),
                    });
                }
            }
            out
        };
        let torus_gens = || -> Result<Vec<Generator>, GroupError> {
            let mut out = Vec::new();
            for beta in rs.simple() {
                for u in ring.units() {
                    out.push(Generator {
                        label: format!("h[{}]({})", rs.label(beta), ring.encode(u)),
                        matrix: flatten(&cd.h_alpha(ring, beta, &u)?),
                    });
                }
            }
            Ok(out)
        };
        Ok(match self {
            GroupFamily::Chevalley(_) => root_gens(&mut (0..rs.len())),
            GroupFamily::Unipotent(_) => root_gens(&mut rs.positive()),
            GroupFamily::Parabolic { roots, torus, .. } => {
                let mut g = root_gens(&mut roots.iter().copied());
                if *torus {
                    g.extend(torus_gens()?);
                }
                g
            }
            GroupFamily::Torus(_) => torus_gens()?,
            GroupFamily::Heisenberg => unreachable!(),
        })
    }

    /// Enumerates the group, going through the installed cache if any.
    pub fn build(&self, ring: &RingSpec, cap: usize) -> Result<GroupTable, GroupError> {
        match crate::cache::active() {
            Some(c) => c.build(self, ring, cap),
            None => self.build_uncached(ring, cap),
        }
    }

    pub fn build_uncached(&self, ring: &RingSpec, cap: usize) -> Result<GroupTable, GroupError> {
        GroupTable::generate(ring, self.matrix_dim()?, self.generators(ring)?, cap)
    }

    /// Hash of the structure constants behind the generators; `none` for Heisenberg.
    pub fn structure_hash(&self) -> Result<String, GroupError> {
        match self.cartan() {
            Some(c) => Ok(ChevalleyData::new(RootSystem::new(c)?)?
                .metadata()
                .hash
                .clone()),
            None => Ok("none".into()),
        }
    }

    /// Tables at levels `1..=m` of the ring family.
    pub fn tower(
        &self,
        ring: &RingSpec,
        m: u32,
        cap: usize,
    ) -> Result<Vec<GroupTable>, GroupError> {
        (1..=m)
            .map(|k| self.build(&ring.at_level(k)?, cap))
            .collect()
    }
}

impl fmt::Display for GroupFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupFamily::Chevalley(c) => write!(f, "chevalley:{c}"),
            GroupFamily::Unipotent(c) => write!(f, "unipotent:{c}"),
            GroupFamily::Heisenberg => write!(f, "heisenberg"),
            GroupFamily::Torus(c) => write!(f, "torus:{c}"),
            GroupFamily::Parabolic {
                cartan,
                roots,
                torus,
            } => {
                let rs = RootSystem::new(*cartan).map_err(|_| fmt::Error)?;
                let prefix = if *torus {
                    "parabolic"
                } else {
                    "parabolic-notorus"
                };
                write!(f, "{prefix}:{cartan}:{}", rs.format_root_set(roots))
            }
        }
    }
}

impl FromStr for GroupFamily {
    type Err = GroupError;

    /// `chevalley:A2`, `unipotent:A2`, `heisenberg`, `borel:A1`, `torus:A2`,
    /// `parabolic:A2:a1,a2,a1+a2,-a1` and `parabolic-notorus:...`.
    fn from_str(s: &str) -> Result<Self, GroupError> {
        let bad = || GroupError::Family(s.to_string());
        let mut parts = s.trim().splitn(3, ':');
        let head = parts.next().ok_or_else(bad)?;
        if head == "heisenberg" {
            return if parts.next().is_none() {
                Ok(GroupFamily::Heisenberg)
            } else {
                Err(bad())
            };
        }
        let cartan: CartanType = parts.next().ok_or_else(bad)?.parse()?;
        RootSystem::new(cartan)?;
        let rest = parts.next();
        match (head, rest) {
            ("chevalley", None) => Ok(GroupFamily::Chevalley(cartan)),
            ("unipotent", None) => Ok(GroupFamily::Unipotent(cartan)),
            ("torus", None) => Ok(GroupFamily::Torus(cartan)),
            ("borel", None) => GroupFamily::borel(cartan),
            ("parabolic", Some(set)) => GroupFamily::parabolic(cartan, set),
            ("parabolic-notorus", Some(set)) => match GroupFamily::parabolic(cartan, set)? {
                GroupFamily::Parabolic { cartan, roots, .. } => Ok(GroupFamily::Parabolic {
                    cartan,
                    roots,
                    torus: false,
                }),
                _ => unreachable!(),
            },
            _ => Err(bad()),
        }
    }
}

/// `|G_m| = |G_1| q^{(m-1) d}`.
pub fn order_law_holds(order_m: u64, order_1: u64, q: u64, m: u32, d: usize) -> bool {
    let e = (m as u64 - 1) * d as u64;
    q.checked_pow(e as u32).and_then(|p| p.checked_mul(order_1)) == Some(order_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rings::{make_composite, make_ring};

    fn z(p: u64, m: u32) -> RingSpec {
        make_ring(RingKind::MixedChar, p, 1, m).unwrap()
    }
    fn ft(p: u64, m: u32) -> RingSpec {
        make_ring(RingKind::EqualChar, p, 1, m).unwrap()
    }
    fn fam(s: &str) -> GroupFamily {
        s.parse().unwrap()
    }

    #[test]
    fn small_orders() {
        assert_eq!(
            fam("chevalley:A1")
                .build(&z(2, 1), DEFAULT_CAP)
                .unwrap()
                .len(),
            6
        );
        assert_eq!(
            fam("chevalley:A2")
                .build(&z(2, 1), DEFAULT_CAP)
                .unwrap()
                .len(),
            168
        );
        for q in [2, 3, 5] {
            assert_eq!(
                fam("heisenberg")
                    .build(&z(q, 1), DEFAULT_CAP)
                    .unwrap()
                    .len() as u64,
                q * q * q
            );
        }
        let f4 = make_ring(RingKind::EqualChar, 2, 2, 1).unwrap();
        assert_eq!(fam("heisenberg").build(&f4, DEFAULT_CAP).unwrap().len(), 64);
    }

    #[test]
    fn cap_is_enforced() {
        let err = fam("chevalley:A2").build(&z(2, 1), 100).unwrap_err();
        assert_eq!(
            err,
            GroupError::TooLarge {
                cap: 100,
                reached: 101
            }
        );
    }

    #[test]
    fn inverses_and_identity() {
        let g = fam("chevalley:A1").build(&z(3, 2), DEFAULT_CAP).unwrap();
        for x in 0..g.len() as u32 {
            assert_eq!(g.mul(x, g.inverse(x)), 0);
            assert_eq!(g.mul(0, x), x);
        }
    }

    #[test]
    fn heisenberg_classes() {
        let r = conjugacy_class_count(
            &fam("heisenberg").build(&z(2, 1), DEFAULT_CAP).unwrap(),
            DEFAULT_PAIR_LIMIT,
        );
        assert_eq!(r.classes, 5);
        assert_eq!(r.burnside_ok, Some(true));
        for q in [2u64, 3, 5] {
            let g = fam("heisenberg").build(&z(q, 1), DEFAULT_CAP).unwrap();
            assert_eq!(conjugacy_class_count(&g, 0).classes, q * q + q - 1);
        }
        for ring in [z(2, 2), ft(2, 2)] {
            let r = conjugacy_class_count(
                &fam("heisenberg").build(&ring, DEFAULT_CAP).unwrap(),
                DEFAULT_PAIR_LIMIT,
            );
            assert_eq!((r.order, r.classes, r.burnside_ok), (64, 22, Some(true)));
        }
    }

    #[test]
    fn unipotent_a2_is_heisenberg() {
        for ring in [z(2, 2), ft(3, 1)] {
            let a = conjugacy_class_count(
                &fam("unipotent:A2").build(&ring, DEFAULT_CAP).unwrap(),
                DEFAULT_PAIR_LIMIT,
            );
            let b = conjugacy_class_count(
                &fam("heisenberg").build(&ring, DEFAULT_CAP).unwrap(),
                DEFAULT_PAIR_LIMIT,
            );
            assert_eq!(
                (a.order, a.classes, &a.class_sizes),
                (b.order, b.classes, &b.class_sizes)
            );
        }
    }

    #[test]
    fn double_cosets() {
        let ring = z(2, 1);
        let g = fam("chevalley:A1").build(&ring, DEFAULT_CAP).unwrap();
        let b = fam("borel:A1").build(&ring, DEFAULT_CAP).unwrap();
        let one = GroupTable::generate(&ring, 3, Vec::new(), 10).unwrap();
        assert_eq!(double_coset_count(&g, &g, &g).unwrap(), 1);
        assert_eq!(double_coset_count(&g, &one, &one).unwrap(), 6);
        assert_eq!(double_coset_count(&g, &b, &b).unwrap(), 2);
        let e = hecke_pair_count(&g, &b, &b).unwrap();
        assert_eq!(e, 2 * (b.len() * b.len()) as u64);
        assert_eq!(hecke_pair_count(&g, &g, &g).unwrap(), 36);
        let a2 = fam("chevalley:A2").build(&ring, DEFAULT_CAP).unwrap();
        let b2 = fam("borel:A2").build(&ring, DEFAULT_CAP).unwrap();
        assert_eq!(double_coset_count(&a2, &b2, &b2).unwrap(), 6);
        let p1 = fam("parabolic:A2:positive")
            .build(&ring, DEFAULT_CAP)
            .unwrap();
        assert_eq!(p1.len(), b2.len());
    }

    #[test]
    fn not_a_subgroup() {
        let ring = z(2, 1);
        let b = fam("borel:A1").build(&ring, DEFAULT_CAP).unwrap();
        let g = fam("chevalley:A1").build(&ring, DEFAULT_CAP).unwrap();
        assert!(matches!(
            double_coset_count(&b, &g, &g),
            Err(GroupError::NotASubgroup(_))
        ));
    }

    #[test]
    fn commutator_depth_examples() {
        let ring = z(2, 2);
        let g = fam("heisenberg").build(&ring, DEFAULT_CAP).unwrap();
        let mk = |a: i64, b: i64, c: i64| {
            let m = vec![1, a as u32, c as u32, 0, 1, b as u32, 0, 0, 1];
            g.find(&m).unwrap()
        };
        let x = mk(1, 0, 0);
        let y = mk(0, 2, 0);
        // the commutator entry is ab' - a'b = 2, of valuation 1
        assert_eq!(commutator_depth(&g, x, y), 1);
        assert_eq!(commutator_depth(&g, mk(2, 0, 0), y), 2);
        assert_eq!(commutator_depth(&g, x, 0), 2);
        assert_eq!(commutator_depth(&g, x, mk(0, 1, 0)), 0);
        let g9 = fam("heisenberg").build(&z(3, 2), DEFAULT_CAP).unwrap();
        for x in 0..g9.len() as u32 {
            for y in 0..g9.len() as u32 {
                assert_eq!(
                    commutator_depth(&g9, x, y),
                    commutator_depth_by_kernel(&g9, x, y)
                );
            }
        }
    }

    #[test]
    fn parabolic_depth_examples() {
        let ring = z(2, 2);
        let f = fam("borel:A1");
        let tower = ParabolicTower::new(f.tower(&ring, 2, DEFAULT_CAP).unwrap()).unwrap();
        let g = fam("chevalley:A1").build(&ring, DEFAULT_CAP).unwrap();
        let cd = ChevalleyData::new(RootSystem::new("A1".parse().unwrap()).unwrap()).unwrap();
        let x = g
            .find(&flatten(&cd.x_alpha(&ring, 1, &ring.from_int(2))))
            .unwrap();
        assert_eq!(tower.lambda_by_projection(&g, x), 1);
        assert_eq!(tower.lambda_by_coset(&g, x), 1);
        for y in 0..g.len() as u32 {
            assert_eq!(
                tower.lambda_by_projection(&g, y),
                tower.lambda_by_coset(&g, y)
            );
        }
        let b_top = tower.top();
        for y in 0..b_top.len() as u32 {
            assert_eq!(
                tower.lambda_by_projection(&g, g.find(b_top.matrix(y)).unwrap()),
                2
            );
        }
    }

    #[test]
    fn projections_are_homomorphisms() {
        let ring = z(3, 2);
        let hi = fam("chevalley:A1").build(&ring, DEFAULT_CAP).unwrap();
        let lo = fam("chevalley:A1")
            .build(&ring.at_level(1).unwrap(), DEFAULT_CAP)
            .unwrap();
        let map = hi.project_to(&lo).unwrap();
        let image: BTreeSet<u32> = map.iter().copied().collect();
        assert_eq!(image.len(), lo.len());
        for x in (0..hi.len() as u32).step_by(37) {
            for y in (0..hi.len() as u32).step_by(41) {
                assert_eq!(
                    map[hi.mul(x, y) as usize],
                    lo.mul(map[x as usize], map[y as usize])
                );
            }
        }
    }

    #[test]
    fn family_literals() {
        for s in [
            "chevalley:A2",
            "unipotent:A2",
            "heisenberg",
            "torus:B2",
            "parabolic:A2:a1,a2,a1+a2,-a1",
        ] {
            assert_eq!(fam(s).to_string(), s);
        }
        assert_eq!(fam("borel:A1").to_string(), "parabolic:A1:a1");
        assert!("parabolic:A2:a1,a2".parse::<GroupFamily>().is_err());
        assert!("chevalley:E8".parse::<GroupFamily>().is_err());
    }

    #[test]
    fn composite_heisenberg() {
        let g = fam("heisenberg")
            .build(&make_composite(6).unwrap(), DEFAULT_CAP)
            .unwrap();
        assert_eq!(g.len(), 216);
        assert_eq!(conjugacy_class_count(&g, 0).classes, 55);
    }
}
