//! Chevalley bases, the adjoint representation and the big cell.
//!
//! The basis is built inside a matrix realization of the classical Lie
//! algebra (sl_n, so_n or sp_2n over the rationals); every axiom is
//! re-checked in the adjoint coordinates before the data is handed out.

pub mod laurent;

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::matrix::{identity, mat_mul, mat_product, polynomial_matrix, Carrier, Mat};
use crate::rings::{RingElement, RingError, RingKind, RingSpec};
use crate::rootdata::{Family, RootError, RootId, RootSystem};
use laurent::{LaurentPoly, LaurentRing};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChevalleyError {
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("chevalley construction failed: {0}")]
    Consistency(String),
    #[error("torus coordinate is not invertible")]
    NotAUnit,
}

type Q = Rational64;

fn q_int(v: i64) -> Q {
    Q::from_integer(v)
}

fn qmat_zero(n: usize) -> Mat<Q> {
    Mat::from_fn(n, |_, _| Q::zero())
}

fn qmat_mul(a: &Mat<Q>, b: &Mat<Q>) -> Mat<Q> {
    let n = a.n;
    Mat::from_fn(n, |i, j| (0..n).map(|k| a.get(i, k) * b.get(k, j)).sum())
}

fn bracket(a: &Mat<Q>, b: &Mat<Q>) -> Mat<Q> {
    let ab = qmat_mul(a, b);
    let ba = qmat_mul(b, a);
    Mat {
        n: a.n,
        data: ab.data.iter().zip(&ba.data).map(|(x, y)| x - y).collect(),
    }
}

fn qmat_scale(a: &Mat<Q>, s: Q) -> Mat<Q> {
    a.map(|x| x * s)
}

fn is_zero_mat(a: &Mat<Q>) -> bool {
    a.data.iter().all(|x| x.is_zero())
}

/// Basis of the nullspace of a `rows x cols` rational matrix.
fn nullspace(rows: &[Vec<Q>], cols: usize) -> Vec<Vec<Q>> {
    let mut a: Vec<Vec<Q>> = rows.to_vec();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= inv;
        }
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c];
                for k in 0..cols {
                    let v = a[r][k];
                    a[i][k] -= f * v;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![Q::zero(); cols];
            v[fc] = Q::one();
            for (row, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = -a[row][fc];
            }
            v
        })
        .collect()
}

/// Weights of the standard basis vectors of the natural representation,
/// in the Euclidean coordinates used by `rootdata`.
fn natural_weights(family: Family, l: usize) -> Vec<Vec<i32>> {
    let unit = |i: usize, dim: usize, s: i32| {
        let mut v = vec![0; dim];
        v[i] = s;
        v
    };
    match family {
        Family::A => (0..=l).map(|i| unit(i, l + 1, 1)).collect(),
        Family::B => (0..=2 * l)
            .map(|i| match i.cmp(&l) {
                std::cmp::Ordering::Less => unit(i, l, 1),
                std::cmp::Ordering::Equal => vec![0; l],
                std::cmp::Ordering::Greater => unit(2 * l - i, l, -1),
            })
            .collect(),
        Family::C | Family::D => (0..2 * l)
            .map(|i| {
                if i < l {
                    unit(i, l, 1)
                } else {
                    unit(2 * l - 1 - i, l, -1)
                }
            })
            .collect(),
    }
}

/// Antidiagonal invariant form; `None` for type A.
fn invariant_form(family: Family, l: usize) -> Option<Mat<Q>> {
    let n = match family {
        Family::A => return None,
        Family::B => 2 * l + 1,
        Family::C | Family::D => 2 * l,
    };
    let mut s = qmat_zero(n);
    for i in 0..n {
        let sign = if family == Family::C && i >= l { -1 } else { 1 };
        s.set(i, n - 1 - i, q_int(sign));
    }
    Some(s)
}

/// Spans the root space of `alpha` inside the matrix realization.
fn root_vector(
    rs: &RootSystem,
    weights: &[Vec<i32>],
    form: Option<&Mat<Q>>,
    alpha: RootId,
) -> Result<Mat<Q>, ChevalleyError> {
    let n = weights.len();
    let target = &rs.root(alpha).coords;
    let cands: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            i != j
                && weights[i]
                    .iter()
                    .zip(&weights[j])
                    .map(|(a, b)| a - b)
                    .eq(target.iter().copied())
        })
        .collect();
    let unit = |(i, j): (usize, usize)| {
        let mut m = qmat_zero(n);
        m.set(i, j, Q::one());
        m
    };
    let coeffs = match form {
        None => {
            if cands.len() != 1 {
                return Err(ChevalleyError::Consistency(format!(
                    "root {} has {} positions",
                    rs.label(alpha),
                    cands.len()
                )));
            }
            vec![Q::one()]
        }
        Some(s) => {
            // X^T S + S X = 0, one column per candidate position
            let conds: Vec<Mat<Q>> = cands
                .iter()
                .map(|&c| {
                    let e = unit(c);
                    let et = Mat::from_fn(n, |i, j| *e.get(j, i));
                    let a = qmat_mul(&et, s);
                    let b = qmat_mul(s, &e);
                    Mat {
                        n,
                        data: a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect(),
                    }
                })
                .collect();
            let rows: Vec<Vec<Q>> = (0..n * n)
                .map(|k| conds.iter().map(|m| m.data[k]).collect())
                .collect();
            let ns = nullspace(&rows, cands.len());
            if ns.len() != 1 {
                return Err(ChevalleyError::Consistency(format!(
                    "root space of {} has dimension {}",
                    rs.label(alpha),
                    ns.len()
                )));
            }
            let v = &ns[0];
            let lead = *v.iter().find(|x| !x.is_zero()).unwrap();
            v.iter().map(|x| x / lead).collect()
        }
    };
    let mut m = qmat_zero(n);
    for (&(i, j), c) in cands.iter().zip(coeffs) {
        m.set(i, j, c);
    }
    Ok(m)
}

/// One entry of the structure-constant table: `[X_alpha, X_beta] = value * X_{alpha+beta}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureConstant {
    pub alpha: String,
    pub beta: String,
    pub sum: String,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChevalleyMetadata {
    pub cartan_type: String,
    pub root_order: Vec<String>,
    pub basis: Vec<String>,
    pub sign_convention: String,
    pub structure_constants: Vec<StructureConstant>,
    pub hash: String,
}

/// Chevalley basis data of a root system in the adjoint representation.
///
/// Basis order: positive roots from highest to lowest, then `H_1..H_l`,
/// then negative roots from lowest to highest height. In this order
/// `x_alpha(t)` is upper unitriangular for positive `alpha`.
#[derive(Debug, Clone)]
pub struct ChevalleyData {
    roots: RootSystem,
    dim: usize,
    ad: Vec<Mat<i64>>,
    ad_cartan: Vec<Mat<i64>>,
    exp_terms: Vec<Vec<Mat<i64>>>,
    structure: BTreeMap<(RootId, RootId), i64>,
    metadata: ChevalleyMetadata,
}

impl ChevalleyData {
    pub fn new(roots: RootSystem) -> Result<Self, ChevalleyError> {
        Builder::new(&roots)?.finish(roots)
    }

    pub fn roots(&self) -> &RootSystem {
        &self.roots
    }

    /// Dimension `d = rank + |roots|`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn position(&self, alpha: RootId) -> usize {
        basis_position(&self.roots, alpha)
    }

    pub fn cartan_position(&self, i: usize) -> usize {
        self.roots.num_positive() + i
    }

    pub fn ad(&self, alpha: RootId) -> &Mat<i64> {
        &self.ad[alpha]
    }

    pub fn ad_cartan(&self, i: usize) -> &Mat<i64> {
        &self.ad_cartan[i]
    }

    /// `N_{alpha,beta}`, or `None` when `alpha + beta` is not a root.
    pub fn structure_constant(&self, alpha: RootId, beta: RootId) -> Option<i64> {
        self.structure.get(&(alpha, beta)).copied()
    }

    pub fn metadata(&self) -> &ChevalleyMetadata {
        &self.metadata
    }

    /// Divided powers `(ad X_alpha)^k / k!`, `k = 0..`, until nilpotence.
    pub fn exp_terms(&self, alpha: RootId) -> &[Mat<i64>] {
        &self.exp_terms[alpha]
    }

    pub fn x_alpha<C: Carrier>(&self, c: &C, alpha: RootId, t: &C::Elem) -> Mat<C::Elem> {
        polynomial_matrix(c, &self.exp_terms[alpha], t)
    }

    /// `w_alpha(u) = x_alpha(u) x_{-alpha}(-u^{-1}) x_alpha(u)`, a monomial matrix.
    pub fn w_alpha<C: Carrier>(
        &self,
        c: &C,
        alpha: RootId,
        u: &C::Elem,
    ) -> Result<Mat<C::Elem>, ChevalleyError> {
        let inv = c.inverse(u).ok_or(ChevalleyError::NotAUnit)?;
        let neg = self.roots.negate(alpha);
        let xa = self.x_alpha(c, alpha, u);
        let xn = self.x_alpha(c, neg, &c.neg(&inv));
        Ok(mat_mul(c, &mat_mul(c, &xa, &xn), &xa))
    }

    /// `h_alpha(u) = w_alpha(u) w_alpha(1)^{-1}`, using `w_alpha(1)^{-1} = w_alpha(-1)`.
    pub fn h_alpha<C: Carrier>(
        &self,
        c: &C,
        alpha: RootId,
        u: &C::Elem,
    ) -> Result<Mat<C::Elem>, ChevalleyError> {
        let w = self.w_alpha(c, alpha, u)?;
        let w1 = self.w_alpha(c, alpha, &c.neg(&c.one()))?;
        Ok(mat_mul(c, &w, &w1))
    }

    /// `h_alpha(u)^{-1} = w_alpha(1) w_alpha(-u)`.
    pub fn h_alpha_inverse<C: Carrier>(
        &self,
        c: &C,
        alpha: RootId,
        u: &C::Elem,
    ) -> Result<Mat<C::Elem>, ChevalleyError> {
        let w1 = self.w_alpha(c, alpha, &c.one())?;
        let w = self.w_alpha(c, alpha, &c.neg(u))?;
        Ok(mat_mul(c, &w1, &w))
    }

    /// The ordered product over negative roots, simple torus factors, positive roots.
    pub fn big_cell<C: Carrier>(
        &self,
        c: &C,
        point: &BigCellPoint<C::Elem>,
    ) -> Result<Mat<C::Elem>, ChevalleyError> {
        let r = self.roots.num_positive();
        let l = self.roots.rank();
        if point.negative.len() != r || point.torus.len() != l || point.positive.len() != r {
            return Err(ChevalleyError::Consistency(
                "big cell point has the wrong shape".into(),
            ));
        }
        let mut factors = Vec::with_capacity(2 * r + l);
        for (k, a) in point.negative.iter().enumerate() {
            if !c.is_zero(a) {
                factors.push(self.x_alpha(c, r + k, a));
            }
        }
        for (i, b) in point.torus.iter().enumerate() {
            factors.push(self.h_alpha(c, i, b)?);
        }
        for (k, a) in point.positive.iter().enumerate() {
            if !c.is_zero(a) {
                factors.push(self.x_alpha(c, k, a));
            }
        }
        Ok(mat_product(c, self.dim, &factors))
    }

    /// Symbolic check that `h_alpha(u)` is diagonal with entry `u^<beta,alpha>` on `X_beta`.
    pub fn verify_torus_diagonal(&self, alpha: RootId) -> bool {
        let c = LaurentRing;
        let u = LaurentPoly::var(0);
        let Ok(h) = self.h_alpha(&c, alpha, &u) else {
            return false;
        };
        let expected = Mat::from_fn(self.dim, |i, j| {
            if i != j {
                return LaurentPoly::default();
            }
            match self.basis_root(i) {
                Some(beta) => LaurentPoly::var_pow(0, self.roots.pairing(beta, alpha)),
                None => LaurentPoly::int(1),
            }
        });
        h == expected
    }

    /// Root attached to a basis position, `None` for the Cartan part.
    pub fn basis_root(&self, pos: usize) -> Option<RootId> {
        let r = self.roots.num_positive();
        let l = self.roots.rank();
        if pos < r {
            Some(r - 1 - pos)
        } else if pos < r + l {
            None
        } else {
            Some(pos - l)
        }
    }

    /// `x_alpha(s) x_alpha(t) = x_alpha(s + t)` over `Q[s, t]`.
    pub fn verify_one_parameter_law(&self, alpha: RootId) -> bool {
        let c = LaurentRing;
        let (s, t) = (LaurentPoly::var(0), LaurentPoly::var(1));
        let lhs = mat_mul(
            &c,
            &self.x_alpha(&c, alpha, &s),
            &self.x_alpha(&c, alpha, &t),
        );
        lhs == self.x_alpha(&c, alpha, &s.add(&t))
    }

    pub fn verify_torus_conjugation(&self) -> TorusReport {
        let c = LaurentRing;
        let rs = &self.roots;
        let l = rs.rank();
        let a = LaurentPoly::var(0);
        let mut pairs = Vec::new();
        for alpha in 0..rs.len() {
            let xa = self.x_alpha(&c, alpha, &a);
            for beta in rs.simple() {
                let b = LaurentPoly::var(1);
                let exponent = rs.pairing(alpha, beta);
                let pass = match (
                    self.h_alpha(&c, beta, &b),
                    self.h_alpha_inverse(&c, beta, &b),
                ) {
                    (Ok(h), Ok(hi)) => {
                        let lhs = mat_product(&c, self.dim, &[h, xa.clone(), hi]);
                        lhs == self.x_alpha(&c, alpha, &LaurentPoly::var_pow(1, exponent).mul(&a))
                    }
                    _ => false,
                };
                pairs.push(TorusPair {
                    alpha: rs.label(alpha),
                    beta: rs.label(beta),
                    exponent,
                    pass,
                });
            }
        }
        // product of all simple torus factors with independent symbols b_1..b_l
        let bvars: Vec<LaurentPoly> = (0..l).map(|i| LaurentPoly::var(1 + i as u32)).collect();
        let mut torus = Vec::new();
        let mut torus_inv = Vec::new();
        for (i, b) in bvars.iter().enumerate() {
            torus.push(self.h_alpha(&c, i, b).expect("symbol is invertible"));
            torus_inv.push(
                self.h_alpha_inverse(&c, i, b)
                    .expect("symbol is invertible"),
            );
        }
        torus_inv.reverse();
        let t = mat_product(&c, self.dim, &torus);
        let ti = mat_product(&c, self.dim, &torus_inv);
        let mut multi = Vec::new();
        for alpha in 0..rs.len() {
            let mut scale = a.clone();
            for i in 0..l {
                scale = scale.mul(&LaurentPoly::var_pow(1 + i as u32, rs.pairing(alpha, i)));
            }
            let lhs = mat_product(
                &c,
                self.dim,
                &[t.clone(), self.x_alpha(&c, alpha, &a), ti.clone()],
            );
            multi.push(MultiTorusCheck {
                alpha: rs.label(alpha),
                pass: lhs == self.x_alpha(&c, alpha, &scale),
            });
        }
        let modulus = rs
            .simple()
            .map(|beta| {
                let negative_sum: i32 = rs.negative().map(|al| rs.pairing(al, beta)).sum();
                let rho = rs.rho_pairing(beta).expect("simple root");
                ModulusCheck {
                    beta: rs.label(beta),
                    negative_sum,
                    rho_pairing: rho,
                    pass: negative_sum == -rho,
                }
            })
            .collect();
        TorusReport {
            pairs,
            multi,
            modulus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TorusPair {
    pub alpha: String,
    pub beta: String,
    pub exponent: i32,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiTorusCheck {
    pub alpha: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModulusCheck {
    pub beta: String,
    pub negative_sum: i32,
    pub rho_pairing: i32,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TorusReport {
    pub pairs: Vec<TorusPair>,
    pub multi: Vec<MultiTorusCheck>,
    pub modulus: Vec<ModulusCheck>,
}

impl TorusReport {
    pub fn all_pass(&self) -> bool {
        self.pairs.iter().all(|p| p.pass)
            && self.multi.iter().all(|m| m.pass)
            && self.modulus.iter().all(|m| m.pass)
    }
}

fn basis_position(rs: &RootSystem, alpha: RootId) -> usize {
    let r = rs.num_positive();
    if rs.is_positive(alpha) {
        r - 1 - alpha
    } else {
        alpha + rs.rank()
    }
}

struct Builder {
    x: Vec<Mat<Q>>,
    h: Vec<Mat<Q>>,
    /// Reference nonzero position of each root vector.
    reference: Vec<(usize, usize)>,
}

impl Builder {
    fn new(rs: &RootSystem) -> Result<Self, ChevalleyError> {
        let ct = rs.cartan_type();
        let (family, l) = (ct.family, ct.rank);
        let weights = natural_weights(family, l);
        let form = invariant_form(family, l);
        let r = rs.num_positive();
        let mut x: Vec<Option<Mat<Q>>> = vec![None; rs.len()];
        let mut h = Vec::with_capacity(l);
        for i in rs.simple() {
            let e = root_vector(rs, &weights, form.as_ref(), i)?;
            let f = root_vector(rs, &weights, form.as_ref(), rs.negate(i))?;
            let t = bracket(&e, &f);
            let te = bracket(&t, &e);
            let (pi, pj) = first_nonzero(&e);
            let lambda = te.get(pi, pj) / e.get(pi, pj);
            if lambda.is_zero() || qmat_scale(&e, lambda) != te {
                return Err(ChevalleyError::Consistency(format!(
                    "simple root {} is not an sl2 triple",
                    rs.label(i)
                )));
            }
            let s = q_int(2) / lambda;
            h.push(qmat_scale(&t, s));
            x[i] = Some(e);
            x[rs.negate(i)] = Some(qmat_scale(&f, s));
        }
        for xi in l..r {
            let (ai, eta) = rs
                .simple()
                .find_map(|i| {
                    let s: Vec<i32> = rs
                        .root(xi)
                        .simple
                        .iter()
                        .zip(&rs.root(i).simple)
                        .map(|(a, b)| a - b)
                        .collect();
                    rs.find(&s).filter(|&e| rs.is_positive(e)).map(|e| (i, e))
                })
                .ok_or_else(|| {
                    ChevalleyError::Consistency(format!("no decomposition of {}", rs.label(xi)))
                })?;
            let (p, _) = rs.string(ai, eta);
            let scale = Q::new(1, (p + 1) as i64);
            let pos = bracket(x[ai].as_ref().unwrap(), x[eta].as_ref().unwrap());
            let neg = bracket(
                x[rs.negate(ai)].as_ref().unwrap(),
                x[rs.negate(eta)].as_ref().unwrap(),
            );
            x[xi] = Some(qmat_scale(&pos, scale));
            x[rs.negate(xi)] = Some(qmat_scale(&neg, -scale));
        }
        let x: Vec<Mat<Q>> = x
            .into_iter()
            .map(|m| m.expect("every root vector constructed"))
            .collect();
        let mut reference = Vec::with_capacity(x.len());
        for (id, m) in x.iter().enumerate() {
            if is_zero_mat(m) {
                return Err(ChevalleyError::Consistency(format!(
                    "root vector {} vanishes",
                    rs.label(id)
                )));
            }
            reference.push(first_nonzero(m));
        }
        Ok(Self { x, h, reference })
    }

    /// Coordinates of a matrix in the Chevalley basis (basis order).
    fn coordinates(&self, rs: &RootSystem, m: &Mat<Q>) -> Result<Vec<Q>, ChevalleyError> {
        let l = rs.rank();
        let d = rs.lie_dimension();
        let n = m.n;
        let mut out = vec![Q::zero(); d];
        for (id, xv) in self.x.iter().enumerate() {
            let (i, j) = self.reference[id];
            out[basis_position(rs, id)] = m.get(i, j) / xv.get(i, j);
        }
        // diagonal = sum_k c_k diag(H_k)
        let mut rows: Vec<Vec<Q>> = (0..n)
            .map(|i| {
                let mut row: Vec<Q> = self.h.iter().map(|hk| *hk.get(i, i)).collect();
                row.push(-*m.get(i, i));
                row
            })
            .collect();
        let ns = nullspace(&rows, l + 1);
        let sol = ns.iter().find(|v| !v[l].is_zero()).ok_or_else(|| {
            ChevalleyError::Consistency("diagonal part outside the Cartan subalgebra".into())
        })?;
        let norm = sol[l];
        for k in 0..l {
            out[rs.num_positive() + k] = sol[k] / norm;
        }
        rows.clear();
        // reconstruct
        let mut rec = qmat_zero(n);
        for (id, xv) in self.x.iter().enumerate() {
            let c = out[basis_position(rs, id)];
            if !c.is_zero() {
                for (a, b) in rec.data.iter_mut().zip(&xv.data) {
                    *a += c * b;
                }
            }
        }
        for (k, hk) in self.h.iter().enumerate() {
            let c = out[rs.num_positive() + k];
            for (a, b) in rec.data.iter_mut().zip(&hk.data) {
                *a += c * b;
            }
        }
        if &rec != m {
            return Err(ChevalleyError::Consistency(
                "matrix outside the Lie algebra".into(),
            ));
        }
        Ok(out)
    }

    fn basis_matrix(&self, rs: &RootSystem, pos: usize) -> &Mat<Q> {
        let r = rs.num_positive();
        let l = rs.rank();
        if pos < r {
            &self.x[r - 1 - pos]
        } else if pos < r + l {
            &self.h[pos - r]
        } else {
            &self.x[pos - l]
        }
    }

    fn ad_of(&self, rs: &RootSystem, m: &Mat<Q>) -> Result<Mat<i64>, ChevalleyError> {
        let d = rs.lie_dimension();
        let mut out = Mat::from_fn(d, |_, _| 0i64);
        for col in 0..d {
            let coords = self.coordinates(rs, &bracket(m, self.basis_matrix(rs, col)))?;
            for (row, c) in coords.iter().enumerate() {
                if !c.is_integer() {
                    return Err(ChevalleyError::Consistency(
                        "non-integral adjoint matrix".into(),
                    ));
                }
                out.set(row, col, c.to_integer());
            }
        }
        Ok(out)
    }

    fn finish(self, rs: RootSystem) -> Result<ChevalleyData, ChevalleyError> {
        let d = rs.lie_dimension();
        let l = rs.rank();
        let fail = |msg: String| Err(ChevalleyError::Consistency(msg));
        let ad: Vec<Mat<i64>> = self
            .x
            .iter()
            .map(|m| self.ad_of(&rs, m))
            .collect::<Result<_, _>>()?;
        let ad_cartan: Vec<Mat<i64>> = self
            .h
            .iter()
            .map(|m| self.ad_of(&rs, m))
            .collect::<Result<_, _>>()?;

        // [H_i, X_beta] = <beta, alpha_i> X_beta
        for (i, hk) in self.h.iter().enumerate() {
            for (beta, xb) in self.x.iter().enumerate() {
                let expect = qmat_scale(xb, q_int(rs.pairing(beta, i) as i64));
                if bracket(hk, xb) != expect {
                    return fail(format!(
                        "[H_{}, X_{}] has the wrong weight",
                        i + 1,
                        rs.label(beta)
                    ));
                }
            }
        }
        // [X_alpha, X_{-alpha}] = H_alpha
        for alpha in rs.positive() {
            let coroot = rs.coroot_coefficients(alpha);
            let mut expect = qmat_zero(self.h[0].n);
            for (k, hk) in self.h.iter().enumerate() {
                for (a, b) in expect.data.iter_mut().zip(&hk.data) {
                    *a += q_int(coroot[k] as i64) * b;
                }
            }
            if bracket(&self.x[alpha], &self.x[rs.negate(alpha)]) != expect {
                return fail(format!("[X_a, X_-a] != H_a for a = {}", rs.label(alpha)));
            }
        }
        // structure constants
        let mut structure = BTreeMap::new();
        for alpha in 0..rs.len() {
            for beta in 0..rs.len() {
                let br = bracket(&self.x[alpha], &self.x[beta]);
                match rs.add(alpha, beta) {
                    Some(g) => {
                        let (i, j) = self.reference[g];
                        let n = br.get(i, j) / self.x[g].get(i, j);
                        if qmat_scale(&self.x[g], n) != br || !n.is_integer() {
                            return fail(format!(
                                "[X_{}, X_{}] not a multiple",
                                rs.label(alpha),
                                rs.label(beta)
                            ));
                        }
                        let (p, _) = rs.string(alpha, beta);
                        if n.to_integer().abs() != (p + 1) as i64 {
                            return fail(format!(
                                "N({}, {}) = {n}, expected +-{}",
                                rs.label(alpha),
                                rs.label(beta),
                                p + 1
                            ));
                        }
                        structure.insert((alpha, beta), n.to_integer());
                    }
                    None if alpha != rs.negate(beta) => {
                        if !is_zero_mat(&br) {
                            return fail(format!(
                                "[X_{}, X_{}] should vanish",
                                rs.label(alpha),
                                rs.label(beta)
                            ));
                        }
                    }
                    None => {}
                }
            }
        }
        // ad is a representation: ad[A, B] = [ad A, ad B] on basis pairs
        let basis_ad: Vec<&Mat<i64>> = (0..d)
            .map(|pos| {
                let r = rs.num_positive();
                if pos < r {
                    &ad[r - 1 - pos]
                } else if pos < r + l {
                    &ad_cartan[pos - r]
                } else {
                    &ad[pos - l]
                }
            })
            .collect();
        for a in 0..d {
            for b in a + 1..d {
                let br = bracket(self.basis_matrix(&rs, a), self.basis_matrix(&rs, b));
                let lhs = self.ad_of(&rs, &br)?;
                let ab = crate::matrix::int_mul(basis_ad[a], basis_ad[b]);
                let ba = crate::matrix::int_mul(basis_ad[b], basis_ad[a]);
                let rhs = Mat {
                    n: d,
                    data: ab.data.iter().zip(&ba.data).map(|(x, y)| x - y).collect(),
                };
                if lhs != rhs {
                    return fail("adjoint map violates the Jacobi identity".into());
                }
            }
        }
        // divided powers
        let mut exp_terms = Vec::with_capacity(rs.len());
        for (alpha, m) in ad.iter().enumerate() {
            let mut terms = vec![Mat::from_fn(d, |i, j| i64::from(i == j))];
            let mut power = m.clone();
            let mut k: i64 = 1;
            let mut factorial: i64 = 1;
            while power.data.iter().any(|&x| x != 0) {
                factorial *= k;
                if power.data.iter().any(|x| x % factorial != 0) {
                    return fail(format!(
                        "divided power {k} of ad X_{} is not integral",
                        rs.label(alpha)
                    ));
                }
                terms.push(power.map(|x| x / factorial));
                power = crate::matrix::int_mul(&power, m);
                k += 1;
                if k > d as i64 + 1 {
                    return fail("ad X is not nilpotent".into());
                }
            }
            exp_terms.push(terms);
        }
        let metadata = build_metadata(&rs, &structure);
        Ok(ChevalleyData {
            dim: d,
            roots: rs,
            ad,
            ad_cartan,
            exp_terms,
            structure,
            metadata,
        })
    }
}

fn first_nonzero(m: &Mat<Q>) -> (usize, usize) {
    let k = m
        .data
        .iter()
        .position(|x| !x.is_zero())
        .expect("nonzero matrix");
    (k / m.n, k % m.n)
}

fn build_metadata(
    rs: &RootSystem,
    structure: &BTreeMap<(RootId, RootId), i64>,
) -> ChevalleyMetadata {
    let r = rs.num_positive();
    let root_order: Vec<String> = (0..rs.len()).map(|id| rs.label(id)).collect();
    let mut basis = Vec::with_capacity(rs.lie_dimension());
    basis.extend((0..r).rev().map(|id| format!("X[{}]", rs.label(id))));
    basis.extend((1..=rs.rank()).map(|i| format!("H[a{i}]")));
    basis.extend((r..rs.len()).map(|id| format!("X[{}]", rs.label(id))));
    let structure_constants: Vec<StructureConstant> = structure
        .iter()
        .map(|(&(a, b), &v)| StructureConstant {
            alpha: rs.label(a),
            beta: rs.label(b),
            sum: rs.label(rs.add(a, b).expect("sum is a root")),
            value: v,
        })
        .collect();
    let sign_convention =
        "X_xi = [X_ai, X_eta]/(p+1) for the first simple ai with eta = xi - ai positive; X_-xi = -[X_-ai, X_-eta]/(p+1)"
            .to_string();
    let canonical =
        serde_json::to_string(&(&root_order, &basis, &structure_constants)).expect("serializable");
    let hash = format!("{:x}", Sha256::digest(canonical.as_bytes()));
    ChevalleyMetadata {
        cartan_type: rs.cartan_type().to_string(),
        root_order,
        basis,
        sign_convention,
        structure_constants,
        hash,
    }
}

/// Coordinates `((a_alpha) negative, (a_beta) simple torus, (a_gamma) positive)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigCellPoint<E> {
    pub negative: Vec<E>,
    pub torus: Vec<E>,
    pub positive: Vec<E>,
}

impl<E: Clone> BigCellPoint<E> {
    pub fn identity<C: Carrier<Elem = E>>(c: &C, data: &ChevalleyData) -> Self {
        let r = data.roots.num_positive();
        Self {
            negative: vec![c.zero(); r],
            torus: vec![c.one(); data.roots.rank()],
            positive: vec![c.zero(); r],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IwahoriReport {
    pub ring: String,
    pub box_size: u64,
    pub image_size: u64,
    pub injective: bool,
}

/// Evaluates the big cell on `{v(a_alpha) >= 1, v(a_beta) = 0, a_gamma arbitrary}`.
pub fn iwahori_box_image(
    data: &ChevalleyData,
    ring: &RingSpec,
    cap: u64,
) -> Result<IwahoriReport, ChevalleyError> {
    if ring.kind() == RingKind::Composite {
        return Err(RingError::ValuationUndefined(ring.composite_modulus()).into());
    }
    let r = data.roots.num_positive();
    let l = data.roots.rank();
    let elements: Vec<RingElement> = ring.elements().collect();
    let maximal: Vec<RingElement> = elements
        .iter()
        .copied()
        .filter(|&a| ring.valuation(a).is_ok_and(|v| v >= 1))
        .collect();
    let units = ring.units();
    let axes: Vec<&[RingElement]> = std::iter::repeat_n(maximal.as_slice(), r)
        .chain(std::iter::repeat_n(units.as_slice(), l))
        .chain(std::iter::repeat_n(elements.as_slice(), r))
        .collect();
    let box_size: u64 = axes.iter().map(|a| a.len() as u64).product();
    if box_size > cap {
        return Err(RingError::TooLarge(box_size as u128).into());
    }
    let mut image: HashSet<Vec<u32>> = HashSet::new();
    let mut idx = vec![0usize; axes.len()];
    loop {
        let coords: Vec<RingElement> = idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect();
        let point = BigCellPoint {
            negative: coords[..r].to_vec(),
            torus: coords[r..r + l].to_vec(),
            positive: coords[r + l..].to_vec(),
        };
        let m = data.big_cell(ring, &point)?;
        image.insert(m.data.iter().map(|e| e.0).collect());
        let mut k = 0;
        loop {
            if k == idx.len() {
                let image_size = image.len() as u64;
                return Ok(IwahoriReport {
                    ring: ring.literal(),
                    box_size,
                    image_size,
                    injective: image_size == box_size,
                });
            }
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Haar-measure constants at residue field size `q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HaarConstants {
    pub q: u64,
    pub group_order: u64,
    pub borel_order: u64,
    #[serde(serialize_with = "crate::json::ser_rational")]
    pub k_g: BigRational,
    pub density_exponents: Vec<i32>,
    #[serde(serialize_with = "crate::json::ser_rational")]
    pub iwahori_measure: BigRational,
    #[serde(serialize_with = "crate::json::ser_rational")]
    pub normalization: BigRational,
}

impl HaarConstants {
    pub fn normalized(&self) -> bool {
        self.normalization.is_one()
    }
}

fn big_pow(q: u64, e: usize) -> BigRational {
    BigRational::from_integer(num_traits::pow(BigInt::from(q), e))
}

/// `k_G(q) = |G(F_q)| / q^d`, the density exponents `-<rho,beta>-1`, the
/// additive measure of the Iwahori box and the total mass
/// `k_G^{-1} (1-q^{-1})^l q^{-r} |G| / |B|`, which must equal 1.
pub fn haar_constants(
    data: &ChevalleyData,
    q: u64,
    group_order: u64,
    borel_order: u64,
) -> HaarConstants {
    let rs = &data.roots;
    let (l, r, d) = (rs.rank(), rs.num_positive(), data.dim);
    let qq = BigRational::from_integer(BigInt::from(q));
    let k_g = BigRational::from_integer(BigInt::from(group_order)) / big_pow(q, d);
    let density_exponents = rs
        .simple()
        .map(|b| -rs.rho_pairing(b).expect("simple") - 1)
        .collect();
    let one_minus = BigRational::one() - qq.recip();
    let iwahori_measure = num_traits::pow(one_minus, l) / big_pow(q, r);
    let normalization =
        k_g.recip() * &iwahori_measure * BigRational::from_integer(BigInt::from(group_order))
            / BigRational::from_integer(BigInt::from(borel_order));
    HaarConstants {
        q,
        group_order,
        borel_order,
        k_g,
        density_exponents,
        iwahori_measure,
        normalization,
    }
}

/// `prod |a_beta|^{-<rho,beta>-1}` for torus coordinates of the given valuations.
pub fn density(data: &ChevalleyData, q: u64, torus_valuations: &[u32]) -> BigRational {
    let rs = &data.roots;
    let mut out = BigRational::one();
    for (b, &v) in rs.simple().zip(torus_valuations) {
        // |a| = q^{-v}
        let e = (rs.rho_pairing(b).expect("simple") + 1) as i64 * v as i64;
        let p = big_pow(q, e.unsigned_abs() as usize);
        out *= if e >= 0 { p } else { p.recip() };
    }
    out
}

/// `true` iff `m` is the identity.
pub fn is_identity<C: Carrier>(c: &C, m: &Mat<C::Elem>) -> bool {
    *m == identity(c, m.n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rings::make_ring;
    use crate::rootdata::CartanType;

    fn data(t: &str) -> ChevalleyData {
        ChevalleyData::new(RootSystem::new(t.parse::<CartanType>().unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn all_supported_types_construct() {
        for t in [
            "A1", "A2", "A3", "A4", "B2", "B3", "B4", "C2", "C3", "C4", "D4",
        ] {
            let cd = data(t);
            assert_eq!(cd.dim(), cd.roots().lie_dimension(), "{t}");
        }
    }

    #[test]
    fn a1_adjoint() {
        let cd = data("A1");
        assert_eq!(cd.dim(), 3);
        let ad = cd.ad(0);
        let sq = crate::matrix::int_mul(ad, ad);
        assert!(crate::matrix::int_mul(&sq, ad).data.iter().all(|&x| x == 0));
        // x_a(t) = [[1, -2t, -t^2], [0, 1, t], [0, 0, 1]] up to the sign of the basis
        let terms = cd.exp_terms(0);
        assert_eq!(terms.len(), 3);
        assert_eq!(terms[2].data.iter().filter(|&&x| x != 0).count(), 1);
        assert_eq!(terms[1].data.iter().map(|x| x.abs()).max(), Some(2));
    }

    #[test]
    fn structure_constant_sizes() {
        let a2 = data("A2");
        assert!(a2
            .metadata()
            .structure_constants
            .iter()
            .all(|s| s.value.abs() == 1));
        let b2 = data("B2");
        assert!(b2
            .metadata()
            .structure_constants
            .iter()
            .any(|s| s.value.abs() == 2));
        // antisymmetry
        for (&(a, b), &v) in &b2.structure {
            assert_eq!(b2.structure_constant(b, a), Some(-v));
        }
    }

    #[test]
    fn positive_root_elements_are_upper_unitriangular() {
        let cd = data("B2");
        let r = make_ring(RingKind::MixedChar, 3, 1, 2).unwrap();
        for alpha in cd.roots().positive() {
            let m = cd.x_alpha(&r, alpha, &r.from_int(4));
            for i in 0..cd.dim() {
                assert_eq!(*m.get(i, i), r.one());
                for j in 0..i {
                    assert_eq!(*m.get(i, j), r.zero());
                }
            }
        }
    }

    #[test]
    fn torus_elements_are_diagonal() {
        for t in ["A1", "A2", "B2", "C2"] {
            let cd = data(t);
            for a in 0..cd.roots().len() {
                assert!(cd.verify_torus_diagonal(a), "{t} {}", cd.roots().label(a));
            }
        }
    }

    #[test]
    fn weyl_representative_is_monomial() {
        let cd = data("A1");
        let w = cd.w_alpha(&LaurentRing, 0, &LaurentPoly::var(0)).unwrap();
        assert!(!w.get(0, 2).is_zero() && !w.get(2, 0).is_zero() && w.get(0, 0).is_zero());
        let h = cd.h_alpha(&LaurentRing, 0, &LaurentPoly::int(1)).unwrap();
        assert!(is_identity(&LaurentRing, &h));
    }

    #[test]
    fn symbolic_identities() {
        for t in ["A1", "A2", "B2"] {
            let cd = data(t);
            let rep = cd.verify_torus_conjugation();
            assert!(rep.all_pass(), "{t}");
            assert_eq!(rep.pairs.len(), cd.roots().len() * cd.roots().rank());
            for a in 0..cd.roots().len() {
                assert!(cd.verify_one_parameter_law(a));
            }
        }
    }

    #[test]
    fn big_cell_examples() {
        let cd = data("A1");
        let z4 = make_ring(RingKind::MixedChar, 2, 1, 2).unwrap();
        let id = BigCellPoint::identity(&z4, &cd);
        assert!(is_identity(&z4, &cd.big_cell(&z4, &id).unwrap()));
        let pt = BigCellPoint {
            negative: vec![z4.from_int(2)],
            torus: vec![z4.one()],
            positive: vec![z4.zero()],
        };
        let m = cd.big_cell(&z4, &pt).unwrap();
        assert_eq!(m, cd.x_alpha(&z4, 1, &z4.from_int(2)));
        assert!(!is_identity(&z4, &m));
        let z2 = z4.at_level(1).unwrap();
        let reduced = m.map(|&e| z4.project_unchecked(e, 1));
        assert!(is_identity(&z2, &reduced));
        let bad = BigCellPoint {
            negative: vec![z4.zero()],
            torus: vec![z4.from_int(2)],
            positive: vec![z4.zero()],
        };
        assert_eq!(cd.big_cell(&z4, &bad), Err(ChevalleyError::NotAUnit));
    }

    #[test]
    fn haar_constants_a1_q2() {
        let cd = data("A1");
        let h = haar_constants(&cd, 2, 6, 2);
        assert_eq!(h.k_g, BigRational::new(6.into(), 8.into()));
        assert_eq!(h.density_exponents, vec![-3]);
        assert!(h.normalized());
        assert_eq!(density(&cd, 2, &[1]), BigRational::from_integer(8.into()));
    }

    #[test]
    fn metadata_is_stable() {
        assert_eq!(data("A2").metadata().hash, data("A2").metadata().hash);
        assert_ne!(data("A2").metadata().hash, data("B2").metadata().hash);
    }
}
