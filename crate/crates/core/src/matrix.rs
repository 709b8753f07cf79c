//! Square matrices over an abstract commutative carrier ring.

use std::fmt::Debug;

use crate::rings::{RingElement, RingSpec};

/// A commutative ring that matrices can be built over: a finite ring or a
/// ring of Laurent polynomials.
pub trait Carrier {
    type Elem: Clone + PartialEq + Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_int(&self, v: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn inverse(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }

    fn pow(&self, a: &Self::Elem, e: u32) -> Self::Elem {
        let mut acc = self.one();
        for _ in 0..e {
            acc = self.mul(&acc, a);
        }
        acc
    }
}

impl Carrier for RingSpec {
    type Elem = RingElement;

    fn zero(&self) -> RingElement {
        RingSpec::zero(self)
    }
    fn one(&self) -> RingElement {
        RingSpec::one(self)
    }
    fn from_int(&self, v: i64) -> RingElement {
        RingSpec::from_int(self, v)
    }
    fn add(&self, a: &RingElement, b: &RingElement) -> RingElement {
        RingSpec::add(self, *a, *b)
    }
    fn mul(&self, a: &RingElement, b: &RingElement) -> RingElement {
        RingSpec::mul(self, *a, *b)
    }
    fn neg(&self, a: &RingElement) -> RingElement {
        RingSpec::neg(self, *a)
    }
    fn inverse(&self, a: &RingElement) -> Option<RingElement> {
        self.invert(*a).ok()
    }
    fn is_zero(&self, a: &RingElement) -> bool {
        a.0 == 0
    }
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat<E> {
    pub n: usize,
    pub data: Vec<E>,
}

impl<E: Clone> Mat<E> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &E {
        &self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: E) {
        self.data[i * self.n + j] = v;
    }

    pub fn map<F: Clone>(&self, f: impl FnMut(&E) -> F) -> Mat<F> {
        Mat {
            n: self.n,
            data: self.data.iter().map(f).collect(),
        }
    }
}

pub fn identity<C: Carrier>(c: &C, n: usize) -> Mat<C::Elem> {
    Mat::from_fn(n, |i, j| if i == j { c.one() } else { c.zero() })
}

pub fn mat_mul<C: Carrier>(c: &C, a: &Mat<C::Elem>, b: &Mat<C::Elem>) -> Mat<C::Elem> {
    let n = a.n;
    Mat::from_fn(n, |i, j| {
        let mut acc = c.zero();
        for k in 0..n {
            let x = a.get(i, k);
            if c.is_zero(x) {
                continue;
            }
            let y = b.get(k, j);
            if c.is_zero(y) {
                continue;
            }
            acc = c.add(&acc, &c.mul(x, y));
        }
        acc
    })
}

pub fn mat_product<C: Carrier>(c: &C, n: usize, factors: &[Mat<C::Elem>]) -> Mat<C::Elem> {
    factors
        .iter()
        .fold(identity(c, n), |acc, m| mat_mul(c, &acc, m))
}

pub fn mat_sub<C: Carrier>(c: &C, a: &Mat<C::Elem>, b: &Mat<C::Elem>) -> Mat<C::Elem> {
    Mat {
        n: a.n,
        data: a
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| c.sub(x, y))
            .collect(),
    }
}

/// `sum_k t^k * terms[k]` for integer coefficient matrices.
pub fn polynomial_matrix<C: Carrier>(c: &C, terms: &[Mat<i64>], t: &C::Elem) -> Mat<C::Elem> {
    let n = terms[0].n;
    let powers: Vec<C::Elem> = (0..terms.len()).map(|k| c.pow(t, k as u32)).collect();
    Mat::from_fn(n, |i, j| {
        let mut acc = c.zero();
        for (k, term) in terms.iter().enumerate() {
            let coeff = *term.get(i, j);
            if coeff != 0 {
                acc = c.add(&acc, &c.mul(&c.from_int(coeff), &powers[k]));
            }
        }
        acc
    })
}

/// Integer matrix product.
pub fn int_mul(a: &Mat<i64>, b: &Mat<i64>) -> Mat<i64> {
    let n = a.n;
    Mat::from_fn(n, |i, j| (0..n).map(|k| a.get(i, k) * b.get(k, j)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rings::{make_ring, RingKind};

    #[test]
    fn identity_is_neutral() {
        let r = make_ring(RingKind::MixedChar, 3, 1, 2).unwrap();
        let a = Mat::from_fn(3, |i, j| r.from_int((i * 3 + j) as i64));
        let id = identity(&r, 3);
        assert_eq!(mat_mul(&r, &a, &id), a);
        assert_eq!(mat_mul(&r, &id, &a), a);
    }

    #[test]
    fn polynomial_matrix_evaluates() {
        let r = make_ring(RingKind::MixedChar, 5, 1, 1).unwrap();
        let one = Mat {
            n: 1,
            data: vec![1i64],
        };
        let two = Mat {
            n: 1,
            data: vec![2i64],
        };
        // 1 + 2 t at t = 3 -> 7 = 2 mod 5
        let m = polynomial_matrix(&r, &[one, two], &r.from_int(3));
        assert_eq!(m.data[0], r.from_int(2));
    }
}
