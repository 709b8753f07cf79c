//! Cooper's quantifier elimination on negation normal forms.

use std::collections::BTreeMap;

use num_integer::Integer;

use super::{ceil_div, Atom, Linear, PresburgerFormula as F, Relation};

/// `Le(t)`: `t <= 0`. `Div(d, t)`: `d | t`. `NDiv(d, t)`: not `d | t`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Lit {
    Le(Linear),
    Div(i64, Linear),
    NDiv(i64, Linear),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Nnf {
    True,
    False,
    Lit(Lit),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

fn gcd_all<'a>(it: impl Iterator<Item = &'a i64>) -> i64 {
    it.fold(0i64, |g, c| g.gcd(c))
}

impl Lit {
    fn linear(&self) -> &Linear {
        match self {
            Lit::Le(t) | Lit::Div(_, t) | Lit::NDiv(_, t) => t,
        }
    }

    fn map(&self, f: impl Fn(&Linear) -> Linear) -> Lit {
        match self {
            Lit::Le(t) => Lit::Le(f(t)),
            Lit::Div(d, t) => Lit::Div(*d, f(t)),
            Lit::NDiv(d, t) => Lit::NDiv(*d, f(t)),
        }
    }

    pub(crate) fn negate(&self) -> Lit {
        match self {
            Lit::Le(t) => Lit::Le(t.scale(-1).shift(1)),
            Lit::Div(d, t) => Lit::NDiv(*d, t.clone()),
            Lit::NDiv(d, t) => Lit::Div(*d, t.clone()),
        }
    }

    /// Normal form: gcd-reduced inequalities, residues reduced into `[0, d)`.
    pub(crate) fn simplify(&self) -> Nnf {
        match self {
            Lit::Le(t) => {
                if t.is_constant() {
                    return if t.constant <= 0 {
                        Nnf::True
                    } else {
                        Nnf::False
                    };
                }
                let g = gcd_all(t.coeffs.values());
                if g > 1 {
                    let coeffs = t.coeffs.iter().map(|(v, c)| (v.clone(), c / g)).collect();
                    return Nnf::Lit(Lit::Le(Linear {
                        coeffs,
                        constant: ceil_div(t.constant, g),
                    }));
                }
                Nnf::Lit(self.clone())
            }
            Lit::Div(d, t) | Lit::NDiv(d, t) => {
                let positive = matches!(self, Lit::Div(..));
                let d = *d;
                let mut coeffs = BTreeMap::new();
                for (v, c) in &t.coeffs {
                    let r = c.rem_euclid(d);
                    if r != 0 {
                        coeffs.insert(v.clone(), r);
                    }
                }
                let constant = t.constant.rem_euclid(d);
                if coeffs.is_empty() || d == 1 {
                    return if (constant == 0) == positive {
                        Nnf::True
                    } else {
                        Nnf::False
                    };
                }
                let g = gcd_all(coeffs.values().chain([d, constant].iter()));
                let t = Linear {
                    coeffs: coeffs.into_iter().map(|(v, c)| (v, c / g)).collect(),
                    constant: constant / g,
                };
                let d = d / g;
                Nnf::Lit(if positive {
                    Lit::Div(d, t)
                } else {
                    Lit::NDiv(d, t)
                })
            }
        }
    }
}

impl Nnf {
    pub(crate) fn and(parts: Vec<Nnf>) -> Nnf {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Nnf::True => {}
                Nnf::False => return Nnf::False,
                Nnf::And(qs) => out.extend(qs),
                p => out.push(p),
            }
        }
        out.sort();
        out.dedup();
        match out.len() {
            0 => Nnf::True,
            1 => out.pop().unwrap(),
            _ => Nnf::And(out),
        }
    }

    pub(crate) fn or(parts: Vec<Nnf>) -> Nnf {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Nnf::False => {}
                Nnf::True => return Nnf::True,
                Nnf::Or(qs) => out.extend(qs),
                p => out.push(p),
            }
        }
        out.sort();
        out.dedup();
        match out.len() {
            0 => Nnf::False,
            1 => out.pop().unwrap(),
            _ => Nnf::Or(out),
        }
    }

    pub(crate) fn negate(&self) -> Nnf {
        match self {
            Nnf::True => Nnf::False,
            Nnf::False => Nnf::True,
            Nnf::Lit(l) => l.negate().simplify(),
            Nnf::And(ps) => Nnf::or(ps.iter().map(Nnf::negate).collect()),
            Nnf::Or(ps) => Nnf::and(ps.iter().map(Nnf::negate).collect()),
        }
    }

    fn map_lits(&self, f: &impl Fn(&Lit) -> Nnf) -> Nnf {
        match self {
            Nnf::True | Nnf::False => self.clone(),
            Nnf::Lit(l) => f(l),
            Nnf::And(ps) => Nnf::and(ps.iter().map(|p| p.map_lits(f)).collect()),
            Nnf::Or(ps) => Nnf::or(ps.iter().map(|p| p.map_lits(f)).collect()),
        }
    }

    fn lits<'a>(&'a self, out: &mut Vec<&'a Lit>) {
        match self {
            Nnf::True | Nnf::False => {}
            Nnf::Lit(l) => out.push(l),
            Nnf::And(ps) | Nnf::Or(ps) => ps.iter().for_each(|p| p.lits(out)),
        }
    }

    fn mentions(&self, x: &str) -> bool {
        let mut ls = Vec::new();
        self.lits(&mut ls);
        ls.iter().any(|l| l.linear().coeff(x) != 0)
    }

    fn substitute(&self, x: &str, t: &Linear) -> Nnf {
        self.map_lits(&|l| l.map(|u| u.substitute(x, t)).simplify())
    }

    pub(crate) fn max_modulus(&self) -> i64 {
        let mut ls = Vec::new();
        self.lits(&mut ls);
        ls.iter()
            .map(|l| match l {
                Lit::Div(d, _) | Lit::NDiv(d, _) => *d,
                Lit::Le(_) => 1,
            })
            .max()
            .unwrap_or(1)
    }

    pub(crate) fn to_formula(&self) -> F {
        match self {
            Nnf::True => F::True,
            Nnf::False => F::False,
            Nnf::Lit(l) => lit_formula(l),
            Nnf::And(ps) => F::And(ps.iter().map(Nnf::to_formula).collect()),
            Nnf::Or(ps) => F::Or(ps.iter().map(Nnf::to_formula).collect()),
        }
    }
}

/// Splits `t` into `lhs - rhs` with nonnegative coefficients on both sides.
fn sides(t: &Linear) -> (Linear, Linear) {
    let mut lhs = Linear::default();
    let mut rhs = Linear::default();
    for (v, &c) in &t.coeffs {
        if c > 0 {
            lhs.coeffs.insert(v.clone(), c);
        } else {
            rhs.coeffs.insert(v.clone(), -c);
        }
    }
    if t.constant > 0 && lhs.is_constant() && !rhs.is_constant() {
        lhs.constant = t.constant;
    } else {
        rhs.constant = -t.constant;
    }
    (lhs, rhs)
}

fn lit_formula(l: &Lit) -> F {
    match l {
        Lit::Le(t) => {
            let (lhs, rhs) = sides(t);
            F::atom(Atom::Compare {
                rel: Relation::Le,
                lhs,
                rhs,
            })
        }
        Lit::Div(d, t) | Lit::NDiv(d, t) => {
            let mut lhs = t.clone();
            lhs.constant = 0;
            let rhs = Linear::constant((-t.constant).rem_euclid(*d));
            let a = F::atom(Atom::Congruent {
                lhs,
                rhs,
                modulus: *d,
            });
            if matches!(l, Lit::NDiv(..)) {
                F::Not(a.into())
            } else {
                a
            }
        }
    }
}

fn atom_nnf(atom: &Atom) -> Nnf {
    match atom {
        Atom::Compare { rel, lhs, rhs } => {
            let t = lhs.sub(rhs);
            let le = |t: Linear| Lit::Le(t).simplify();
            match rel {
                Relation::Le => le(t),
                Relation::Lt => le(t.shift(1)),
                Relation::Ge => le(t.scale(-1)),
                Relation::Gt => le(t.scale(-1).shift(1)),
                Relation::Eq => Nnf::and(vec![le(t.clone()), le(t.scale(-1))]),
                Relation::Ne => Nnf::or(vec![le(t.shift(1)), le(t.scale(-1).shift(1))]),
            }
        }
        Atom::Congruent { lhs, rhs, modulus } => Lit::Div(*modulus, lhs.sub(rhs)).simplify(),
    }
}

/// Quantifier-free NNF equivalent of `f`. Bound variables are renamed apart.
pub(crate) fn to_nnf(f: &F, counter: &mut usize) -> Nnf {
    match f {
        F::True => Nnf::True,
        F::False => Nnf::False,
        F::Atom { atom, .. } => atom_nnf(atom),
        F::Not(g) => to_nnf(g, counter).negate(),
        F::And(gs) => Nnf::and(gs.iter().map(|g| to_nnf(g, counter)).collect()),
        F::Or(gs) => Nnf::or(gs.iter().map(|g| to_nnf(g, counter)).collect()),
        F::Exists(v, g) | F::Forall(v, g) => {
            *counter += 1;
            // `#` cannot occur in parsed identifiers
            let fresh = format!("{v}#{counter}");
            let body = to_nnf(&g.rename_free(v, &fresh), counter);
            match f {
                F::Exists(..) => exists(&fresh, &body),
                _ => exists(&fresh, &body.negate()).negate(),
            }
        }
    }
}

/// `exists x. phi` for quantifier-free `phi`.
pub(crate) fn exists(x: &str, phi: &Nnf) -> Nnf {
    match phi {
        Nnf::Or(ps) => Nnf::or(ps.iter().map(|p| exists(x, p)).collect()),
        Nnf::And(ps) => {
            let (with, without): (Vec<_>, Vec<_>) = ps.iter().cloned().partition(|p| p.mentions(x));
            if with.is_empty() {
                return phi.clone();
            }
            let mut parts = without;
            parts.push(cooper(x, &Nnf::and(with)));
            Nnf::and(parts)
        }
        p if p.mentions(x) => cooper(x, p),
        p => p.clone(),
    }
}

fn cooper(x: &str, phi: &Nnf) -> Nnf {
    let mut ls = Vec::new();
    phi.lits(&mut ls);
    let l = ls
        .iter()
        .map(|l| l.linear().coeff(x).abs())
        .filter(|&c| c != 0)
        .fold(1i64, |a, c| a.lcm(&c));
    // scale every literal so that x appears as l*x, then rename l*x to x
    let unit = phi.map_lits(&|lit| {
        let c = lit.linear().coeff(x);
        if c == 0 {
            return Nnf::Lit(lit.clone());
        }
        let m = l / c.abs();
        let fix = |t: &Linear| {
            let mut t = t.scale(m);
            t.coeffs.insert(x.to_string(), c.signum());
            t
        };
        Nnf::Lit(match lit {
            Lit::Le(t) => Lit::Le(fix(t)),
            Lit::Div(d, t) => Lit::Div(d * m, fix(t)),
            Lit::NDiv(d, t) => Lit::NDiv(d * m, fix(t)),
        })
    });
    let unit = if l > 1 {
        Nnf::and(vec![unit, Nnf::Lit(Lit::Div(l, Linear::var(x)))])
    } else {
        unit
    };

    let mut ls = Vec::new();
    unit.lits(&mut ls);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut delta = 1i64;
    for lit in &ls {
        let c = lit.linear().coeff(x);
        if c == 0 {
            continue;
        }
        let mut rest = lit.linear().clone();
        rest.coeffs.remove(x);
        match lit {
            // -x + rest <= 0  =>  x >= rest
            Lit::Le(_) if c < 0 => lower.push(rest),
            // x + rest <= 0  =>  x <= -rest
            Lit::Le(_) => upper.push(rest.scale(-1)),
            Lit::Div(d, _) | Lit::NDiv(d, _) => delta = delta.lcm(d),
        }
    }
    lower.sort();
    lower.dedup();
    upper.sort();
    upper.dedup();
    let use_lower = lower.len() <= upper.len();
    // x -> -infinity (or +infinity): bounds on the far side become false
    let limit = unit.map_lits(&|lit| {
        let c = lit.linear().coeff(x);
        match lit {
            Lit::Le(_) if c != 0 => {
                if (c < 0) == use_lower {
                    Nnf::False
                } else {
                    Nnf::True
                }
            }
            _ => Nnf::Lit(lit.clone()),
        }
    });
    let mut parts = Vec::new();
    for j in 0..delta {
        let shift = if use_lower { j } else { -j };
        parts.push(limit.substitute(x, &Linear::constant(shift)));
        for b in if use_lower { &lower } else { &upper } {
            parts.push(unit.substitute(x, &b.shift(shift)));
        }
    }
    Nnf::or(parts)
}

/// Equivalent quantifier-free formula over the same free variables.
pub fn eliminate_quantifiers(f: &F) -> F {
    to_nnf(f, &mut 0).to_formula()
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn documented_eliminations() {
        let g = eliminate_quantifiers(&parse("exists k (n = 2*k)").unwrap());
        assert_eq!(g, parse("n ≡ 0 (mod 2)").unwrap());
        let g = eliminate_quantifiers(&parse("exists k (l <= k and k <= u)").unwrap());
        assert_eq!(g, parse("l <= u").unwrap());
    }

    #[test]
    fn exhaustive_small_cases() {
        let cases = [
            "exists k (3*k <= n and n < 3*k + 2)",
            "forall k (k <= 0 or k >= n or not (2*k = n))",
            "exists k (exists j (n = 2*k + 3*j and 0 <= k and 0 <= j))",
            "exists k (x - 2*k >= 0 and x - 2*k <= 1 and k ≡ y (mod 3))",
            "not exists k (2*k = x + y and k > y)",
        ];
        for text in cases {
            let f = parse(text).unwrap();
            let g = eliminate_quantifiers(&f);
            assert!(g.is_quantifier_free());
            for a in -12..=12 {
                for b in -6..=6 {
                    let mut env: BTreeMap<String, i64> = [("n", a), ("x", a), ("y", b)]
                        .iter()
                        .map(|(k, v)| (k.to_string(), *v))
                        .collect();
                    let want = match f.eval(&mut env) {
                        Ok(w) => w,
                        Err(_) => continue,
                    };
                    assert_eq!(g.eval(&mut env).unwrap(), want, "{text} at {a},{b}: {g}");
                }
            }
        }
    }
}
