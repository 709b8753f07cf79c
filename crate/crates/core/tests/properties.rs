use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

use zeta_core::igusa::{level_set_measures, PolySpec, DEFAULT_GRID_CAP};
use zeta_core::presburger::{
    brute_force_sum, eliminate_quantifiers, parse, qe_corpus, sum_corpus, SummationSpec,
};
use zeta_core::rings::{make_composite, make_ring, RingElement, RingKind, RingSpec};
use zeta_core::zeta::BivariateRational;

fn ring_strategy() -> impl Strategy<Value = RingSpec> {
    prop_oneof![
        (prop::sample::select(vec![2u64, 3, 5]), 1u32..=2, 1u32..=3)
            .prop_map(|(p, f, m)| make_ring(RingKind::MixedChar, p, f, m).unwrap()),
        (prop::sample::select(vec![2u64, 3, 5]), 1u32..=2, 1u32..=3)
            .prop_map(|(p, f, m)| make_ring(RingKind::EqualChar, p, f, m).unwrap()),
        (2u64..=30).prop_map(|n| make_composite(n).unwrap()),
    ]
}

fn elem(r: &RingSpec, k: u64) -> RingElement {
    r.element((k % r.size()) as u32).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn ring_axioms(r in ring_strategy(), a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (a, b, c) = (elem(&r, a), elem(&r, b), elem(&r, c));
        prop_assert_eq!(r.add(a, b), r.add(b, a));
        prop_assert_eq!(r.mul(a, b), r.mul(b, a));
        prop_assert_eq!(r.add(r.add(a, b), c), r.add(a, r.add(b, c)));
        prop_assert_eq!(r.mul(r.mul(a, b), c), r.mul(a, r.mul(b, c)));
        prop_assert_eq!(r.mul(a, r.add(b, c)), r.add(r.mul(a, b), r.mul(a, c)));
        prop_assert_eq!(r.add(a, r.neg(a)), r.zero());
        prop_assert_eq!(r.mul(a, r.one()), a);
        if r.is_unit(a) {
            prop_assert_eq!(r.mul(a, r.invert(a).unwrap()), r.one());
        }
        if r.is_local() {
            // v(ab) = v(a) + v(b), capped at the level
            let (va, vb) = (r.valuation(a).unwrap(), r.valuation(b).unwrap());
            prop_assert_eq!(r.valuation(r.mul(a, b)).unwrap(), (va + vb).min(r.level()));
        }
        prop_assert_eq!(r.decode(&r.encode(a)), Some(a));
    }
}

fn rational_strategy() -> impl Strategy<Value = BivariateRational> {
    (
        prop::collection::vec((-3i64..=3, -2i64..=3, 0i64..=3), 1..4),
        prop::collection::vec((-3i64..=3, 1i64..=3), 0..3),
    )
        .prop_map(|(terms, factors)| {
            let mut r = BivariateRational::from_terms(&terms);
            for (a, b) in factors {
                r = r.divide_by_factor(a, b);
            }
            r
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expansion_is_a_ring_homomorphism(
        a in rational_strategy(),
        b in rational_strategy(),
        q in prop::sample::select(vec![2u64, 3, 5]),
    ) {
        let n = 5;
        let (ea, eb) = (a.expand(q, n).unwrap(), b.expand(q, n).unwrap());
        let sum = a.add(&b).expand(q, n).unwrap();
        let prod = a.mul(&b).expand(q, n).unwrap();
        for k in 0..n {
            prop_assert_eq!(&sum.coefficients[k], &(&ea.coefficients[k] + &eb.coefficients[k]));
            let mut c = BigRational::zero();
            for i in 0..=k {
                c += &ea.coefficients[i] * &eb.coefficients[k - i];
            }
            prop_assert_eq!(&prod.coefficients[k], &c);
        }
        prop_assert!(a.sub(&a).is_zero());
        let reduced = a.reduce().expand(q, n).unwrap();
        prop_assert_eq!(reduced.coefficients, ea.coefficients);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn elimination_preserves_truth(seed in any::<u64>()) {
        let f = &qe_corpus(seed, 1)[0];
        let g = eliminate_quantifiers(f);
        prop_assert!(g.is_quantifier_free());
        for x in -9..=9 {
            for y in -9..=9 {
                let mut env: BTreeMap<String, i64> =
                    [("x".to_string(), x), ("y".to_string(), y)].into();
                prop_assert_eq!(f.eval(&mut env).unwrap(), g.eval(&mut env).unwrap());
            }
        }
    }

    #[test]
    fn display_round_trips(seed in any::<u64>()) {
        let f = &qe_corpus(seed, 1)[0];
        prop_assert_eq!(&parse(&f.to_string()).unwrap(), f);
        let g = eliminate_quantifiers(f);
        prop_assert_eq!(parse(&g.to_string()).unwrap(), g);
    }

    #[test]
    fn brute_force_grows_with_the_box(seed in any::<u64>(), s in 1i64..=3, q in 2u64..=5) {
        let e = &sum_corpus(seed, 1)[0];
        let spec = SummationSpec::parse(&e.weight, &e.formula).unwrap();
        let mut last = BigRational::zero();
        for bound in [0, 2, 4, 7] {
            let v = brute_force_sum(&spec, q, s, bound).unwrap();
            prop_assert!(v >= last);
            last = v;
        }
    }
}

fn poly_strategy() -> impl Strategy<Value = String> {
    let var = prop::sample::select(vec!["x", "y", "z"]);
    let mono = (-3i64..=3, prop::collection::vec((var, 1u32..=2), 1..3)).prop_map(|(c, vs)| {
        let body: Vec<String> = vs.iter().map(|(v, e)| format!("{v}^{e}")).collect();
        format!("{c}*{}", body.join("*"))
    });
    prop::collection::vec(mono, 1..4).prop_map(|ms| ms.join(" + "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn zero_counts_grow_at_most_by_q_to_the_d(
        text in poly_strategy(),
        p in prop::sample::select(vec![2u64, 3]),
    ) {
        let f = PolySpec::parse(&text).unwrap();
        let ring = make_ring(RingKind::MixedChar, p, 1, 3).unwrap();
        let l = level_set_measures(&f, &ring, 3, 3, DEFAULT_GRID_CAP).unwrap();
        let n: Vec<BigInt> = l.zero_counts.iter().map(|c| c.parse().unwrap()).collect();
        let qd = BigInt::from(p).pow(3);
        for w in n.windows(2) {
            prop_assert!(w[1] >= BigInt::zero());
            prop_assert!(w[1] <= &w[0] * &qd);
        }
        prop_assert_eq!(l.total(), BigRational::from_integer(1.into()));
        prop_assert_eq!(PolySpec::parse(&f.to_string()).unwrap(), f);
    }
}
