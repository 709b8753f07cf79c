use std::collections::BTreeMap;
use std::time::Instant;

use zeta_core::presburger::{
    brute_force_coefficients, eliminate_quantifiers, qe_corpus, sum_corpus, sum_rational,
    SummationSpec,
};

#[test]
fn qe_corpus_agrees_with_oracle() {
    let t = Instant::now();
    let corpus = qe_corpus(7, 200);
    let mut checked = 0;
    let mut varying = 0;
    for f in &corpus {
        let mut seen = [false; 2];
        let g = eliminate_quantifiers(f);
        assert!(g.is_quantifier_free());
        for x in -25..=25 {
            for y in -25..=25 {
                let mut env: BTreeMap<String, i64> =
                    [("x".to_string(), x), ("y".to_string(), y)].into();
                let want = f.eval(&mut env).unwrap();
                assert_eq!(g.eval(&mut env).unwrap(), want, "{f} at ({x}, {y})");
                seen[want as usize] = true;
                checked += 1;
            }
        }
        varying += usize::from(seen[0] && seen[1]);
    }
    // a corpus of constant formulas would test nothing
    assert!(
        varying * 2 > corpus.len(),
        "only {varying} formulas vary on the box"
    );
    eprintln!(
        "qe: {checked} points, {varying} varying, in {:?}",
        t.elapsed()
    );
}

#[test]
fn sum_corpus_agrees_with_brute_force() {
    let t = Instant::now();
    for e in sum_corpus(11, 200) {
        let spec = SummationSpec::parse(&e.weight, &e.formula).unwrap();
        let r = sum_rational(&spec)
            .unwrap_or_else(|err| panic!("{} over {}: {err}", e.weight, e.formula));
        for q in [2, 3, 5] {
            let slices = brute_force_coefficients(&spec, q, e.depth, e.bound).unwrap();
            assert!(slices.complete, "{}", e.formula);
            assert_eq!(
                r.value.expand(q, e.depth).unwrap().coefficients,
                slices.coefficients,
                "{} over {} at q = {q}",
                e.weight,
                e.formula
            );
        }
    }
    eprintln!("sum: {:?}", t.elapsed());
}
