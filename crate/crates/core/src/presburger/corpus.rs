//! Seeded random formulas for the elimination and summation cross-checks.
//!
//! Every quantifier is guarded by explicit bounds on its variable, so the
//! bounded oracle in `PresburgerFormula::eval` decides each formula exactly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{parse, PresburgerFormula};

fn linear(rng: &mut ChaCha8Rng, vars: &[String], coeff: i64, constant: i64) -> String {
    let mut parts = Vec::new();
    for v in vars {
        let c = rng.gen_range(-coeff..=coeff);
        if c != 0 {
            parts.push(format!("{c}*{v}"));
        }
    }
    let k = rng.gen_range(-constant..=constant);
    if k != 0 || parts.is_empty() {
        parts.push(k.to_string());
    }
    parts.join(" + ")
}

fn atom(rng: &mut ChaCha8Rng, vars: &[String]) -> String {
    let lhs = linear(rng, vars, 3, 6);
    if rng.gen_bool(0.25) {
        let m = rng.gen_range(2..=6);
        let r = rng.gen_range(0..m);
        return format!("{lhs} ≡ {r} (mod {m})");
    }
    let rel = ["<=", "<", ">=", ">", "=", "!="].choose(rng).unwrap();
    let rhs = linear(rng, vars, 1, 4);
    format!("{lhs} {rel} {rhs}")
}

struct Gen {
    rng: ChaCha8Rng,
    fresh: usize,
    quantifiers: usize,
}

impl Gen {
    fn formula(&mut self, vars: &[String], depth: usize, nested: bool) -> String {
        let roll = self.rng.gen_range(0..10);
        if depth == 0 || roll < 3 {
            return atom(&mut self.rng, vars);
        }
        match roll {
            3 | 4 => format!(
                "({} and {})",
                self.formula(vars, depth - 1, nested),
                self.formula(vars, depth - 1, nested)
            ),
            5 | 6 => format!(
                "({} or {})",
                self.formula(vars, depth - 1, nested),
                self.formula(vars, depth - 1, nested)
            ),
            7 => format!("not ({})", self.formula(vars, depth - 1, nested)),
            _ if self.quantifiers > 0 => self.quantified(vars, depth, nested),
            _ => atom(&mut self.rng, vars),
        }
    }

    fn quantified(&mut self, vars: &[String], depth: usize, nested: bool) -> String {
        self.quantifiers -= 1;
        self.fresh += 1;
        let k = format!("k{}", self.fresh);
        let lo = linear(&mut self.rng, vars, 1, 4);
        // nested quantifiers get a short window to keep the oracle cheap
        let hi = if nested {
            format!("{lo} + {}", self.rng.gen_range(0..=6))
        } else {
            linear(&mut self.rng, vars, 1, 4)
        };
        let mut inner = vars.to_vec();
        inner.push(k.clone());
        let body = self.formula(&inner, depth - 1, true);
        if self.rng.gen_bool(0.5) {
            format!("exists {k} ({lo} <= {k} and {k} <= {hi} and {body})")
        } else {
            format!("forall {k} ({k} < {lo} or {k} > {hi} or {body})")
        }
    }
}

/// Formulas in the free variables `x, y` with at most three quantifiers.
pub fn qe_corpus(seed: u64, count: usize) -> Vec<PresburgerFormula> {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        fresh: 0,
        quantifiers: 0,
    };
    let free = ["x".to_string(), "y".to_string()];
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        g.quantifiers = g.rng.gen_range(1..=3);
        let text = g.quantified(&free, 3, false);
        let extra = if g.quantifiers > 0 && g.rng.gen_bool(0.5) {
            format!(" or {}", g.quantified(&free, 2, false))
        } else {
            String::new()
        };
        out.push(parse(&format!("{text}{extra}")).expect("generated formula parses"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub weight: String,
    pub formula: String,
    /// Box radius that contains every solution with `Y`-exponent below `depth`.
    pub bound: i64,
    pub depth: usize,
}

/// Convergent summation problems: `n >= 0` carries the `s`-weight and every
/// other variable is bounded by an affine function of `n`.
pub fn sum_corpus(seed: u64, count: usize) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = 6;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let c = rng.gen_range(0..=2i64);
        let d = rng.gen_range(0..=3i64);
        let ny = rng.gen_range(1..=2i64);
        let mut conj = vec![
            "n >= 0".to_string(),
            "l >= 0".into(),
            format!("l <= {c}*n + {d}"),
        ];
        let mut weight = vec![format!("-{ny}*n*s")];
        let lsign = if rng.gen_bool(0.75) { "-" } else { "+" };
        weight.push(format!("{lsign}l"));
        let two = rng.gen_bool(0.4);
        if two {
            conj.push("0 <= m".into());
            conj.push(if rng.gen_bool(0.5) {
                "m <= l".into()
            } else {
                format!("m + l <= n + {}", rng.gen_range(0..=2))
            });
            weight.push(if rng.gen_bool(0.5) {
                "-m".into()
            } else {
                "-2*m".into()
            });
        }
        match rng.gen_range(0..6) {
            0 => {
                let m = rng.gen_range(2..=4);
                conj.push(format!("l ≡ {} (mod {m})", rng.gen_range(0..m)));
            }
            1 => {
                let m = rng.gen_range(2..=3);
                conj.push(format!("n + l ≡ {} (mod {m})", rng.gen_range(0..m)));
            }
            2 => conj.push(format!(
                "exists k (0 <= k and 2*k <= l and l <= 2*k + {})",
                rng.gen_range(0..=1)
            )),
            3 => conj.push(format!(
                "(l >= n - {} or n ≡ 0 (mod 2))",
                rng.gen_range(0..=2)
            )),
            4 => conj.push(format!("not (l = {})", rng.gen_range(0..=2))),
            _ => {}
        }
        if rng.gen_bool(0.2) {
            conj.push(format!(
                "forall k (k < 0 or k > l or not (3*k = n + {}))",
                rng.gen_range(0..=2)
            ));
        }
        let bound = 2 * depth as i64 + 3 + 2;
        out.push(CorpusEntry {
            weight: format!("q^({})", weight.join(" ")),
            formula: conj.join(" and "),
            bound,
            depth,
        });
    }
    out
}
