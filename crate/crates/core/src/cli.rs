//! The `zeta` command line.
//!
//! Every subcommand emits one JSON object with sorted keys and numbers as
//! decimal strings. `--csv` flattens the same object to `path,value` rows.
//! Exit codes: 0 success, 1 failed verification or computation error,
//! 2 usage error, 3 budget exceeded.

use std::io::Write;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use serde_json::{json, Map, Value};

use crate::cache::{self, Cache};
use crate::groups::{order_law_holds, GroupError, GroupFamily, DEFAULT_CAP, DEFAULT_PAIR_LIMIT};
use crate::igusa::{level_set_measures, IgusaError, PolySpec, DEFAULT_GRID_CAP};
use crate::presburger::{brute_force_coefficients, sum_rational, PresburgerError, SummationSpec};
use crate::rings::{RingError, RingSpec};
use crate::verify;
use crate::zeta::{cc_zeta, hecke_zeta, transfer_report, TransferQuantity, ZetaError, ZetaSeries};

pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "zeta",
    version,
    about = "Exact zeta-function data for Chevalley groups over truncated local rings"
)]
struct Cli {
    /// Accepted for compatibility; JSON is the default output.
    #[arg(long, global = true)]
    json: bool,
    /// Flatten the JSON report to `path,value` rows.
    #[arg(long, global = true, conflicts_with = "json")]
    csv: bool,
    /// Include wall-clock timings (makes output run-dependent).
    #[arg(long, global = true)]
    timings: bool,
    /// Worker threads for parallel enumeration.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Group enumeration cap.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP, value_parser = positive_usize)]
    cap: usize,
    /// Table cache directory; defaults to $ZETA_CACHE_DIR.
    #[arg(long, global = true)]
    cache_dir: Option<std::path::PathBuf>,
    /// Ignore the table cache.
    #[arg(long, global = true, conflicts_with = "cache_dir")]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Conjugacy-class counts c_m for m < M.
    Cc(CcArgs),
    /// Double-coset counts b_m of two parabolics.
    Hecke(HeckeArgs),
    /// Level-set measures of a polynomial.
    Igusa(IgusaArgs),
    /// Rational generating function of a weighted Presburger set.
    Presburger(PresburgerArgs),
    /// Mixed against equal characteristic counts.
    Transfer(TransferArgs),
    /// Run acceptance suites.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct CcArgs {
    #[arg(long)]
    group: String,
    #[arg(long)]
    ring: String,
    /// Number of coefficients; defaults to the ring level.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    levels: Option<u32>,
    /// Largest group for the commuting-pair cross-check.
    #[arg(long, default_value_t = DEFAULT_PAIR_LIMIT)]
    pair_limit: usize,
}

#[derive(Args, Debug)]
struct HeckeArgs {
    #[arg(long)]
    group: String,
    /// Root set such as `a1,a1+a2,-a2`, or `borel`, or `group`.
    #[arg(long)]
    s1: String,
    #[arg(long)]
    s2: String,
    #[arg(long)]
    ring: String,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    levels: Option<u32>,
}

#[derive(Args, Debug)]
struct IgusaArgs {
    #[arg(long)]
    poly: String,
    #[arg(long)]
    ring: String,
    /// Number of coordinates; defaults to the number of variables.
    #[arg(long)]
    arity: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    levels: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_GRID_CAP)]
    grid_cap: u64,
}

#[derive(Args, Debug)]
struct PresburgerArgs {
    /// Weight `q^(...)`, linear in the variables and `s`.
    #[arg(long)]
    sum: String,
    #[arg(long = "where")]
    formula: String,
    /// Coefficients compared against brute force.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    levels: u32,
    /// Box radius of the brute-force check.
    #[arg(long, default_value_t = 16)]
    bound: i64,
    #[arg(long, value_delimiter = ',', default_value = "2,3,5")]
    q: Vec<u64>,
}

#[derive(Args, Debug)]
struct TransferArgs {
    #[arg(long)]
    group: String,
    #[arg(long, value_delimiter = ',', required = true)]
    primes: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    f: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    levels: u32,
    /// Compare double cosets of these parabolics instead of classes.
    #[arg(long, requires = "s2")]
    s1: Option<String>,
    #[arg(long, requires = "s1")]
    s2: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// `all`, suite names or criterion numbers, comma separated.
    #[arg(long, default_value = "all")]
    suite: String,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Budget(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::Failed(_) => EXIT_FAILED,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Budget(m) | CliError::Failed(m) => m,
        }
    }
}

impl From<RingError> for CliError {
    fn from(e: RingError) -> Self {
        match e {
            RingError::TooLarge(_) => CliError::Budget(e.to_string()),
            RingError::Literal(..)
            | RingError::NotPrime(_)
            | RingError::InvalidLevel(_)
            | RingError::InvalidDegree(_)
            | RingError::InvalidModulus(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        match e {
            GroupError::TooLarge { .. } => CliError::Budget(e.to_string()),
            GroupError::Ring(r) => r.into(),
            GroupError::Family(_) | GroupError::Root(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<ZetaError> for CliError {
    fn from(e: ZetaError) -> Self {
        match e {
            ZetaError::Group(g) => g.into(),
            ZetaError::Ring(r) => r.into(),
            ZetaError::Depth | ZetaError::NotCoprime(..) => CliError::Usage(e.to_string()),
            ZetaError::Pole(_) => CliError::Failed(e.to_string()),
        }
    }
}

impl From<IgusaError> for CliError {
    fn from(e: IgusaError) -> Self {
        match e {
            IgusaError::Budget(_) => CliError::Budget(e.to_string()),
            IgusaError::Ring(r) => r.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<PresburgerError> for CliError {
    fn from(e: PresburgerError) -> Self {
        match e {
            PresburgerError::VariableBudget { .. } | PresburgerError::ModulusBudget { .. } => {
                CliError::Budget(e.to_string())
            }
            PresburgerError::Syntax { .. }
            | PresburgerError::Nonlinear { .. }
            | PresburgerError::Modulus { .. }
            | PresburgerError::NotFree(_)
            | PresburgerError::Weight(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

fn s<T: std::fmt::Display>(v: T) -> Value {
    Value::String(v.to_string())
}

fn strings<T: std::fmt::Display>(v: &[T]) -> Value {
    Value::Array(v.iter().map(s).collect())
}

fn coefficients(series: &ZetaSeries) -> Value {
    strings(&series.coefficients)
}

fn parse_ring(text: &str) -> Result<RingSpec, CliError> {
    Ok(text.parse::<RingSpec>()?)
}

fn parse_family(text: &str) -> Result<GroupFamily, CliError> {
    Ok(text.parse::<GroupFamily>()?)
}

/// `borel`, `group`, or a root set of the ambient type.
fn parse_parabolic(ambient: &GroupFamily, text: &str) -> Result<GroupFamily, CliError> {
    let cartan = ambient
        .cartan()
        .ok_or_else(|| CliError::Usage(format!("{ambient} has no root system")))?;
    match text.trim() {
        "borel" => Ok(GroupFamily::borel(cartan)?),
        "group" => Ok(ambient.clone()),
        set => Ok(GroupFamily::parabolic(cartan, set)?),
    }
}

fn cc(a: &CcArgs, cap: usize) -> Result<(Value, bool), CliError> {
    let family = parse_family(&a.group)?;
    let ring = parse_ring(&a.ring)?;
    let depth = a.levels.unwrap_or(ring.level()) as usize;
    let r = cc_zeta(&family, &ring, depth, cap, a.pair_limit)?;
    let q = ring.q();
    let d = family.group_dim()?;
    let order_1 = r.levels.first().map(|l| l.order);
    let mut burnside = Vec::new();
    let mut law = Vec::new();
    let mut ok = true;
    for (k, l) in r.levels.iter().enumerate() {
        let m = k as u32 + 1;
        ok &= l.burnside_ok != Some(false);
        burnside.push(json!({
            "level": s(m),
            "order": s(l.order),
            "classes": s(l.classes),
            "commuting_pairs": l.commuting_pairs.map(s),
            "holds": l.burnside_ok,
        }));
        let holds = order_1.is_some_and(|o1| order_law_holds(l.order, o1, q, m, d));
        law.push(json!({"level": s(m), "order": s(l.order), "holds": holds}));
    }
    Ok((
        json!({
            "family": r.family,
            "ring": r.ring,
            "M": s(depth),
            "coefficients": coefficients(&r.series),
            "crosschecks": {"burnside": burnside, "order_law": law},
        }),
        ok,
    ))
}

fn hecke(a: &HeckeArgs, cap: usize) -> Result<(Value, bool), CliError> {
    let family = parse_family(&a.group)?;
    let s1 = parse_parabolic(&family, &a.s1)?;
    let s2 = parse_parabolic(&family, &a.s2)?;
    let ring = parse_ring(&a.ring)?;
    let depth = a.levels.unwrap_or(ring.level() + 1) as usize;
    let r = hecke_zeta(&family, &s1, &s2, &ring, depth, cap)?;
    let pairs: Vec<Value> = r
        .levels
        .iter()
        .map(|l| {
            json!({
                "level": s(l.level),
                "group_order": s(l.group_order),
                "p1_order": s(l.p1_order),
                "p2_order": s(l.p2_order),
                "double_cosets": s(l.double_cosets),
                "pair_count": s(l.pair_count),
                "holds": l.pair_identity,
            })
        })
        .collect();
    let ok = r.levels.iter().all(|l| l.pair_identity);
    Ok((
        json!({
            "family": r.family,
            "s1": r.s1,
            "s2": r.s2,
            "ring": r.ring,
            "M": s(depth),
            "coefficients": coefficients(&r.series),
            "crosschecks": {"double_coset_pairs": pairs},
        }),
        ok,
    ))
}

fn igusa(a: &IgusaArgs) -> Result<(Value, bool), CliError> {
    let f = PolySpec::parse(&a.poly)?;
    let ring = parse_ring(&a.ring)?;
    let arity = a.arity.unwrap_or(f.variables().len());
    let depth = a.levels.unwrap_or(ring.level()) as usize;
    let l = level_set_measures(&f, &ring, depth, arity, a.grid_cap)?;
    let counts: Vec<num_bigint::BigInt> = l
        .zero_counts
        .iter()
        .map(|c| c.parse().expect("decimal count"))
        .collect();
    let qd = num_bigint::BigInt::from(ring.q()).pow(arity as u32);
    let bounded = counts
        .windows(2)
        .all(|w| w[1] >= 0.into() && w[1] <= &w[0] * &qd);
    let total_one = l.total() == BigRational::from_integer(1.into());
    Ok((
        json!({
            "poly": f.to_string(),
            "ring": ring.literal(),
            "arity": s(arity),
            "M": s(depth),
            "coefficients": strings(&l.measures),
            "zero_counts": l.zero_counts,
            "tail": s(&l.tail),
            "crosschecks": {"measures_sum_to_one": total_one, "zero_count_growth": bounded},
        }),
        total_one && bounded,
    ))
}

fn presburger(a: &PresburgerArgs) -> Result<(Value, bool), CliError> {
    let spec = SummationSpec::parse(&a.sum, &a.formula)?;
    let r = sum_rational(&spec)?;
    let depth = a.levels as usize;
    let mut checks = Map::new();
    let mut ok = true;
    for &q in &a.q {
        if q < 2 {
            return Err(CliError::Usage(format!("q must be at least 2 (got {q})")));
        }
        let slices = brute_force_coefficients(&spec, q, depth, a.bound)?;
        let exp = r.value.expand(q, depth)?;
        let agree = exp.coefficients == slices.coefficients;
        ok &= agree || !slices.complete;
        checks.insert(
            q.to_string(),
            json!({
                "expansion": coefficients(&exp),
                "brute_force": strings(&slices.coefficients),
                "agree": agree,
                "box_complete": slices.complete,
            }),
        );
    }
    Ok((
        json!({
            "sum": a.sum,
            "where": spec.formula.to_string(),
            "variables": spec.variables,
            "P": r.value.numerator_string(),
            "Q": r.value.denominator_string(),
            "sigma0": r.sigma0.map(s),
            "abscissa": r.abscissa.as_ref().map(s),
            "quantifier_free": r.quantifier_free.to_string(),
            "cells": s(r.cells),
            "M": s(depth),
            "bound": s(a.bound),
            "crosschecks": checks,
        }),
        ok,
    ))
}

fn transfer(a: &TransferArgs, cap: usize) -> Result<(Value, bool), CliError> {
    let group = parse_family(&a.group)?;
    let quantity = match (&a.s1, &a.s2) {
        (Some(s1), Some(s2)) => TransferQuantity::DoubleCosets {
            s1: parse_parabolic(&group, s1)?,
            s2: parse_parabolic(&group, s2)?,
            group,
        },
        _ => TransferQuantity::Classes(group),
    };
    let rep = transfer_report(&quantity, &a.primes, a.f, a.levels as usize, cap)?;
    let rows: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| {
            json!({
                "p": s(r.p),
                "f": s(r.f),
                "q": s(r.q),
                "mixed": r.mixed,
                "equal": r.equal,
                "equal_at_level": r.equal_at_level,
            })
        })
        .collect();
    Ok((
        json!({
            "quantity": rep.quantity,
            "M": s(rep.levels),
            "rows": rows,
            "crosschecks": {"all_equal": rep.all_equal()},
        }),
        true,
    ))
}

fn verify_cmd(a: &VerifyArgs, err: &mut dyn Write) -> Result<(Value, bool), CliError> {
    let ids = verify::suite_ids(&a.suite)
        .ok_or_else(|| CliError::Usage(format!("unknown suite `{}`", a.suite)))?;
    let mut criteria = Vec::new();
    let mut ok = true;
    for id in ids {
        let c = verify::run(id);
        let _ = writeln!(
            err,
            "criterion {:>2} [{}] {}",
            c.id,
            if c.passed { "PASS" } else { "FAIL" },
            c.title
        );
        ok &= c.passed;
        criteria.push(serde_json::to_value(&c).expect("serializable"));
    }
    Ok((
        json!({"suite": a.suite, "passed": ok, "criteria": criteria}),
        ok,
    ))
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, x)| flatten(&key(&i.to_string()), x, out)),
        Value::String(t) => out.push((prefix.to_string(), t.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(t: &str) -> String {
    if t.contains([',', '"', '\n']) {
        format!("\"{}\"", t.replace('"', "\"\""))
    } else {
        t.to_string()
    }
}

/// Restores the previously installed cache when dropped.
struct CacheGuard(Option<Cache>);

impl Drop for CacheGuard {
    fn drop(&mut self) {
        cache::install(self.0.take());
    }
}

fn execute(cli: &Cli, err: &mut Vec<u8>) -> Result<(Value, bool), CliError> {
    match &cli.command {
        Command::Cc(a) => cc(a, cli.cap),
        Command::Hecke(a) => hecke(a, cli.cap),
        Command::Igusa(a) => igusa(a),
        Command::Presburger(a) => presburger(a),
        Command::Transfer(a) => transfer(a, cli.cap),
        Command::Verify(a) => verify_cmd(a, err),
    }
}

/// Parses `args` (without the program name), writes the report to `out`
/// and diagnostics to `err`, and returns the exit code.
pub fn run<S: AsRef<str>>(args: &[S], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let argv = std::iter::once("zeta").chain(args.iter().map(AsRef::as_ref));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let cache = if cli.no_cache {
        None
    } else {
        cli.cache_dir
            .clone()
            .map(Cache::new)
            .or_else(Cache::from_env)
    };
    let _guard = CacheGuard(cache::active());
    cache::install(cache);
    let start = Instant::now();
    let mut log = Vec::new();
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
        {
            Ok(pool) => pool.install(|| execute(&cli, &mut log)),
            Err(e) => Err(CliError::Failed(e.to_string())),
        },
        None => execute(&cli, &mut log),
    };
    let _ = err.write_all(&log);
    let (mut report, ok) = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            return e.code();
        }
    };
    let mut timings = Map::new();
    if cli.timings {
        timings.insert("total_ms".into(), s(start.elapsed().as_millis()));
    }
    if let Value::Object(m) = &mut report {
        m.insert("timings".into(), Value::Object(timings));
    }
    let text = if cli.csv {
        let mut rows = Vec::new();
        flatten("", &report, &mut rows);
        let mut t = String::from("path,value\n");
        for (k, v) in rows {
            t.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&v)));
        }
        t
    } else {
        let mut t = serde_json::to_string_pretty(&report).expect("serializable");
        t.push('\n');
        t
    };
    if out.write_all(text.as_bytes()).is_err() {
        return EXIT_FAILED;
    }
    if ok {
        0
    } else {
        EXIT_FAILED
    }
}

/// `run` with stdout captured and stderr discarded.
pub fn run_captured<S: AsRef<str>>(args: &[S]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run(args, &mut out, &mut std::io::sink());
    (code, String::from_utf8(out).expect("utf-8 output"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn json_of(args: &[&str]) -> (i32, Value) {
        let (code, out) = run_captured(args);
        (code, serde_json::from_str(&out).unwrap_or(Value::Null))
    }

    #[test]
    fn cc_heisenberg() {
        let (code, v) = json_of(&[
            "cc",
            "--group",
            "heisenberg",
            "--ring",
            "zq:p=2,f=1,m=3",
            "--levels",
            "3",
            "--no-cache",
        ]);
        assert_eq!(code, 0);
        assert_eq!(v["coefficients"], json!(["1", "5", "22"]));
        assert_eq!(v["M"], "3");
        assert_eq!(v["timings"], json!({}));
    }

    #[test]
    fn exit_codes() {
        let (code, _) = run_captured(&["cc", "--group", "heisenberg"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _) = run_captured(&["cc", "--group", "nope", "--ring", "zq:p=2", "--no-cache"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _) = run_captured(&[
            "cc",
            "--group",
            "chevalley:A2",
            "--ring",
            "zq:p=3,f=1,m=2",
            "--cap",
            "100",
            "--no-cache",
        ]);
        assert_eq!(code, EXIT_BUDGET);
        let (code, _) = run_captured(&[
            "presburger",
            "--sum",
            "q^(-a*s)",
            "--where",
            "a >= 0 and b >= 0 and c >= 0 and d >= 0 and e >= 0",
        ]);
        assert_eq!(code, EXIT_BUDGET);
        let (code, _) = run_captured(&["verify", "--suite", "bogus"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn presburger_report() {
        let (code, v) = json_of(&[
            "presburger",
            "--sum",
            "q^(-n*s - l)",
            "--where",
            "0 <= l and l <= n",
        ]);
        assert_eq!(code, 0);
        assert_eq!(v["sigma0"], "1");
        for q in ["2", "3", "5"] {
            assert_eq!(v["crosschecks"][q]["agree"], json!(true));
        }
    }

    #[test]
    fn csv_projection() {
        let (code, out) = run_captured(&[
            "igusa",
            "--poly",
            "a*b - c*d",
            "--ring",
            "zq:p=2,f=1,m=1",
            "--csv",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("path,value\n"));
        assert!(out.contains("\nzero_counts.1,10\n"), "{out}");
    }
}
