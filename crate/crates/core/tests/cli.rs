use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn zeta(args: &[&str], cache: Option<&std::path::Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zeta"));
    cmd.args(args).env_remove("ZETA_CACHE_DIR");
    if let Some(dir) = cache {
        cmd.env("ZETA_CACHE_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

const CC: [&str; 7] = [
    "cc",
    "--group",
    "heisenberg",
    "--ring",
    "zq:p=2,f=1,m=3",
    "--levels",
    "3",
];

#[test]
fn cc_example() {
    let o = zeta(&CC, None);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["coefficients"], serde_json::json!(["1", "5", "22"]));
    assert_eq!(v["family"], "heisenberg");
    for level in v["crosschecks"]["burnside"].as_array().unwrap() {
        assert_eq!(level["holds"], true);
    }
}

#[test]
fn cache_is_transparent_and_self_healing() {
    let dir = tempfile::tempdir().unwrap();
    let plain = zeta(&CC, None).stdout;
    let cold = zeta(&CC, Some(dir.path()));
    let warm = zeta(&CC, Some(dir.path()));
    assert_eq!(cold.stdout, plain);
    assert_eq!(warm.stdout, plain);
    assert!(
        warm.stderr.is_empty(),
        "{}",
        String::from_utf8_lossy(&warm.stderr)
    );
    let entries: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(entries.len(), 2, "one entry per level");
    for e in &entries {
        let bytes = fs::read(e).unwrap();
        fs::write(e, &bytes[..bytes.len() - 7]).unwrap();
    }
    let healed = zeta(&CC, Some(dir.path()));
    assert_eq!(healed.stdout, plain);
    let warning = String::from_utf8_lossy(&healed.stderr);
    assert!(warning.contains("warning: cache entry"), "{warning}");
    // rewritten entries load silently again
    let again = zeta(&CC, Some(dir.path()));
    assert!(again.stderr.is_empty());
}

#[test]
fn transfer_example_is_all_equal() {
    let o = zeta(
        &[
            "transfer",
            "--group",
            "heisenberg",
            "--primes",
            "2,3,5",
            "--levels",
            "3",
        ],
        None,
    );
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["crosschecks"]["all_equal"], true);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn hecke_with_root_sets() {
    let o = zeta(
        &[
            "hecke",
            "--group",
            "chevalley:A2",
            "--s1",
            "a1,a2,a1+a2",
            "--s2",
            "a1,a2,a1+a2,-a1",
            "--ring",
            "zq:p=2,f=1,m=1",
            "--levels",
            "2",
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    // B\G/P for a minimal parabolic of A2 has |W| / |W_P| = 3 cosets
    assert_eq!(v["coefficients"], serde_json::json!(["1", "3"]));
}

#[test]
fn igusa_example() {
    let o = zeta(
        &[
            "igusa",
            "--poly",
            "a*b - c*d",
            "--ring",
            "zq:p=2,f=1,m=4",
            "--arity",
            "4",
            "--json",
        ],
        None,
    );
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["zero_counts"][1], "10");
    assert_eq!(v["crosschecks"]["measures_sum_to_one"], true);
}

#[test]
fn usage_and_budget_exit_codes() {
    assert_eq!(zeta(&["cc"], None).status.code(), Some(2));
    assert_eq!(zeta(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(
        zeta(&["cc", "--group", "heisenberg", "--ring", "zq:p=4"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        zeta(
            &["presburger", "--sum", "q^(-n*s)", "--where", "n*n >= 0"],
            None
        )
        .status
        .code(),
        Some(2)
    );
    let o = zeta(
        &[
            "igusa",
            "--poly",
            "a*b - c*d",
            "--ring",
            "zq:p=5,f=1,m=4",
            "--grid-cap",
            "1000",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
    assert!(zeta(&["--help"], None).status.success());
}

#[test]
fn verify_exit_status_follows_the_checks() {
    let ok = zeta(&["verify", "--suite", "igusa,steinberg,euler"], None);
    assert!(ok.status.success());
    let v = json(&ok);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 3);
    let haar = zeta(&["verify", "--suite", "haar"], None);
    let v = json(&haar);
    assert_eq!(
        haar.status.code(),
        Some(if v["passed"] == true { 0 } else { 1 })
    );
}

#[test]
fn timings_are_opt_in() {
    let v = json(&zeta(&CC, None));
    assert_eq!(v["timings"], serde_json::json!({}));
    let mut args = CC.to_vec();
    args.push("--timings");
    let v = json(&zeta(&args, None));
    assert!(v["timings"]["total_ms"].is_string());
}
