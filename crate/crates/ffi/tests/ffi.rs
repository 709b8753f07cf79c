use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use zeta_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    zeta_string_free(p);
    s
}

unsafe fn last_error() -> String {
    CStr::from_ptr(zeta_last_error())
        .to_str()
        .unwrap()
        .to_string()
}

#[test]
fn rings_and_class_counts() {
    unsafe {
        let mut ring = ptr::null_mut();
        assert_eq!(
            zeta_ring_parse(c("zq:p=2,f=1,m=2").as_ptr(), &mut ring),
            ZetaStatus::Ok
        );
        assert_eq!((zeta_ring_q(ring), zeta_ring_level(ring)), (2, 2));
        let mut fam = ptr::null_mut();
        assert_eq!(
            zeta_family_parse(c("heisenberg").as_ptr(), &mut fam),
            ZetaStatus::Ok
        );
        let (mut order, mut classes) = (0u64, 0u64);
        assert_eq!(
            zeta_class_count(fam, ring, 0, &mut order, &mut classes),
            ZetaStatus::Ok
        );
        assert_eq!((order, classes), (64, 22));
        assert_eq!(
            zeta_class_count(fam, ring, 10, &mut order, &mut classes),
            ZetaStatus::Budget
        );
        zeta_family_free(fam);
        zeta_ring_free(ring);
        zeta_ring_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut ring = ptr::null_mut();
        assert_eq!(
            zeta_ring_parse(c("zq:p=4").as_ptr(), &mut ring),
            ZetaStatus::Usage
        );
        assert!(ring.is_null());
        assert!(last_error().contains("not prime"), "{}", last_error());
        assert_eq!(
            zeta_ring_parse(ptr::null(), &mut ring),
            ZetaStatus::NullPointer
        );
        let bad = [0xffu8, 0];
        assert_eq!(
            zeta_ring_parse(bad.as_ptr() as *const c_char, &mut ring),
            ZetaStatus::InvalidUtf8
        );
        assert_eq!(zeta_ring_q(ptr::null()), 0);
        let mut sum = ptr::null_mut();
        assert_eq!(
            zeta_presburger_sum(c("q^(n*s)").as_ptr(), c("n >= 0").as_ptr(), &mut sum),
            ZetaStatus::Failed
        );
        assert_eq!(
            zeta_presburger_sum(c("q^(-n*s)").as_ptr(), c("n*n >= 0").as_ptr(), &mut sum),
            ZetaStatus::Usage
        );
    }
}

#[test]
fn presburger_handles() {
    unsafe {
        let mut sum = ptr::null_mut();
        let st = zeta_presburger_sum(
            c("q^(-n*s - l)").as_ptr(),
            c("0 <= l and l <= n").as_ptr(),
            &mut sum,
        );
        assert_eq!(st, ZetaStatus::Ok);
        let mut sigma = 0i64;
        assert_eq!(zeta_sum_sigma0(sum, &mut sigma), ZetaStatus::Ok);
        assert_eq!(sigma, 1);
        let mut s = ptr::null_mut();
        assert_eq!(zeta_sum_expand_json(sum, 2, 3, &mut s), ZetaStatus::Ok);
        // sum_{0 <= l <= n} 2^{-l} at n = 0, 1, 2
        assert_eq!(take(s), r#"["1","3/2","7/4"]"#);
        assert_eq!(zeta_sum_numerator(sum, &mut s), ZetaStatus::Ok);
        assert!(!take(s).is_empty());
        assert_eq!(zeta_sum_denominator(sum, &mut s), ZetaStatus::Ok);
        assert!(take(s).contains("(1 - "));
        zeta_sum_free(sum);
        let mut empty = ptr::null_mut();
        zeta_presburger_sum(c("q^(-n*s)").as_ptr(), c("n = 0").as_ptr(), &mut empty);
        assert_eq!(zeta_sum_sigma0(empty, &mut sigma), ZetaStatus::Absent);
        zeta_sum_free(empty);
    }
}

#[test]
fn run_matches_the_command_line() {
    let args = [
        "cc",
        "--group",
        "heisenberg",
        "--ring",
        "zq:p=2,f=1,m=3",
        "--levels",
        "3",
        "--no-cache",
    ];
    let owned: Vec<CString> = args.iter().map(|a| c(a)).collect();
    let ptrs: Vec<*const c_char> = owned.iter().map(|a| a.as_ptr()).collect();
    unsafe {
        let (mut out, mut code) = (ptr::null_mut(), -1);
        assert_eq!(
            zeta_run(ptrs.as_ptr(), ptrs.len(), &mut out, &mut code),
            ZetaStatus::Ok
        );
        assert_eq!(code, 0);
        let text = take(out);
        assert_eq!(text, zeta_core::cli::run_captured(&args).1);
        assert!(text.contains("\"22\""));
        assert_eq!(
            zeta_run(ptrs.as_ptr(), 1, &mut out, &mut code),
            ZetaStatus::Ok
        );
        assert_eq!(code, 2);
        zeta_string_free(out);
        assert!(!last_error().is_empty());
    }
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn header_compiles_and_links() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let target = exe.parent().unwrap().parent().unwrap();
    let lib = target.join("libzeta_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <string.h>
#include "zeta.h"
int main(void) {
    ZetaRing *r = NULL;
    ZetaFamily *f = NULL;
    uint64_t order = 0, classes = 0;
    if (zeta_ring_parse("zq:p=3,f=1,m=1", &r) != ZETA_STATUS_OK) return 1;
    if (zeta_family_parse("heisenberg", &f) != ZETA_STATUS_OK) return 2;
    if (zeta_class_count(f, r, 0, &order, &classes) != ZETA_STATUS_OK) return 3;
    zeta_family_free(f);
    zeta_ring_free(r);
    if (zeta_ring_parse("nope", &r) != ZETA_STATUS_USAGE || strlen(zeta_last_error()) == 0) return 4;
    printf("%llu %llu\n", (unsigned long long)order, (unsigned long long)classes);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status();
    let Ok(status) = status else {
        eprintln!("skipping: no C compiler");
        return;
    };
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "27 11\n");
}
