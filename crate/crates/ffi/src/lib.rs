//! C ABI over `zeta-core`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns a
//! `ZetaStatus`; on failure `zeta_last_error` describes the problem until the
//! next call on the same thread. Strings returned through `char **` are
//! NUL-terminated UTF-8 and must be released with `zeta_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use zeta_core::groups::{conjugacy_class_count, GroupFamily, DEFAULT_CAP};
use zeta_core::presburger::{sum_rational, PresburgerError, SumResult, SummationSpec};
use zeta_core::rings::RingSpec;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZetaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed literal, formula or argument.
    Usage = 3,
    /// An enumeration or elimination budget was exceeded.
    Budget = 4,
    /// The computation failed, e.g. a divergent sum or a failed verification.
    Failed = 5,
    /// The requested value does not exist, e.g. no convergence bound.
    Absent = 6,
    Panic = 7,
}

/// A ring such as `zq:p=2,f=1,m=3`.
pub struct ZetaRing(RingSpec);

/// A group family such as `heisenberg` or `chevalley:A2`.
pub struct ZetaFamily(GroupFamily);

/// A summed Presburger generating function.
pub struct ZetaSum(SumResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: ZetaStatus, msg: impl std::fmt::Display) -> ZetaStatus {
    set_error(&msg.to_string());
    status
}

fn guard(f: impl FnOnce() -> ZetaStatus) -> ZetaStatus {
    set_error("");
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(ZetaStatus::Panic, "internal panic"))
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, ZetaStatus> {
    if p.is_null() {
        return Err(fail(ZetaStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(ZetaStatus::InvalidUtf8, "argument is not UTF-8"))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> ZetaStatus {
    *out = Box::into_raw(Box::new(value));
    ZetaStatus::Ok
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> ZetaStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            ZetaStatus::Ok
        }
        Err(_) => fail(ZetaStatus::Failed, "output contains NUL"),
    }
}

fn presburger_status(e: &PresburgerError) -> ZetaStatus {
    match e {
        PresburgerError::VariableBudget { .. } | PresburgerError::ModulusBudget { .. } => {
            ZetaStatus::Budget
        }
        PresburgerError::Divergent { .. }
        | PresburgerError::Overflow
        | PresburgerError::Unbounded(_) => ZetaStatus::Failed,
        _ => ZetaStatus::Usage,
    }
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn zeta_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zeta_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `literal` is a NUL-terminated string and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn zeta_ring_parse(
    literal: *const c_char,
    out: *mut *mut ZetaRing,
) -> ZetaStatus {
    guard(|| {
        if out.is_null() {
            return fail(ZetaStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = match str_arg(literal) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match text.parse::<RingSpec>() {
            Ok(r) => put(out, ZetaRing(r)),
            Err(e) => fail(ZetaStatus::Usage, e),
        }
    })
}

/// Residue field size, or 0 for a null handle.
///
/// # Safety
/// `ring` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zeta_ring_q(ring: *const ZetaRing) -> u64 {
    ring.as_ref().map_or(0, |r| r.0.q())
}

/// Level `m` of `o/p^m`, or 0 for a null handle.
///
/// # Safety
/// `ring` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zeta_ring_level(ring: *const ZetaRing) -> u32 {
    ring.as_ref().map_or(0, |r| r.0.level())
}

/// # Safety
/// `ring` is null or a live handle, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn zeta_ring_free(ring: *mut ZetaRing) {
    if !ring.is_null() {
        drop(Box::from_raw(ring));
    }
}

/// # Safety
/// `literal` is a NUL-terminated string and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn zeta_family_parse(
    literal: *const c_char,
    out: *mut *mut ZetaFamily,
) -> ZetaStatus {
    guard(|| {
        if out.is_null() {
            return fail(ZetaStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = match str_arg(literal) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match text.parse::<GroupFamily>() {
            Ok(f) => put(out, ZetaFamily(f)),
            Err(e) => fail(ZetaStatus::Usage, e),
        }
    })
}

/// # Safety
/// `family` is null or a live handle, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn zeta_family_free(family: *mut ZetaFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Order and number of conjugacy classes of `family` over `ring`.
/// `cap` bounds the enumeration; 0 selects the default.
///
/// # Safety
/// Handles are live; `order` and `classes` are writable.
#[no_mangle]
pub unsafe extern "C" fn zeta_class_count(
    family: *const ZetaFamily,
    ring: *const ZetaRing,
    cap: usize,
    order: *mut u64,
    classes: *mut u64,
) -> ZetaStatus {
    guard(|| {
        let (Some(f), Some(r)) = (family.as_ref(), ring.as_ref()) else {
            return fail(ZetaStatus::NullPointer, "null handle");
        };
        if order.is_null() || classes.is_null() {
            return fail(ZetaStatus::NullPointer, "null output pointer");
        }
        let cap = if cap == 0 { DEFAULT_CAP } else { cap };
        match f.0.build(&r.0, cap) {
            Ok(g) => {
                let rep = conjugacy_class_count(&g, 0);
                *order = rep.order;
                *classes = rep.classes;
                ZetaStatus::Ok
            }
            Err(e @ zeta_core::groups::GroupError::TooLarge { .. }) => fail(ZetaStatus::Budget, e),
            Err(e) => fail(ZetaStatus::Failed, e),
        }
    })
}

/// Sums `weight` (`q^(...)`) over the solutions of `formula`.
///
/// # Safety
/// Strings are NUL-terminated and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn zeta_presburger_sum(
    weight: *const c_char,
    formula: *const c_char,
    out: *mut *mut ZetaSum,
) -> ZetaStatus {
    guard(|| {
        if out.is_null() {
            return fail(ZetaStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let (w, f) = match (str_arg(weight), str_arg(formula)) {
            (Ok(w), Ok(f)) => (w, f),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let r = SummationSpec::parse(w, f).and_then(|spec| sum_rational(&spec));
        match r {
            Ok(v) => put(out, ZetaSum(v)),
            Err(e) => fail(presburger_status(&e), e),
        }
    })
}

/// Numerator `P` in `X = q` and `Y = q^{-s}`.
///
/// # Safety
/// `sum` is a live handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn zeta_sum_numerator(
    sum: *const ZetaSum,
    out: *mut *mut c_char,
) -> ZetaStatus {
    guard(|| match (sum.as_ref(), out.is_null()) {
        (Some(s), false) => put_string(out, s.0.value.numerator_string()),
        _ => fail(ZetaStatus::NullPointer, "null argument"),
    })
}

/// Denominator `Q` as a product of `(1 - X^a Y^b)` factors.
///
/// # Safety
/// `sum` is a live handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn zeta_sum_denominator(
    sum: *const ZetaSum,
    out: *mut *mut c_char,
) -> ZetaStatus {
    guard(|| match (sum.as_ref(), out.is_null()) {
        (Some(s), false) => put_string(out, s.0.value.denominator_string()),
        _ => fail(ZetaStatus::NullPointer, "null argument"),
    })
}

/// Smallest integer `s` of guaranteed convergence; `Absent` when the sum
/// converges for every `s`.
///
/// # Safety
/// `sum` is a live handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn zeta_sum_sigma0(sum: *const ZetaSum, out: *mut i64) -> ZetaStatus {
    guard(|| match (sum.as_ref(), out.is_null()) {
        (Some(s), false) => match s.0.sigma0 {
            Some(v) => {
                *out = v;
                ZetaStatus::Ok
            }
            None => fail(ZetaStatus::Absent, "converges for every s"),
        },
        _ => fail(ZetaStatus::NullPointer, "null argument"),
    })
}

/// The first `depth` coefficients at `q` as a JSON array of decimal strings.
///
/// # Safety
/// `sum` is a live handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn zeta_sum_expand_json(
    sum: *const ZetaSum,
    q: u64,
    depth: usize,
    out: *mut *mut c_char,
) -> ZetaStatus {
    guard(|| {
        let Some(s) = sum.as_ref() else {
            return fail(ZetaStatus::NullPointer, "null handle");
        };
        if out.is_null() {
            return fail(ZetaStatus::NullPointer, "null output pointer");
        }
        if q < 2 {
            return fail(ZetaStatus::Usage, "q must be at least 2");
        }
        match s.0.value.expand(q, depth) {
            Ok(series) => {
                let v: Vec<String> = series.coefficients.iter().map(|c| c.to_string()).collect();
                put_string(out, serde_json::to_string(&v).expect("serializable"))
            }
            Err(e) => fail(ZetaStatus::Failed, e),
        }
    })
}

/// # Safety
/// `sum` is null or a live handle, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn zeta_sum_free(sum: *mut ZetaSum) {
    if !sum.is_null() {
        drop(Box::from_raw(sum));
    }
}

/// Runs the command line with `argv[0..argc]` (no program name) and returns
/// its JSON report in `out` and its exit code in `exit_code`. The status is
/// `Ok` whenever the command ran, whatever its exit code.
///
/// # Safety
/// `argv` holds `argc` NUL-terminated strings; `out` and `exit_code` are writable.
#[no_mangle]
pub unsafe extern "C" fn zeta_run(
    argv: *const *const c_char,
    argc: usize,
    out: *mut *mut c_char,
    exit_code: *mut i32,
) -> ZetaStatus {
    guard(|| {
        if out.is_null() || exit_code.is_null() || (argv.is_null() && argc > 0) {
            return fail(ZetaStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let mut args = Vec::with_capacity(argc);
        for i in 0..argc {
            match str_arg(*argv.add(i)) {
                Ok(a) => args.push(a),
                Err(s) => return s,
            }
        }
        let mut stdout = Vec::new();
        let mut stderr = Vec::new();
        *exit_code = zeta_core::cli::run(&args, &mut stdout, &mut stderr);
        if !stderr.is_empty() {
            set_error(String::from_utf8_lossy(&stderr).trim_end());
        }
        put_string(out, String::from_utf8_lossy(&stdout).into_owned())
    })
}
