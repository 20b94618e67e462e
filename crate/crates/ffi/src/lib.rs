//! C ABI for `bruhat-control`.
//!
//! Every fallible function returns a [`BcStatus`]; on failure a message is
//! available from [`bc_last_error_message`] on the same thread. Strings
//! returned through `char **` are owned by the caller and released with
//! [`bc_string_free`]. Analyses are opaque and released with
//! [`bc_analysis_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bruhat_control::controlsets::{analyze, emit_dot, Analysis, GraphOptions, SemigroupSpec};
use bruhat_control::lattice_tree::classify_isometry;
use bruhat_control::matrix::Matrix;
use bruhat_control::padic::PAdicContext;
use bruhat_control::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInput = 4,
    PrecisionExhausted = 5,
    NoUniqueSink = 6,
    CapExceeded = 7,
    Panic = 8,
}

/// Result of a control-set analysis.
pub struct BcAnalysis {
    inner: Analysis,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BcStatus {
    match e {
        Error::Parse { .. } => BcStatus::Parse,
        Error::PrecisionExhausted(_) | Error::RankAmbiguous { .. } => BcStatus::PrecisionExhausted,
        Error::NoSink | Error::MultipleSinks(_) => BcStatus::NoUniqueSink,
        Error::CapExceeded { .. } => BcStatus::CapExceeded,
        _ => BcStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), BcStatus>) -> BcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            BcStatus::Panic
        }
    }
}

fn fail(e: Error) -> BcStatus {
    set_error(&e.to_string());
    status_of(&e)
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, BcStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(BcStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        BcStatus::InvalidUtf8
    })
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), BcStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(BcStatus::NullPointer);
    }
    *out = CString::new(s).expect("no interior nul").into_raw();
    Ok(())
}

unsafe fn analysis<'a>(a: *const BcAnalysis) -> Result<&'a Analysis, BcStatus> {
    if a.is_null() {
        set_error("null analysis handle");
        return Err(BcStatus::NullPointer);
    }
    Ok(&(*a).inner)
}

fn check_out<T>(out: *mut T) -> Result<(), BcStatus> {
    if out.is_null() {
        set_error("null output pointer");
        Err(BcStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// Runs a control-set analysis of the JSON spec
/// `{p, precision, group, generators, max_word_len}`.
///
/// # Safety
/// `spec_json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_analysis_new(spec_json: *const c_char, seed: u64, out: *mut *mut BcAnalysis) -> BcStatus {
    guard(|| {
        check_out(out)?;
        let text = read_str(spec_json)?;
        let spec = SemigroupSpec::from_json(text).map_err(fail)?;
        let opts = GraphOptions {
            seed,
            ..GraphOptions::default()
        };
        let inner = analyze(&spec, &opts).map_err(fail)?;
        *out = Box::into_raw(Box::new(BcAnalysis { inner }));
        Ok(())
    })
}

/// # Safety
/// `a` must come from [`bc_analysis_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bc_analysis_free(a: *mut BcAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// # Safety
/// `a` must be a live analysis and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_analysis_control_set_count(a: *const BcAnalysis, out: *mut usize) -> BcStatus {
    guard(|| {
        check_out(out)?;
        *out = analysis(a)?.report.control_sets.len();
        Ok(())
    })
}

/// Order of `W(S)`; 0 when the semigroup has no regular hyperbolic element.
///
/// # Safety
/// `a` must be a live analysis and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_analysis_weyl_subgroup_order(a: *const BcAnalysis, out: *mut usize) -> BcStatus {
    guard(|| {
        check_out(out)?;
        *out = analysis(a)?.report.weyl_subgroup.as_ref().map_or(0, Vec::len);
        Ok(())
    })
}

/// Whether every structural verdict passed.
///
/// # Safety
/// `a` must be a live analysis and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_analysis_consistent(a: *const BcAnalysis, out: *mut bool) -> BcStatus {
    guard(|| {
        check_out(out)?;
        *out = analysis(a)?.report.consistent();
        Ok(())
    })
}

/// # Safety
/// `a` must be a live analysis and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_analysis_report_json(a: *const BcAnalysis, out: *mut *mut c_char) -> BcStatus {
    guard(|| {
        let r = &analysis(a)?.report;
        write_string(out, serde_json::to_string_pretty(r).expect("serializable"))
    })
}

/// # Safety
/// `a` must be a live analysis and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_analysis_dot(a: *const BcAnalysis, out: *mut *mut c_char) -> BcStatus {
    guard(|| {
        let an = analysis(a)?;
        let inv: Option<Vec<usize>> = an
            .report
            .invariant()
            .map(|c| c.nodes.iter().filter_map(|f| an.graph.node_index(f)).collect());
        write_string(out, emit_dot(&an.graph, inv.as_deref()))
    })
}

/// JSON `{valuation, digits, text}` of `num/den` in `Q_p` at `precision`
/// digits.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_padic_from_rational(
    p: u64,
    precision: u32,
    num: i64,
    den: i64,
    out: *mut *mut c_char,
) -> BcStatus {
    guard(|| {
        let ctx = PAdicContext::new(p, precision).map_err(fail)?;
        let x = ctx.from_rational(num, den).map_err(fail)?;
        let v = serde_json::json!({
            "valuation": x.valuation(),
            "digits": x.digits(),
            "text": x.to_string(),
        });
        write_string(out, v.to_string())
    })
}

/// JSON classification of a 2x2 matrix acting on the Bruhat-Tits tree.
///
/// # Safety
/// `matrix_json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_tree_classify(p: u64, matrix_json: *const c_char, out: *mut *mut c_char) -> BcStatus {
    guard(|| {
        let m = Matrix::parse(read_str(matrix_json)?).map_err(fail)?;
        let iso = classify_isometry(&m, p).map_err(fail)?;
        write_string(out, serde_json::to_string(&iso).expect("serializable"))
    })
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn bc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failure on this thread. The pointer stays valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

