//! C ABI for the dagact classifier.
//!
//! Models are opaque handles created by [`dagact_model_load`] and released
//! with [`dagact_model_free`]. Functions return a [`DagactStatus`]; on failure
//! [`dagact_last_error`] describes the problem. Strings handed out by the
//! library must be released with [`dagact_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::io::Cursor;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dagact::data::{parse_conversations, LabelPolicy};
use dagact::eval::{evaluate, growth_probe};
use dagact::graph::Family;
use dagact::model::context::CellRule;
use dagact::model::Model;
use dagact::train::Checkpoint;
use dagact::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DagactStatus {
    Ok = 0,
    /// Bad arguments: null pointers, unknown enum values, invalid sizes.
    Usage = 1,
    /// Unreadable files, malformed input, checkpoint version mismatch.
    Data = 2,
    /// Non-finite values during computation.
    Numeric = 3,
    /// A panic was caught at the boundary.
    Internal = 4,
}

/// Graph family for [`dagact_growth_probe`].
pub const DAGACT_FAMILY_ALTERNATING: i32 = 0;
pub const DAGACT_FAMILY_MONOLOGUE: i32 = 1;
/// Cell combination rule for [`dagact_growth_probe`].
pub const DAGACT_RULE_SUM: i32 = 0;
pub const DAGACT_RULE_MAX: i32 = 1;

/// A loaded model. Only ever seen through a pointer.
pub struct DagactModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DagactStatus {
    match e.exit_code() {
        1 => DagactStatus::Usage,
        3 => DagactStatus::Numeric,
        _ => DagactStatus::Data,
    }
}

fn usage(message: &str) -> DagactStatus {
    set_error(message.to_string());
    DagactStatus::Usage
}

/// Runs `f`, recording any error or panic for [`dagact_last_error`].
fn guard<F: FnOnce() -> Result<(), DagactStatus>>(f: F) -> DagactStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DagactStatus::Ok,
        Ok(Err(status)) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            DagactStatus::Internal
        }
    }
}

fn fail(e: Error) -> DagactStatus {
    let status = status_of(&e);
    set_error(e.to_string());
    status
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, DagactStatus> {
    if p.is_null() {
        return Err(usage(&format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| usage(&format!("{what} is not valid UTF-8")))
}

fn hand_out(s: String, out: *mut *mut c_char) -> Result<(), DagactStatus> {
    let c = CString::new(s).map_err(|_| usage("output contains a nul byte"))?;
    // SAFETY: callers check `out` for null before producing output.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn dagact_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dagact_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a checkpoint file into a new handle written to `*out`.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dagact_model_load(path: *const c_char, out: *mut *mut DagactModel) -> DagactStatus {
    guard(|| {
        if out.is_null() {
            return Err(usage("out is null"));
        }
        *out = ptr::null_mut();
        let path = read_str(path, "path")?;
        let ck = Checkpoint::load(path).map_err(fail)?;
        *out = Box::into_raw(Box::new(DagactModel { model: ck.model }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from [`dagact_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dagact_model_free(model: *mut DagactModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Predicts every utterance of the conversation lines in `input`. The result,
/// one line per input conversation with a `predicted` field per utterance, is
/// written to `*out` and must be freed with [`dagact_string_free`].
///
/// # Safety
/// `model` must be a live handle, `input` a nul-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dagact_predict_jsonl(
    model: *const DagactModel,
    input: *const c_char,
    out: *mut *mut c_char,
) -> DagactStatus {
    guard(|| {
        if model.is_null() || out.is_null() {
            return Err(usage("model or out is null"));
        }
        *out = ptr::null_mut();
        let input = read_str(input, "input")?;
        let mut buf = Vec::new();
        dagact::cli::predict_stream(&(*model).model, &mut Cursor::new(input), "<input>", &mut buf).map_err(fail)?;
        hand_out(String::from_utf8(buf).expect("JSON output is UTF-8"), out)
    })
}

/// Scores labeled conversation lines in `input` and writes the report as JSON
/// (`accuracy`, `per_class_f1`, `macro_f1`, `confusion`) to `*out`.
///
/// # Safety
/// As for [`dagact_predict_jsonl`].
#[no_mangle]
pub unsafe extern "C" fn dagact_evaluate_jsonl(
    model: *const DagactModel,
    input: *const c_char,
    out: *mut *mut c_char,
) -> DagactStatus {
    guard(|| {
        if model.is_null() || out.is_null() {
            return Err(usage("model or out is null"));
        }
        *out = ptr::null_mut();
        let input = read_str(input, "input")?;
        let corpus = parse_conversations(Cursor::new(input), "<input>", LabelPolicy::Train).map_err(fail)?;
        let report = evaluate(&(*model).model, &corpus.conversations).map_err(fail)?;
        hand_out(report.to_json().to_string(), out)
    })
}

/// Forced-gate probe: writes the sink cell magnitude and its path-count
/// oracle for a conversation of `length` utterances.
///
/// # Safety
/// `magnitude` and `oracle` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dagact_growth_probe(
    length: usize,
    family: i32,
    rule: i32,
    bias: f64,
    magnitude: *mut f64,
    oracle: *mut f64,
) -> DagactStatus {
    guard(|| {
        if magnitude.is_null() || oracle.is_null() {
            return Err(usage("magnitude or oracle is null"));
        }
        let family = match family {
            DAGACT_FAMILY_ALTERNATING => Family::Alternating,
            DAGACT_FAMILY_MONOLOGUE => Family::Monologue,
            other => return Err(usage(&format!("unknown family {other}"))),
        };
        let rule = match rule {
            DAGACT_RULE_SUM => CellRule::Sum,
            DAGACT_RULE_MAX => CellRule::Max,
            other => return Err(usage(&format!("unknown rule {other}"))),
        };
        let sink = growth_probe(length, family, rule, bias).map_err(fail)?.sink();
        *magnitude = sink.magnitude;
        *oracle = sink.oracle;
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dagact_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
