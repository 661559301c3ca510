//! C ABI over the enumerator.
//!
//! Every fallible call returns an [`SpeStatus`] and writes its result through
//! an out-pointer. On failure, [`spe_last_error_message`] describes the error
//! for the calling thread. Strings handed out by the library are released
//! with [`spe_string_free`], and each handle with its own `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spe::combinat::{count_plan, Mode};
use spe::enumerator::{canonical_signature, enumerate, realize, Enumeration, RealizeError};
use spe::minilang::{self, Program};
use spe::skeleton::{extract, ExtractOptions, Granularity, Skeleton};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpeStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    /// The requested mode cannot handle this skeleton.
    Unsupported = 4,
    /// The enumerator has no further variants.
    Exhausted = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpeMode {
    Complete = 0,
    Paper = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpeGranularity {
    Intra = 0,
    Inter = 1,
}

impl From<SpeMode> for Mode {
    fn from(m: SpeMode) -> Mode {
        match m {
            SpeMode::Complete => Mode::Complete,
            SpeMode::Paper => Mode::Paper,
        }
    }
}

impl From<SpeGranularity> for Granularity {
    fn from(g: SpeGranularity) -> Granularity {
        match g {
            SpeGranularity::Intra => Granularity::Intra,
            SpeGranularity::Inter => Granularity::Inter,
        }
    }
}

/// A parsed program.
pub struct SpeProgram(Program);

/// A skeleton extracted from a program.
pub struct SpeSkeleton(Skeleton);

/// A lazy stream of realized variants.
pub struct SpeEnumerator {
    skeleton: Skeleton,
    granularity: Granularity,
    stream: Enumeration,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn fail(status: SpeStatus, msg: impl Into<String>) -> SpeStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SpeStatus) -> SpeStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(SpeStatus::Internal, "internal error"))
}

fn out_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("nul bytes removed")
        .into_raw()
}

/// Message describing the last failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn spe_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library, freed only once.
#[no_mangle]
pub unsafe extern "C" fn spe_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse and check MiniC source.
///
/// # Safety
/// `source` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spe_program_parse(source: *const c_char, out: *mut *mut SpeProgram) -> SpeStatus {
    guard(|| {
        if source.is_null() || out.is_null() {
            return fail(SpeStatus::NullArgument, "null argument");
        }
        let Ok(src) = CStr::from_ptr(source).to_str() else {
            return fail(SpeStatus::InvalidUtf8, "source is not UTF-8");
        };
        match minilang::parse(src) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(SpeProgram(p)));
                SpeStatus::Ok
            }
            Err(e) => fail(SpeStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `p` must be null or a handle from [`spe_program_parse`], freed only once.
#[no_mangle]
pub unsafe extern "C" fn spe_program_free(p: *mut SpeProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `program` must be a live program handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spe_skeleton_extract(
    program: *const SpeProgram,
    decl_holes: bool,
    out: *mut *mut SpeSkeleton,
) -> SpeStatus {
    guard(|| {
        if program.is_null() || out.is_null() {
            return fail(SpeStatus::NullArgument, "null argument");
        }
        let s = extract(&(*program).0, ExtractOptions { decl_holes });
        *out = Box::into_raw(Box::new(SpeSkeleton(s)));
        SpeStatus::Ok
    })
}

/// # Safety
/// `s` must be null or a handle from [`spe_skeleton_extract`], freed only once.
#[no_mangle]
pub unsafe extern "C" fn spe_skeleton_free(s: *mut SpeSkeleton) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of holes, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live skeleton handle.
#[no_mangle]
pub unsafe extern "C" fn spe_skeleton_hole_count(s: *const SpeSkeleton) -> usize {
    s.as_ref().map_or(0, |s| s.0.n())
}

/// The skeleton as a JSON document.
///
/// # Safety
/// `s` must be a live skeleton handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spe_skeleton_to_json(s: *const SpeSkeleton, out: *mut *mut c_char) -> SpeStatus {
    guard(|| {
        if s.is_null() || out.is_null() {
            return fail(SpeStatus::NullArgument, "null argument");
        }
        *out = out_string((*s).0.to_json().to_string());
        SpeStatus::Ok
    })
}

/// Naive and selected-mode counts as decimal strings, since they
/// overflow any fixed-width integer on real programs.
///
/// # Safety
/// `s` must be a live skeleton handle; both out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spe_count(
    s: *const SpeSkeleton,
    mode: SpeMode,
    granularity: SpeGranularity,
    out_naive: *mut *mut c_char,
    out_selected: *mut *mut c_char,
) -> SpeStatus {
    guard(|| {
        if s.is_null() || out_naive.is_null() || out_selected.is_null() {
            return fail(SpeStatus::NullArgument, "null argument");
        }
        let report = count_plan(&(*s).0, granularity.into());
        let Some(selected) = report.selected(mode.into()) else {
            return fail(
                SpeStatus::Unsupported,
                "paper mode does not support nested local scopes",
            );
        };
        *out_selected = out_string(selected.to_string());
        *out_naive = out_string(report.naive.to_string());
        SpeStatus::Ok
    })
}

/// Start enumerating. The enumerator keeps its own copy of the skeleton.
///
/// # Safety
/// `s` must be a live skeleton handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spe_enumerator_new(
    s: *const SpeSkeleton,
    mode: SpeMode,
    granularity: SpeGranularity,
    out: *mut *mut SpeEnumerator,
) -> SpeStatus {
    guard(|| {
        if s.is_null() || out.is_null() {
            return fail(SpeStatus::NullArgument, "null argument");
        }
        let skeleton = (*s).0.clone();
        match enumerate(&skeleton, mode.into(), granularity.into()) {
            Ok(stream) => {
                *out = Box::into_raw(Box::new(SpeEnumerator {
                    skeleton,
                    granularity: granularity.into(),
                    stream,
                }));
                SpeStatus::Ok
            }
            Err(e) => fail(SpeStatus::Unsupported, e.to_string()),
        }
    })
}

/// Produce the next valid variant as C source and its canonical signature.
/// Returns [`SpeStatus::Exhausted`] at the end of the stream. Assignments
/// that collide declaration names are skipped.
///
/// # Safety
/// `e` must be a live enumerator handle and both out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn spe_enumerator_next(
    e: *mut SpeEnumerator,
    out_source: *mut *mut c_char,
    out_signature: *mut *mut c_char,
) -> SpeStatus {
    guard(|| {
        if e.is_null() || out_source.is_null() || out_signature.is_null() {
            return fail(SpeStatus::NullArgument, "null argument");
        }
        let e = &mut *e;
        for a in e.stream.by_ref() {
            match realize(&e.skeleton, &a) {
                Ok(p) => {
                    let sig = match canonical_signature(&e.skeleton, &a, e.granularity) {
                        Ok(s) => s,
                        Err(err) => return fail(SpeStatus::Internal, err.to_string()),
                    };
                    *out_source = out_string(minilang::render(&p));
                    *out_signature = out_string(sig.to_string());
                    return SpeStatus::Ok;
                }
                Err(RealizeError::Invalid(_)) => continue,
                Err(err) => return fail(SpeStatus::Internal, err.to_string()),
            }
        }
        *out_source = ptr::null_mut();
        *out_signature = ptr::null_mut();
        SpeStatus::Exhausted
    })
}

/// # Safety
/// `e` must be null or a handle from [`spe_enumerator_new`], freed only once.
#[no_mangle]
pub unsafe extern "C" fn spe_enumerator_free(e: *mut SpeEnumerator) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}
