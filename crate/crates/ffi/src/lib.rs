//! C ABI for `mssc`.
//!
//! Every fallible function returns an [`MsscStatus`] and writes its output
//! through an out-pointer. On failure, [`mssc_last_error_message`] describes
//! the most recent error on the calling thread. Handles are opaque and must
//! be released with their `_free` function. No function unwinds into C: a
//! panic is reported as `MSSC_STATUS_PANIC`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mssc::io::{load_dataset, LoadOptions};
use mssc::lima::{dominates, lima_number, AlgoScore};
use mssc::{relative_error, AlgorithmSpec, ClusteringResult, Dataset, DistanceCounter, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Parse = 4,
    Config = 5,
    NotFound = 6,
    Io = 7,
    Json = 8,
    InvalidUtf8 = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

impl From<&Error> for MsscStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => MsscStatus::InvalidArgument,
            Error::DimensionMismatch { .. } => MsscStatus::DimensionMismatch,
            Error::Parse { .. } => MsscStatus::Parse,
            Error::Config(_) => MsscStatus::Config,
            Error::NotFound(_) => MsscStatus::NotFound,
            Error::Io { .. } => MsscStatus::Io,
            Error::Json(_) => MsscStatus::Json,
        }
    }
}

/// Accuracy, time and LIMA number of one algorithm, for dominance checks.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MsscScore {
    pub accuracy: f64,
    pub time: f64,
    pub lima_number: usize,
}

/// A dataset owned by the library.
pub struct MsscDataset(Dataset);

/// The outcome of one clustering run.
pub struct MsscResult(ClusteringResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: MsscStatus, msg: impl Into<String>) -> MsscStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning errors and panics into a status code.
fn guard<F>(f: F) -> MsscStatus
where
    F: FnOnce() -> Result<(), MsscStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MsscStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(MsscStatus::Panic, msg)
        }
    }
}

fn core_err(e: Error) -> MsscStatus {
    fail(MsscStatus::from(&e), e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, MsscStatus> {
    if p.is_null() {
        return Err(fail(MsscStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(MsscStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, MsscStatus> {
    p.as_ref().ok_or_else(|| fail(MsscStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), MsscStatus> {
    if out.is_null() {
        return Err(fail(MsscStatus::NullPointer, format!("{what} is null")));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mssc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last error on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mssc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Copies `m * n` row-major values into a new dataset.
///
/// # Safety
/// `values` must point to `m * n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mssc_dataset_new(
    values: *const f64,
    m: usize,
    n: usize,
    out: *mut *mut MsscDataset,
) -> MsscStatus {
    guard(|| {
        if values.is_null() {
            return Err(fail(MsscStatus::NullPointer, "values is null"));
        }
        let len = m.checked_mul(n).ok_or_else(|| fail(MsscStatus::InvalidArgument, "m * n overflows"))?;
        let data = Dataset::new(std::slice::from_raw_parts(values, len).to_vec(), n).map_err(core_err)?;
        write_out(out, Box::into_raw(Box::new(MsscDataset(data))), "out")
    })
}

/// Loads a delimited text or TSPLIB file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mssc_dataset_load(
    path: *const c_char,
    skip_header: bool,
    out: *mut *mut MsscDataset,
) -> MsscStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let data = load_dataset(path, LoadOptions { skip_header }).map_err(core_err)?;
        write_out(out, Box::into_raw(Box::new(MsscDataset(data))), "out")
    })
}

/// # Safety
/// `data` must be a live handle; `m` and `n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mssc_dataset_shape(data: *const MsscDataset, m: *mut usize, n: *mut usize) -> MsscStatus {
    guard(|| {
        let d = &handle(data, "data")?.0;
        write_out(m, d.m(), "m")?;
        write_out(n, d.n(), "n")
    })
}

/// # Safety
/// `data` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mssc_dataset_free(data: *mut MsscDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Runs the algorithm described by `spec_json` (for example
/// `{"algorithm": "big-means", "s": 1000}`) with `k` clusters.
///
/// # Safety
/// `data` must be a live handle, `spec_json` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mssc_run(
    data: *const MsscDataset,
    spec_json: *const c_char,
    k: usize,
    seed: u64,
    out: *mut *mut MsscResult,
) -> MsscStatus {
    guard(|| {
        let d = &handle(data, "data")?.0;
        let spec = AlgorithmSpec::from_json(str_arg(spec_json, "spec_json")?).map_err(core_err)?;
        let r = spec.run(d, k, seed, &DistanceCounter::new()).map_err(core_err)?;
        write_out(out, Box::into_raw(Box::new(MsscResult(r))), "out")
    })
}

/// # Safety
/// `result` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mssc_result_objective(result: *const MsscResult, out: *mut f64) -> MsscStatus {
    guard(|| write_out(out, handle(result, "result")?.0.objective, "out"))
}

/// # Safety
/// `result` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mssc_result_elapsed_seconds(result: *const MsscResult, out: *mut f64) -> MsscStatus {
    guard(|| write_out(out, handle(result, "result")?.0.elapsed_seconds, "out"))
}

/// Distance evaluations, samples processed and local-search iterations.
///
/// # Safety
/// `result` must be a live handle; every out-pointer writable.
#[no_mangle]
pub unsafe extern "C" fn mssc_result_counts(
    result: *const MsscResult,
    n_d: *mut u64,
    n_s: *mut u64,
    iterations: *mut usize,
) -> MsscStatus {
    guard(|| {
        let r = &handle(result, "result")?.0;
        write_out(n_d, r.n_d, "n_d")?;
        write_out(n_s, r.n_s, "n_s")?;
        write_out(iterations, r.iterations, "iterations")
    })
}

/// # Safety
/// `result` must be a live handle; `k` and `n` writable.
#[no_mangle]
pub unsafe extern "C" fn mssc_result_shape(result: *const MsscResult, k: *mut usize, n: *mut usize) -> MsscStatus {
    guard(|| {
        let c = &handle(result, "result")?.0.centroids;
        write_out(k, c.k(), "k")?;
        write_out(n, c.n(), "n")
    })
}

/// Copies the `k * n` row-major centroid values into `buf`.
///
/// # Safety
/// `buf` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mssc_result_centroids(result: *const MsscResult, buf: *mut f64, len: usize) -> MsscStatus {
    guard(|| {
        let src = handle(result, "result")?.0.centroids.as_slice();
        copy_into(src, buf, len)
    })
}

/// Copies one label per point into `buf`.
///
/// # Safety
/// `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn mssc_result_labels(result: *const MsscResult, buf: *mut usize, len: usize) -> MsscStatus {
    guard(|| {
        let src = handle(result, "result")?.0.assignment.labels();
        copy_into(src, buf, len)
    })
}

unsafe fn copy_into<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), MsscStatus> {
    if buf.is_null() {
        return Err(fail(MsscStatus::NullPointer, "buf is null"));
    }
    if len < src.len() {
        return Err(fail(MsscStatus::BufferTooSmall, format!("need {} values, buffer holds {len}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Serializes the result as JSON. Free the string with [`mssc_string_free`].
///
/// # Safety
/// `result` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mssc_result_to_json(
    result: *const MsscResult,
    omit_timing: bool,
    out: *mut *mut c_char,
) -> MsscStatus {
    guard(|| {
        let r = &handle(result, "result")?.0;
        let mut v = serde_json::to_value(r).map_err(|e| core_err(e.into()))?;
        if omit_timing {
            if let Some(obj) = v.as_object_mut() {
                obj.remove("elapsed_seconds");
            }
        }
        let s = CString::new(v.to_string()).expect("JSON has no NUL");
        write_out(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mssc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `result` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mssc_result_free(result: *mut MsscResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// `100 * (f - f_star) / f_star`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mssc_relative_error(f: f64, f_star: f64, out: *mut f64) -> MsscStatus {
    guard(|| write_out(out, relative_error(f, f_star).map_err(core_err)?, "out"))
}

/// LIMA number of a named algorithm (case-insensitive, common aliases accepted).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mssc_lima_number(name: *const c_char, out: *mut usize) -> MsscStatus {
    guard(|| write_out(out, lima_number(str_arg(name, "name")?).map_err(core_err)?, "out"))
}

/// Whether `b` LIMA-dominates `a`. Times within a relative `time_rel_tol`
/// of each other count as equal.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mssc_dominates(b: MsscScore, a: MsscScore, time_rel_tol: f64, out: *mut bool) -> MsscStatus {
    guard(|| {
        if !(time_rel_tol >= 0.0) {
            return Err(fail(MsscStatus::InvalidArgument, "time_rel_tol must be non-negative"));
        }
        let conv = |s: MsscScore| AlgoScore::new(s.accuracy, s.time, s.lima_number);
        write_out(out, dominates(&conv(b), &conv(a), time_rel_tol), "out")
    })
}
