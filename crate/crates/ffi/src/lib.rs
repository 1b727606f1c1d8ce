//! C interface. Every call returns a [`DxStatus`]; on failure the message is
//! available from [`dx_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dissector::heuristics::Heuristic;
use dissector::interchange::{load_bundle, Bundle, LoadOptions};
use dissector::search::{clustered_explain, coex_explain, ExplanationRecord, SearchParams};
use dissector::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DxStatus {
    Ok = 0,
    NullArgument = 1,
    Config = 2,
    Format = 3,
    Consistency = 4,
    Corruption = 5,
    Io = 6,
    InvalidInput = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DxHeuristic {
    Mmesh = 0,
    Cfh = 1,
    Areas = 2,
    None = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DxSearchParams {
    pub heuristic: DxHeuristic,
    pub b_first: usize,
    pub b_rest: usize,
    pub max_len: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DxDims {
    pub n_samples: usize,
    pub n_concepts: usize,
    pub n_neurons: usize,
    pub grid_height: usize,
    pub grid_width: usize,
}

/// One explained activation range. `hi` is +inf for open ranges.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DxRecord {
    pub neuron: usize,
    pub cluster: u32,
    pub lo: f64,
    pub hi: f64,
    pub iou_num: u64,
    pub iou_den: u64,
    pub visited: u64,
    pub has_formula: bool,
    pub degenerate: bool,
}

/// A loaded bundle.
pub struct DxBundle {
    bundle: Bundle,
}

/// Explanations of one neuron.
pub struct DxResults {
    records: Vec<ExplanationRecord>,
    compact: Vec<Option<CString>>,
    named: Vec<Option<CString>>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DxStatus {
    match e {
        Error::Io { .. } => DxStatus::Io,
        Error::Format(_) => DxStatus::Format,
        Error::Consistency(_) => DxStatus::Consistency,
        Error::Corruption(_) => DxStatus::Corruption,
        Error::InvalidInput(_) => DxStatus::InvalidInput,
        Error::Config(_) => DxStatus::Config,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DxStatus, String)>) -> DxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DxStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DxStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (DxStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DxStatus, String) {
    (DxStatus::NullArgument, format!("{what} is null"))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn dx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Search parameters used when `dx_explain_neuron` gets a null pointer.
#[no_mangle]
pub extern "C" fn dx_search_params_default() -> DxSearchParams {
    let d = SearchParams::default();
    DxSearchParams {
        heuristic: DxHeuristic::Mmesh,
        b_first: d.b_first,
        b_rest: d.b_rest,
        max_len: d.max_len,
    }
}

/// Loads a bundle directory. `*out` is set only on success.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dx_bundle_load(path: *const c_char, verify_meta: bool, out: *mut *mut DxBundle) -> DxStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (DxStatus::InvalidInput, "path is not UTF-8".to_string()))?;
        let dir = Path::new(path);
        if !dir.is_dir() {
            return Err((DxStatus::Config, format!("bundle directory {path} not found")));
        }
        let bundle = load_bundle(dir, LoadOptions { verify_meta }).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(DxBundle { bundle }));
        Ok(())
    })
}

/// # Safety
/// `bundle` must come from `dx_bundle_load` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dx_bundle_free(bundle: *mut DxBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// # Safety
/// `bundle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dx_bundle_dims(bundle: *const DxBundle, out: *mut DxDims) -> DxStatus {
    guard(|| {
        let b = &bundle.as_ref().ok_or_else(|| null("bundle"))?.bundle;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = DxDims {
            n_samples: b.masks.n_samples(),
            n_concepts: b.masks.n_concepts(),
            n_neurons: b.acts.n_neurons(),
            grid_height: b.masks.grid_height(),
            grid_width: b.masks.grid_width(),
        };
        Ok(())
    })
}

/// Clusters one neuron's activations into `n_cls` ranges and explains each.
/// With `n_cls == 0` a single top-quantile range is used instead. `params`
/// may be null for defaults.
///
/// # Safety
/// `bundle` must be a live handle, `params` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dx_explain_neuron(
    bundle: *const DxBundle,
    neuron: usize,
    n_cls: usize,
    seed: u64,
    params: *const DxSearchParams,
    out: *mut *mut DxResults,
) -> DxStatus {
    guard(|| {
        let b = &bundle.as_ref().ok_or_else(|| null("bundle"))?.bundle;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = params.as_ref().copied().unwrap_or_else(|| dx_search_params_default());
        let params = SearchParams {
            heuristic: match p.heuristic {
                DxHeuristic::Mmesh => Heuristic::Mmesh,
                DxHeuristic::Cfh => Heuristic::Cfh,
                DxHeuristic::Areas => Heuristic::Areas,
                DxHeuristic::None => Heuristic::None,
            },
            b_first: p.b_first,
            b_rest: p.b_rest,
            max_len: p.max_len,
            audit: false,
        };
        if neuron >= b.acts.n_neurons() {
            return Err((DxStatus::OutOfRange, format!("neuron {neuron} of {}", b.acts.n_neurons())));
        }
        let explained = if n_cls == 0 {
            coex_explain(&b.masks, &b.acts, neuron, &params)
        } else {
            clustered_explain(&b.masks, &b.acts, neuron, n_cls, seed, &params)
        }
        .map_err(lib_err)?;
        let cstr = |s: String| CString::new(s).ok();
        let records = explained.records;
        let compact = records.iter().map(|r| r.formula.as_ref().and_then(|f| cstr(f.to_compact()))).collect();
        let named = records
            .iter()
            .map(|r| r.formula.as_ref().and_then(|f| cstr(f.display_with(|c| b.catalog.name(c)))))
            .collect();
        *out = Box::into_raw(Box::new(DxResults { records, compact, named }));
        Ok(())
    })
}

/// # Safety
/// `results` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn dx_results_len(results: *const DxResults) -> usize {
    results.as_ref().map_or(0, |r| r.records.len())
}

/// # Safety
/// `results` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dx_results_get(results: *const DxResults, index: usize, out: *mut DxRecord) -> DxStatus {
    guard(|| {
        let r = results.as_ref().ok_or_else(|| null("results"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let rec = r
            .records
            .get(index)
            .ok_or_else(|| (DxStatus::OutOfRange, format!("record {index} of {}", r.records.len())))?;
        *out = DxRecord {
            neuron: rec.neuron,
            cluster: rec.interval.label,
            lo: rec.interval.lo,
            hi: rec.interval.hi,
            iou_num: rec.iou.num(),
            iou_den: rec.iou.den(),
            visited: rec.visited,
            has_formula: rec.formula.is_some(),
            degenerate: rec.degenerate,
        };
        Ok(())
    })
}

/// Formula text of a record: concept names when `named`, otherwise compact
/// ids such as `3 OR 7 AND_NOT 2`. Null when the record has no formula or
/// the index is out of range. Release with `dx_string_free`.
///
/// # Safety
/// `results` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dx_results_formula(results: *const DxResults, index: usize, named: bool) -> *mut c_char {
    let Some(r) = results.as_ref() else {
        set_error("results is null");
        return ptr::null_mut();
    };
    let table = if named { &r.named } else { &r.compact };
    match table.get(index) {
        Some(Some(s)) => s.clone().into_raw(),
        Some(None) => ptr::null_mut(),
        None => {
            set_error(&format!("record {index} of {}", r.records.len()));
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `results` must come from `dx_explain_neuron` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dx_results_free(results: *mut DxResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// # Safety
/// `s` must come from `dx_results_formula` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
