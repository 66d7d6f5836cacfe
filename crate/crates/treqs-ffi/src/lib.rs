//! C ABI over the treqs core: opaque model handles, status codes, and
//! functions to load, inspect, validate, and export models.
//!
//! Conventions:
//! - Handles are opaque pointers created and released by this library.
//! - Functions that can fail return [`TreqsStatus`]; `TREQS_STATUS_OK` is 0.
//! - Returned strings are NUL-terminated UTF-8, owned by the caller, and
//!   must be freed with [`treqs_string_free`].
//! - All functions are panic-safe: a panic is caught and reported as
//!   `TREQS_STATUS_INTERNAL_ERROR`.
//! - Elements, links, and findings are addressed by index in model order,
//!   which is deterministic for a given tree or revision.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use treqs::config::{self, Config};
use treqs::graph::{
    build_graph, coverage, dangling_links, duplicate_links, refinement_cycles, untested_findings,
};
use treqs::model::TraceLinkType;
use treqs::model::{sort_findings, ElementKind, Finding, FindingCode, Model, Severity};
use treqs::vcs::{snapshot_model, RevisionRef};
use treqs::workspace;

/// Status code of every fallible treqs call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreqsStatus {
    /// Success.
    Ok = 0,
    /// A required argument was null or malformed.
    InvalidArgument = 1,
    /// An argument or file was not valid UTF-8.
    Utf8Error = 2,
    /// The file system refused.
    IoError = 3,
    /// Git failed: unknown revision, not a repository, or no git at all.
    GitError = 4,
    /// A bug inside treqs (caught panic).
    InternalError = 5,
}

/// Opaque handle to a loaded requirements model.
pub struct TreqsModel {
    model: Model,
    config: Config,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let message = message.into();
    let cstring = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("invalid error message").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn guard<F: FnOnce() -> TreqsStatus>(f: F) -> TreqsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic in treqs");
            TreqsStatus::InternalError
        }
    }
}

/// # Safety
/// `ptr` must be null or a NUL-terminated string valid for reads.
unsafe fn required_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, TreqsStatus> {
    if ptr.is_null() {
        set_last_error(format!("`{name}` must not be null"));
        return Err(TreqsStatus::InvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error(format!("`{name}` is not valid UTF-8"));
        TreqsStatus::Utf8Error
    })
}

fn load_config_or_default(root: &Path) -> Result<Config, (TreqsStatus, String)> {
    match config::discover(root) {
        Some(path) => match config::load_from(&path) {
            Ok((config, _warnings)) => Ok(config),
            Err(e) => Err((TreqsStatus::IoError, e.to_string())),
        },
        None => Ok(Config::default()),
    }
}

fn out_model(out: *mut *mut TreqsModel, model: Model, config: Config) -> TreqsStatus {
    let handle = Box::new(TreqsModel { model, config });
    // Safety of the write: checked non-null by the callers.
    unsafe { *out = Box::into_raw(handle) };
    TreqsStatus::Ok
}

/// Version of the treqs library as a static string; do not free.
#[no_mangle]
pub extern "C" fn treqs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Last error message of this thread as a newly allocated string, or null if
/// no error occurred yet. Free with treqs_string_free().
#[no_mangle]
pub extern "C" fn treqs_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(message) => message.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Loads a model from the working tree rooted at `root` (configuration is
/// read from `.treqs.toml` there, if present). On success writes a handle to
/// `out`; release it with treqs_model_free().
///
/// # Safety
/// `root` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn treqs_model_load_dir(
    root: *const c_char,
    out: *mut *mut TreqsModel,
) -> TreqsStatus {
    guard(|| {
        if out.is_null() {
            set_last_error("`out` must not be null");
            return TreqsStatus::InvalidArgument;
        }
        let root = match required_str(root, "root") {
            Ok(s) => Path::new(s),
            Err(status) => return status,
        };
        let config = match load_config_or_default(root) {
            Ok(config) => config,
            Err((status, message)) => {
                set_last_error(message);
                return status;
            }
        };
        match workspace::load_model(root, &config.include_globs, &config.vocabulary()) {
            Ok(model) => out_model(out, model, config),
            Err(e) => {
                set_last_error(e.to_string());
                TreqsStatus::IoError
            }
        }
    })
}

/// Loads a model from the committed tree at revision `rev` of the repository
/// at `root`, without touching the working tree.
///
/// # Safety
/// `root` and `rev` must be NUL-terminated strings; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn treqs_model_load_rev(
    root: *const c_char,
    rev: *const c_char,
    out: *mut *mut TreqsModel,
) -> TreqsStatus {
    guard(|| {
        if out.is_null() {
            set_last_error("`out` must not be null");
            return TreqsStatus::InvalidArgument;
        }
        let root = match required_str(root, "root") {
            Ok(s) => Path::new(s),
            Err(status) => return status,
        };
        let rev = match required_str(rev, "rev") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let revision = match RevisionRef::new(rev) {
            Ok(revision) => revision,
            Err(e) => {
                set_last_error(e.to_string());
                return TreqsStatus::InvalidArgument;
            }
        };
        let config = match load_config_or_default(root) {
            Ok(config) => config,
            Err((status, message)) => {
                set_last_error(message);
                return status;
            }
        };
        match snapshot_model(root, &revision, &config.include_globs, &config.vocabulary()) {
            Ok(model) => out_model(out, model, config),
            Err(e) => {
                set_last_error(e.to_string());
                TreqsStatus::GitError
            }
        }
    })
}

/// Releases a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be null or a handle obtained from a treqs load function that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn treqs_model_free(model: *mut TreqsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of elements in the model, or 0 if `model` is null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn treqs_model_element_count(model: *const TreqsModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.elements.len())
}

/// Number of trace links in the model (including links of suppressed
/// duplicate elements), or 0 if `model` is null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn treqs_model_link_count(model: *const TreqsModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.links.len())
}

/// ID of the element at `index` (model order, deterministic). Returns null
/// if `model` is null or `index` is out of range. Free with
/// treqs_string_free().
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn treqs_model_element_id(
    model: *const TreqsModel,
    index: usize,
) -> *mut c_char {
    let Some(handle) = model.as_ref() else {
        return std::ptr::null_mut();
    };
    match handle.model.elements.get_index(index) {
        Some((id, _)) => CString::new(id.as_str())
            .expect("ids contain no NUL")
            .into_raw(),
        None => std::ptr::null_mut(),
    }
}

/// Serializes the whole model (elements, links, findings) as pretty-printed
/// JSON. Deterministic for a given model. Free with treqs_string_free().
///
/// # Safety
/// `model` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn treqs_model_to_json(
    model: *const TreqsModel,
    out: *mut *mut c_char,
) -> TreqsStatus {
    guard(|| {
        let Some(handle) = model.as_ref() else {
            set_last_error("`model` must not be null");
            return TreqsStatus::InvalidArgument;
        };
        if out.is_null() {
            set_last_error("`out` must not be null");
            return TreqsStatus::InvalidArgument;
        }
        let json = handle.model.to_json();
        match CString::new(json) {
            Ok(cstring) => {
                *out = cstring.into_raw();
                TreqsStatus::Ok
            }
            Err(_) => {
                set_last_error("JSON unexpectedly contained a NUL byte");
                TreqsStatus::InternalError
            }
        }
    })
}

/// Runs the full validation pipeline (the same one as `treqs check`):
/// parse/model findings, dangling links, duplicate links, refinement cycles,
/// and test coverage. Writes the findings (one per line, canonical order) to
/// `out_text` — an empty string when the model is clean — and the error and
/// warning counts to `out_errors` / `out_warnings` (either may be null).
/// Free `out_text` with treqs_string_free().
///
/// # Safety
/// `model` must be a live handle; `out_text` must be valid for writes;
/// `out_errors` and `out_warnings` must each be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn treqs_model_validate(
    model: *const TreqsModel,
    out_text: *mut *mut c_char,
    out_errors: *mut usize,
    out_warnings: *mut usize,
) -> TreqsStatus {
    guard(|| {
        let Some(handle) = model.as_ref() else {
            set_last_error("`model` must not be null");
            return TreqsStatus::InvalidArgument;
        };
        if out_text.is_null() {
            set_last_error("`out_text` must not be null");
            return TreqsStatus::InvalidArgument;
        }

        let findings = validate(&handle.model, &handle.config);
        let errors = findings
            .iter()
            .filter(|f| f.severity() == Severity::Error)
            .count();
        let warnings = findings.len() - errors;
        let text: String = findings.iter().map(|f| format!("{f}\n")).collect();

        match CString::new(text) {
            Ok(cstring) => {
                *out_text = cstring.into_raw();
                if !out_errors.is_null() {
                    *out_errors = errors;
                }
                if !out_warnings.is_null() {
                    *out_warnings = warnings;
                }
                TreqsStatus::Ok
            }
            Err(_) => {
                set_last_error("finding text unexpectedly contained a NUL byte");
                TreqsStatus::InternalError
            }
        }
    })
}

fn validate(model: &Model, config: &Config) -> Vec<Finding> {
    let graph = build_graph(model);
    let mut findings = model.findings.clone();
    findings.extend(dangling_links(&graph));
    findings.extend(duplicate_links(&graph));
    for cycle in refinement_cycles(&graph, &TraceLinkType::refines()) {
        let ids: Vec<&str> = cycle.iter().map(|id| id.as_str()).collect();
        let span = model.elements[&cycle[0]].span.clone();
        findings.push(Finding::new(
            FindingCode::RefinementCycle,
            format!("refinement cycle: {} -> {}", ids.join(" -> "), ids[0]),
            span,
        ));
    }
    let via = &config.default_test_link;
    let cov = coverage(
        &graph,
        model,
        &ElementKind::requirement(),
        via,
        &ElementKind::test(),
    );
    if via.as_str() == "tests" {
        findings.extend(cov.findings);
    } else {
        findings.extend(untested_findings(
            model,
            &cov.uncovered,
            via,
            &ElementKind::test(),
        ));
    }
    sort_findings(&mut findings);
    findings
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a string obtained from a treqs function that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn treqs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
