//! C ABI over the General Effect Modelling pipeline.
//!
//! Conventions: every fallible call returns a [`GemStatus`]; a non-OK status
//! leaves a thread-local message retrievable with
//! [`gem_last_error_message`]. Handles are opaque and freed with their
//! `_free` function. Matrix buffers are caller-allocated, row-major `f64`.

use gem_core::cv::CvScheme;
use gem_core::dataset::{load_dataset, Dataset, ResponseSelector, Schema};
use gem_core::design::parse_formula;
use gem_core::enet::{cv_enet, Family};
use gem_core::error::Error;
use gem_core::gem::{fit_gem_dataset, target_variable, GemFit, GemFitDocument};
use gem_core::pca::fit_pca;
use gem_core::pls::{cross_validate, encode_target, TargetKind};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GemStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// File could not be read or written.
    Io = 3,
    /// The data violates an invariant (missing value, rank deficiency, ...).
    Data = 4,
    /// A formula, term or option was invalid.
    Argument = 5,
    /// An output buffer was too small.
    BufferTooSmall = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let owned = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
}

fn status_from(err: &Error) -> GemStatus {
    set_error(&err.to_string());
    match err {
        Error::Io { .. } | Error::Csv(_) => GemStatus::Io,
        Error::Formula(_) | Error::InvalidArgument(_) | Error::UnknownTerm(_) => {
            GemStatus::Argument
        }
        _ => GemStatus::Data,
    }
}

/// Message describing the most recent failure on this thread, or null.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gem_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

/// Library version as a static string; never freed.
#[no_mangle]
pub extern "C" fn gem_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Free a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a gem_* function documented to transfer
/// string ownership, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gem_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Opaque dataset handle.
#[repr(C)]
pub struct GemDataset {
    _private: [u8; 0],
}

/// Opaque fitted-model handle (decomposition plus the dataset it came from).
#[repr(C)]
pub struct GemModel {
    _private: [u8; 0],
}

struct DatasetInner(Dataset);

struct ModelInner {
    dataset: Dataset,
    fit: GemFit,
}

unsafe fn utf8<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, GemStatus> {
    if ptr.is_null() {
        set_error(&format!("{what} is null"));
        return Err(GemStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        GemStatus::InvalidUtf8
    })
}

unsafe fn dataset_ref<'a>(handle: *const GemDataset) -> Result<&'a Dataset, GemStatus> {
    if handle.is_null() {
        set_error("dataset handle is null");
        return Err(GemStatus::NullArgument);
    }
    Ok(&(*(handle as *const DatasetInner)).0)
}

unsafe fn model_ref<'a>(handle: *const GemModel) -> Result<&'a ModelInner, GemStatus> {
    if handle.is_null() {
        set_error("model handle is null");
        return Err(GemStatus::NullArgument);
    }
    Ok(&*(handle as *const ModelInner))
}

/// Load a dataset from CSV. `responses` selects the response columns by
/// prefix, `first:last` header range or comma list; `id_column` may be null.
///
/// # Safety
/// `path` and `responses` must be valid NUL-terminated strings; `id_column`
/// may be null; `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gem_dataset_load_csv(
    path: *const c_char,
    responses: *const c_char,
    id_column: *const c_char,
    out: *mut *mut GemDataset,
) -> GemStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return GemStatus::NullArgument;
    }
    let path = match utf8(path, "path") {
        Ok(s) => s,
        Err(code) => return code,
    };
    let responses = match utf8(responses, "responses") {
        Ok(s) => s,
        Err(code) => return code,
    };
    let id = if id_column.is_null() {
        None
    } else {
        match utf8(id_column, "id_column") {
            Ok(s) => Some(s.to_string()),
            Err(code) => return code,
        }
    };
    let schema = Schema {
        responses: ResponseSelector::parse(responses),
        id_column: id,
        forced_kinds: Default::default(),
        response_block: None,
    };
    match load_dataset(Path::new(path), &schema) {
        Ok(dataset) => {
            *out = Box::into_raw(Box::new(DatasetInner(dataset))) as *mut GemDataset;
            GemStatus::Ok
        }
        Err(err) => status_from(&err),
    }
}

/// # Safety
/// `handle` must come from [`gem_dataset_load_csv`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gem_dataset_free(handle: *mut GemDataset) {
    if !handle.is_null() {
        drop(Box::from_raw(handle as *mut DatasetInner));
    }
}

/// Sample and response counts of a dataset.
///
/// # Safety
/// `handle` must be a live dataset handle; `n_samples` and `n_responses`
/// must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn gem_dataset_dims(
    handle: *const GemDataset,
    n_samples: *mut usize,
    n_responses: *mut usize,
) -> GemStatus {
    let dataset = match dataset_ref(handle) {
        Ok(d) => d,
        Err(code) => return code,
    };
    if !n_samples.is_null() {
        *n_samples = dataset.n_samples();
    }
    if !n_responses.is_null() {
        *n_responses = dataset.n_responses();
    }
    GemStatus::Ok
}

/// Fit a model formula (e.g. `"y ~ disease + age"`) to a dataset. The model
/// handle keeps its own copy of the dataset.
///
/// # Safety
/// `dataset` must be a live dataset handle, `formula` a valid string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gem_fit(
    dataset: *const GemDataset,
    formula: *const c_char,
    out: *mut *mut GemModel,
) -> GemStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return GemStatus::NullArgument;
    }
    let dataset = match dataset_ref(dataset) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let formula = match utf8(formula, "formula") {
        Ok(s) => s,
        Err(code) => return code,
    };
    let spec = match parse_formula(formula) {
        Ok(s) => s,
        Err(err) => return status_from(&err),
    };
    match fit_gem_dataset(&spec, dataset) {
        Ok(fit) => {
            let inner = ModelInner {
                dataset: dataset.clone(),
                fit,
            };
            *out = Box::into_raw(Box::new(inner)) as *mut GemModel;
            GemStatus::Ok
        }
        Err(err) => status_from(&err),
    }
}

/// # Safety
/// `handle` must come from [`gem_fit`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gem_model_free(handle: *mut GemModel) {
    if !handle.is_null() {
        drop(Box::from_raw(handle as *mut ModelInner));
    }
}

/// Number of model terms (intercept excluded).
///
/// # Safety
/// `handle` must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn gem_model_term_count(handle: *const GemModel) -> usize {
    match model_ref(handle) {
        Ok(model) => model.fit.effects.len(),
        Err(_) => 0,
    }
}

/// Name of term `index` (e.g. `"f1"` or `"f1:f2"`). Free with
/// [`gem_string_free`].
///
/// # Safety
/// `handle` must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn gem_model_term_name(
    handle: *const GemModel,
    index: usize,
) -> *mut c_char {
    let model = match model_ref(handle) {
        Ok(m) => m,
        Err(_) => return std::ptr::null_mut(),
    };
    match model.fit.effects.get(index) {
        Some((term, _)) => CString::new(term.to_string())
            .map(CString::into_raw)
            .unwrap_or(std::ptr::null_mut()),
        None => {
            set_error(&format!("term index {index} out of range"));
            std::ptr::null_mut()
        }
    }
}

unsafe fn term_of(
    model: &ModelInner,
    term: *const c_char,
) -> Result<&gem_core::design::Term, GemStatus> {
    let name = utf8(term, "term")?;
    match model.fit.spec.term(name) {
        Ok(t) => Ok(t),
        Err(err) => Err(status_from(&err)),
    }
}

/// Copy the ER matrix of a term into `buffer` (row-major, n_samples x
/// n_responses). `buffer_len` is the buffer capacity in doubles.
///
/// # Safety
/// `handle` must be a live model handle, `term` a valid string and `buffer`
/// writable for `buffer_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gem_model_er_matrix(
    handle: *const GemModel,
    term: *const c_char,
    buffer: *mut f64,
    buffer_len: usize,
) -> GemStatus {
    let model = match model_ref(handle) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let term = match term_of(model, term) {
        Ok(t) => t.clone(),
        Err(code) => return code,
    };
    let er = match model.fit.er_matrix(&term) {
        Ok(er) => er,
        Err(err) => return status_from(&err),
    };
    let needed = er.nrows() * er.ncols();
    if buffer.is_null() {
        set_error("buffer is null");
        return GemStatus::NullArgument;
    }
    if buffer_len < needed {
        set_error(&format!("buffer holds {buffer_len} doubles, need {needed}"));
        return GemStatus::BufferTooSmall;
    }
    let slice = std::slice::from_raw_parts_mut(buffer, needed);
    for (i, row) in er.rows().into_iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            slice[i * er.ncols() + j] = v;
        }
    }
    GemStatus::Ok
}

/// Persist the fitted decomposition as JSON (coefficients and metadata;
/// pass nonzero `embed_matrices` to include effect/residual/ER matrices).
///
/// # Safety
/// `handle` must be a live model handle and `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn gem_model_save_json(
    handle: *const GemModel,
    path: *const c_char,
    embed_matrices: i32,
) -> GemStatus {
    let model = match model_ref(handle) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let path = match utf8(path, "path") {
        Ok(s) => s,
        Err(code) => return code,
    };
    let doc = GemFitDocument::from_fit(&model.fit, &model.dataset, embed_matrices != 0);
    match doc.save(Path::new(path)) {
        Ok(()) => GemStatus::Ok,
        Err(err) => status_from(&err),
    }
}

/// PCA of a term's ER matrix: writes up to `ncomp` explained-variance
/// fractions into `explvar`.
///
/// # Safety
/// `handle` must be a live model handle, `term` a valid string and
/// `explvar` writable for `ncomp` doubles.
#[no_mangle]
pub unsafe extern "C" fn gem_model_er_pca_explvar(
    handle: *const GemModel,
    term: *const c_char,
    ncomp: usize,
    explvar: *mut f64,
) -> GemStatus {
    let model = match model_ref(handle) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let term = match term_of(model, term) {
        Ok(t) => t.clone(),
        Err(code) => return code,
    };
    if explvar.is_null() {
        set_error("explvar buffer is null");
        return GemStatus::NullArgument;
    }
    let er = match model.fit.er_matrix(&term) {
        Ok(er) => er,
        Err(err) => return status_from(&err),
    };
    match fit_pca(&er, ncomp, false) {
        Ok(pca) => {
            let out = std::slice::from_raw_parts_mut(explvar, ncomp);
            for (slot, &v) in out.iter_mut().zip(pca.explvar_x.iter()) {
                *slot = v;
            }
            GemStatus::Ok
        }
        Err(err) => status_from(&err),
    }
}

/// Leave-one-out PLS-DA (or PLS regression) of a main-effect term against
/// its own variable: writes per-component cross-validated error
/// (misclassification fraction or RMSE) into `errors` and the 1-SE
/// component choice into `selected`.
///
/// # Safety
/// `handle` must be a live model handle, `term` a valid string, `errors`
/// writable for `ncomp` doubles and `selected` writable or null.
#[no_mangle]
pub unsafe extern "C" fn gem_model_er_pls_cv(
    handle: *const GemModel,
    term: *const c_char,
    ncomp: usize,
    errors: *mut f64,
    selected: *mut usize,
) -> GemStatus {
    let model = match model_ref(handle) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let term = match term_of(model, term) {
        Ok(t) => t.clone(),
        Err(code) => return code,
    };
    if errors.is_null() {
        set_error("errors buffer is null");
        return GemStatus::NullArgument;
    }
    let variable = match target_variable(&model.dataset, &term) {
        Ok(v) => v,
        Err(err) => return status_from(&err),
    };
    let coding = match encode_target(variable) {
        Ok(c) => c,
        Err(err) => return status_from(&err),
    };
    let er = match model.fit.er_matrix(&term) {
        Ok(er) => er,
        Err(err) => return status_from(&err),
    };
    match cross_validate(&er, &coding, ncomp, CvScheme::Loo) {
        Ok(cv) => {
            let out = std::slice::from_raw_parts_mut(errors, ncomp);
            out.copy_from_slice(&cv.error);
            if !selected.is_null() {
                *selected = cv.ncomp_selected;
            }
            GemStatus::Ok
        }
        Err(err) => status_from(&err),
    }
}

/// Leave-one-out elastic net of a main-effect term against its own
/// variable (binomial for a two-level factor, gaussian for a covariate).
/// Writes the 1-SE lambda and the size of its nonzero set.
///
/// # Safety
/// `handle` must be a live model handle, `term` a valid string; the out
/// pointers must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn gem_model_er_enet_cv(
    handle: *const GemModel,
    term: *const c_char,
    alpha: f64,
    nlambda: usize,
    lambda_opt: *mut f64,
    nonzero_count: *mut usize,
) -> GemStatus {
    let model = match model_ref(handle) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let term = match term_of(model, term) {
        Ok(t) => t.clone(),
        Err(code) => return code,
    };
    let variable = match target_variable(&model.dataset, &term) {
        Ok(v) => v,
        Err(err) => return status_from(&err),
    };
    let coding = match encode_target(variable) {
        Ok(c) => c,
        Err(err) => return status_from(&err),
    };
    let (family, y): (Family, Vec<f64>) = match coding.kind {
        TargetKind::TwoClass => (
            Family::Binomial,
            coding.class_idx.iter().map(|&c| c as f64).collect(),
        ),
        TargetKind::Continuous => (Family::Gaussian, coding.dummy.column(0).to_vec()),
        TargetKind::MultiClass => {
            set_error("elastic net supports two-class or continuous targets");
            return GemStatus::Argument;
        }
    };
    let er = match model.fit.er_matrix(&term) {
        Ok(er) => er,
        Err(err) => return status_from(&err),
    };
    match cv_enet(&er, &y, alpha, family, nlambda, CvScheme::Loo) {
        Ok(path) => {
            let opt = path.lambda_opt.unwrap_or(f64::NAN);
            if !lambda_opt.is_null() {
                *lambda_opt = opt;
            }
            if !nonzero_count.is_null() {
                *nonzero_count = path.nonzero_set(opt).map(|v| v.len()).unwrap_or(0);
            }
            GemStatus::Ok
        }
        Err(err) => status_from(&err),
    }
}

/// Generate a synthetic dataset from a JSON spec string and write it (plus
/// a `.truth.json` sidecar) to `out_csv`.
///
/// # Safety
/// `spec_json` and `out_csv` must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn gem_simulate_to_csv(
    spec_json: *const c_char,
    out_csv: *const c_char,
) -> GemStatus {
    let spec_text = match utf8(spec_json, "spec_json") {
        Ok(s) => s,
        Err(code) => return code,
    };
    let out_path = match utf8(out_csv, "out_csv") {
        Ok(s) => s,
        Err(code) => return code,
    };
    let spec: gem_core::oracle::SynthSpec = match serde_json_parse(spec_text) {
        Ok(s) => s,
        Err(message) => {
            set_error(&message);
            return GemStatus::Argument;
        }
    };
    let synth = match gem_core::oracle::plant_effects(&spec) {
        Ok(s) => s,
        Err(err) => return status_from(&err),
    };
    let out = Path::new(out_path);
    if let Err(err) = gem_core::dataset::save_dataset(&synth.dataset, out) {
        return status_from(&err);
    }
    let truth = out.with_extension("truth.json");
    match serde_json_write(&truth, &synth.truth) {
        Ok(()) => GemStatus::Ok,
        Err(message) => {
            set_error(&message);
            GemStatus::Io
        }
    }
}

fn serde_json_parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, String> {
    serde_json::from_str(text).map_err(|e| format!("bad spec: {e}"))
}

fn serde_json_write<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    std::fs::write(path, text).map_err(|e| e.to_string())
}
