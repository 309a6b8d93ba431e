//! C ABI over saved kgcred models.
//!
//! Handles are opaque pointers created by `*_load` and released with the
//! matching `*_free`. Every fallible call returns a [`KgStatus`]; on failure
//! the message is available from [`kg_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use kgcred::catalog::FrameMode;
use kgcred::corpus::Fact;
use kgcred::eval::TrainedModel;
use kgcred::pipeline::DataBundle;
use kgcred::relevance::{FrameFilter, SentenceCount};
use kgcred::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    /// Malformed, corrupt or inconsistent input.
    Data = 4,
    Dimension = 5,
    /// The fact's document has no relevant sentence.
    NoProvenance = 6,
    /// The operation does not apply to this model kind.
    Unsupported = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgModelKind {
    Mlp = 0,
    LrCount = 1,
    LrBinary = 2,
    LrSum = 3,
    LrAvg = 4,
    LrTfidf = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KgModelInfo {
    pub kind: u32,
    /// Zero for LR models.
    pub embedding_dim: usize,
    pub num_flags: usize,
    pub num_classes: usize,
    /// Hidden layers; zero for LR models.
    pub depth: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KgVerdict {
    pub credible: bool,
    pub cred_score: f64,
    /// Suggested relation index, or -1.
    pub repair: i64,
    pub unrepairable: bool,
}

/// A loaded model.
pub struct KgModel {
    inner: TrainedModel,
}

/// A loaded data directory with C copies of its relation names.
pub struct KgCorpus {
    bundle: DataBundle,
    names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> KgStatus {
    match err {
        Error::Io { .. } => KgStatus::Io,
        Error::Dimension(_) => KgStatus::Dimension,
        _ => KgStatus::Data,
    }
}

fn fail(err: Error) -> KgStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn guard(f: impl FnOnce() -> KgStatus) -> KgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            KgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, KgStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(KgStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        KgStatus::InvalidUtf8
    })
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($p:expr, $what:expr) => {
        if $p.is_null() {
            set_error(concat!($what, " is null"));
            return KgStatus::NullArgument;
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads an MLP or LR model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn kg_model_load(path: *const c_char, out: *mut *mut KgModel) -> KgStatus {
    guard(|| {
        non_null!(out, "out");
        *out = ptr::null_mut();
        let path = try_status!(str_arg(path, "path"));
        match TrainedModel::load(Path::new(path), None) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(KgModel { inner }));
                KgStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`kg_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kg_model_free(model: *mut KgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kg_model_info(model: *const KgModel, out: *mut KgModelInfo) -> KgStatus {
    guard(|| {
        non_null!(model, "model");
        non_null!(out, "out");
        let m = &(*model).inner;
        let kind = match m.kind() {
            kgcred::eval::ModelKind::Mlp => KgModelKind::Mlp,
            kgcred::eval::ModelKind::Lr(k) => match k {
                kgcred::baselines::FeatureKind::Count => KgModelKind::LrCount,
                kgcred::baselines::FeatureKind::Binary => KgModelKind::LrBinary,
                kgcred::baselines::FeatureKind::Sum => KgModelKind::LrSum,
                kgcred::baselines::FeatureKind::Avg => KgModelKind::LrAvg,
                kgcred::baselines::FeatureKind::Tfidf => KgModelKind::LrTfidf,
            },
        };
        *out = match m {
            TrainedModel::Mlp(mlp) => KgModelInfo {
                kind: kind as u32,
                embedding_dim: mlp.dims.embedding_dim,
                num_flags: mlp.dims.num_flags,
                num_classes: mlp.dims.num_classes,
                depth: mlp.depth(),
            },
            TrainedModel::Lr { .. } => KgModelInfo {
                kind: kind as u32,
                num_classes: m.num_classes(),
                ..Default::default()
            },
        };
        KgStatus::Ok
    })
}

/// Runs an MLP on a raw feature vector of `embedding_dim + num_flags`
/// values. Writes the credibility probability and `num_classes` repair
/// probabilities.
///
/// # Safety
/// `x` must point to `x_len` doubles, `repair_out` to `repair_len` writable
/// doubles, and `cred_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_model_forward(
    model: *const KgModel,
    x: *const f64,
    x_len: usize,
    cred_out: *mut f64,
    repair_out: *mut f64,
    repair_len: usize,
) -> KgStatus {
    guard(|| {
        non_null!(model, "model");
        non_null!(x, "x");
        non_null!(cred_out, "cred_out");
        non_null!(repair_out, "repair_out");
        let TrainedModel::Mlp(mlp) = &(*model).inner else {
            set_error("raw forward passes need an MLP model");
            return KgStatus::Unsupported;
        };
        if repair_len != mlp.num_classes() {
            set_error(format!(
                "repair buffer holds {repair_len}, model has {} classes",
                mlp.num_classes()
            ));
            return KgStatus::Dimension;
        }
        let input = std::slice::from_raw_parts(x, x_len);
        match mlp.infer(input) {
            Ok((cred, repair)) => {
                *cred_out = cred;
                std::slice::from_raw_parts_mut(repair_out, repair_len).copy_from_slice(&repair);
                KgStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Loads a data directory (catalog, documents, embeddings, aliases, ...).
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kg_corpus_load(dir: *const c_char, out: *mut *mut KgCorpus) -> KgStatus {
    guard(|| {
        non_null!(out, "out");
        *out = ptr::null_mut();
        let dir = try_status!(str_arg(dir, "dir"));
        match DataBundle::load(dir) {
            Ok(bundle) => {
                let names = bundle
                    .catalog
                    .names()
                    .into_iter()
                    .map(|n| CString::new(n).unwrap_or_default())
                    .collect();
                *out = Box::into_raw(Box::new(KgCorpus { bundle, names }));
                KgStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a corpus. Null is ignored.
///
/// # Safety
/// `corpus` must come from [`kg_corpus_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kg_corpus_free(corpus: *mut KgCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Number of catalog classes, including the reserved cannot-repair class.
///
/// # Safety
/// `corpus` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn kg_corpus_num_classes(corpus: *const KgCorpus) -> usize {
    if corpus.is_null() {
        return 0;
    }
    let names = &(*corpus).names;
    names.len()
}

/// Name of class `index`, owned by the corpus; null when out of range.
///
/// # Safety
/// `corpus` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn kg_corpus_relation_name(corpus: *const KgCorpus, index: usize) -> *const c_char {
    if corpus.is_null() {
        return ptr::null();
    }
    let names = &(*corpus).names;
    names.get(index).map_or(ptr::null(), |s| s.as_ptr())
}

/// Judges one fact from all relevant sentences of its document (expert
/// frame mapping).
///
/// # Safety
/// String arguments must be NUL-terminated, handles live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kg_predict(
    model: *const KgModel,
    corpus: *const KgCorpus,
    subject: *const c_char,
    relation: *const c_char,
    object: *const c_char,
    doc_id: *const c_char,
    out: *mut KgVerdict,
) -> KgStatus {
    guard(|| {
        non_null!(model, "model");
        non_null!(corpus, "corpus");
        non_null!(out, "out");
        let fact = Fact::new(
            try_status!(str_arg(subject, "subject")),
            try_status!(str_arg(relation, "relation")),
            try_status!(str_arg(object, "object")),
            try_status!(str_arg(doc_id, "doc_id")),
        );
        let model = &(*model).inner;
        let bundle = &(*corpus).bundle;
        if model.num_classes() != bundle.catalog.len() {
            set_error(format!(
                "model has {} repair classes, catalog has {}",
                model.num_classes(),
                bundle.catalog.len()
            ));
            return KgStatus::Dimension;
        }
        if let Err(e) = fact.validate(&bundle.catalog) {
            return fail(e);
        }
        let doc = match bundle.documents.require(&fact.doc_id) {
            Ok(d) => d,
            Err(e) => return fail(e),
        };
        let ctx = bundle.relevance(&bundle.catalog, FrameMode::Expert);
        let sentences = ctx.select_sentences(doc, &fact, SentenceCount::All, 0, FrameFilter::AllRelevant);
        if sentences.is_empty() {
            set_error("no relevant sentence in the fact's document");
            return KgStatus::NoProvenance;
        }
        match model.verdict(&sentences, &bundle.embeddings, bundle.catalog.cannot_repair_index()) {
            Ok(v) => {
                *out = KgVerdict {
                    credible: v.credible,
                    cred_score: v.cred_score,
                    repair: v.repair.map_or(-1, |c| c as i64),
                    unrepairable: v.unrepairable,
                };
                KgStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
