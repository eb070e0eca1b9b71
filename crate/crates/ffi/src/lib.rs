//! C ABI over `g2t-core`.
//!
//! Every fallible function returns a [`G2tStatus`]; on failure the message is
//! available from [`g2t_last_error`] on the same thread. Objects are opaque
//! handles released with their `_free` function. Strings returned through
//! out-parameters are owned by the caller and released with
//! [`g2t_string_free`].
//!
//! Graphs cross the boundary in the flat marker format, e.g.
//! `|S Alan Bean |P occupation |O Test pilot`. Multiple references for one
//! example are separated by newlines.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use g2t_core::data::parse_flat_format;
use g2t_core::graph::Example;
use g2t_core::linearize::{linearize, LinearizedInput};
use g2t_core::metrics::{corpus_bleu, corpus_ter};
use g2t_core::model::checkpoint::load_checkpoint;
use g2t_core::model::{BeamConfig, Parameters};
use g2t_core::train::generate;
use g2t_core::vocab::{Vocabulary, DEFAULT_MAX_SOURCE_LENGTH, DEFAULT_MAX_TARGET_LENGTH};
use g2t_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum G2tStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DataError = 4,
    RuntimeError = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> G2tStatus {
    match e {
        Error::Config(_) => G2tStatus::InvalidArgument,
        Error::Shape(_) | Error::OutOfRange { .. } | Error::NonFinite { .. } | Error::Diverged { .. } => {
            G2tStatus::RuntimeError
        }
        _ => G2tStatus::DataError,
    }
}

struct Failure(G2tStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> G2tStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            G2tStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            G2tStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(G2tStatus::NullArgument, format!("`{what}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(G2tStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn texts<'a>(p: *const *const c_char, n: usize, what: &str) -> Result<Vec<&'a str>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(Failure(G2tStatus::NullArgument, format!("`{what}` is null")));
    }
    (0..n).map(|i| text(*p.add(i), what)).collect()
}

fn out_check<T>(out: *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(G2tStatus::NullArgument, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior NUL").into_raw()
}

fn split_refs(s: &str) -> Vec<String> {
    s.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn g2t_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn g2t_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn g2t_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// A linearized graph: tokens with their role and tree-level indices.
pub struct G2tLinearized {
    input: LinearizedInput,
    tokens: Vec<CString>,
}

#[no_mangle]
pub unsafe extern "C" fn g2t_linearize(graph: *const c_char, max_level: usize, out: *mut *mut G2tLinearized) -> G2tStatus {
    guard(|| {
        out_check(out)?;
        let g = parse_flat_format(text(graph, "graph")?)?;
        let input = linearize(&g, max_level)?;
        let tokens = input
            .tokens
            .iter()
            .map(|t| CString::new(t.text.clone()).expect("tokens hold no NUL"))
            .collect();
        *out = Box::into_raw(Box::new(G2tLinearized { input, tokens }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn g2t_linearized_len(h: *const G2tLinearized) -> usize {
    h.as_ref().map_or(0, |h| h.tokens.len())
}

/// Token text at `i`, or null when out of range. Owned by the handle.
#[no_mangle]
pub unsafe extern "C" fn g2t_linearized_token(h: *const G2tLinearized, i: usize) -> *const c_char {
    h.as_ref()
        .and_then(|h| h.tokens.get(i))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Role code (0 subject, 1 predicate, 2 object) at `i`, or -1.
#[no_mangle]
pub unsafe extern "C" fn g2t_linearized_role(h: *const G2tLinearized, i: usize) -> i32 {
    h.as_ref()
        .and_then(|h| h.input.tokens.get(i))
        .map_or(-1, |t| t.role.code() as i32)
}

/// Tree level at `i`, or -1.
#[no_mangle]
pub unsafe extern "C" fn g2t_linearized_level(h: *const G2tLinearized, i: usize) -> i32 {
    h.as_ref()
        .and_then(|h| h.input.tokens.get(i))
        .map_or(-1, |t| t.level as i32)
}

/// Space-joined sequence; release with `g2t_string_free`.
#[no_mangle]
pub unsafe extern "C" fn g2t_linearized_text(h: *const G2tLinearized) -> *mut c_char {
    match h.as_ref() {
        Some(h) => to_c(g2t_core::linearize::serialize_linearized(&h.input)),
        None => ptr::null_mut(),
    }
}

#[no_mangle]
pub unsafe extern "C" fn g2t_linearized_free(h: *mut G2tLinearized) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Corpus BLEU in percent. `references[i]` holds the newline-separated
/// references of example `i`.
#[no_mangle]
pub unsafe extern "C" fn g2t_corpus_bleu(
    predictions: *const *const c_char,
    references: *const *const c_char,
    n: usize,
    out: *mut f64,
) -> G2tStatus {
    guard(|| {
        out_check(out)?;
        let preds = texts(predictions, n, "predictions")?;
        let refs: Vec<Vec<String>> = texts(references, n, "references")?.into_iter().map(split_refs).collect();
        *out = corpus_bleu(&preds, &refs)?;
        Ok(())
    })
}

/// Corpus TER: total edits over total reference length.
#[no_mangle]
pub unsafe extern "C" fn g2t_corpus_ter(
    predictions: *const *const c_char,
    references: *const *const c_char,
    n: usize,
    out: *mut f64,
) -> G2tStatus {
    guard(|| {
        out_check(out)?;
        let preds = texts(predictions, n, "predictions")?;
        let refs: Vec<Vec<String>> = texts(references, n, "references")?.into_iter().map(split_refs).collect();
        *out = corpus_ter(&preds, &refs)?.0;
        Ok(())
    })
}

/// A trained model with its vocabulary.
pub struct G2tModel {
    params: Parameters<f32>,
    vocab: Vocabulary,
}

#[no_mangle]
pub unsafe extern "C" fn g2t_model_load(path: *const c_char, out: *mut *mut G2tModel) -> G2tStatus {
    guard(|| {
        out_check(out)?;
        let path = Path::new(text(path, "path")?);
        let ck = load_checkpoint(path)?;
        let vocab = ck
            .vocab
            .ok_or_else(|| Failure(G2tStatus::DataError, format!("{}: no vocabulary stored", path.display())))?;
        *out = Box::into_raw(Box::new(G2tModel {
            params: ck.params,
            vocab,
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn g2t_model_vocab_size(model: *const G2tModel) -> usize {
    model.as_ref().map_or(0, |m| m.vocab.len())
}

/// Beam-decodes one graph; the text is written to `*out`.
#[no_mangle]
pub unsafe extern "C" fn g2t_model_generate(
    model: *const G2tModel,
    graph: *const c_char,
    beam_size: usize,
    out: *mut *mut c_char,
) -> G2tStatus {
    guard(|| {
        out_check(out)?;
        let m = model
            .as_ref()
            .ok_or_else(|| Failure(G2tStatus::NullArgument, "`model` is null".into()))?;
        let g = parse_flat_format(text(graph, "graph")?)?;
        let beam = BeamConfig {
            beam_size,
            max_len: DEFAULT_MAX_TARGET_LENGTH,
            length_penalty: 1.0,
        };
        let ex = Example::new("ffi", g, Vec::new());
        let mut preds = generate(&m.params, &m.vocab, &[ex], &beam, DEFAULT_MAX_SOURCE_LENGTH)?;
        *out = to_c(preds.pop().unwrap_or_default());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn g2t_model_free(model: *mut G2tModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
