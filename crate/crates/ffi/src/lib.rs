//! C interface to trained bsg models.
//!
//! Every function returns a [`BsgStatus`]; on failure the message is kept
//! per thread and read with [`bsg_last_error`]. Models are opaque
//! [`BsgModel`] handles from [`bsg_model_load`], released with
//! [`bsg_model_free`]. Vector outputs go to caller buffers whose length in
//! elements is passed alongside.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use bsg::cli::{infer, nearest, ModelBundle, NearestMeasure};
use bsg::eval::WordModel;
use bsg::gauss::{cosine, kl_divergence};
use bsg::{Error, ErrorKind, Gaussian};

/// Outcome of a call. Nonzero codes match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsgStatus {
    Ok = 0,
    /// Bad argument: null pointer, short buffer, invalid option.
    Usage = 1,
    /// Bad input: unreadable file, unknown word, unsupported model.
    Data = 2,
    Numerical = 3,
    /// A Rust panic was caught at the boundary.
    Internal = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsgMeasure {
    CosineMean = 0,
    NegKl = 1,
}

/// A loaded model.
pub struct BsgModel {
    bundle: ModelBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn usage(msg: &str) -> BsgStatus {
    set_error(format!("usage: {msg}"));
    BsgStatus::Usage
}

fn status_of(e: &Error) -> BsgStatus {
    match e.kind() {
        ErrorKind::Usage => BsgStatus::Usage,
        ErrorKind::Data => BsgStatus::Data,
        ErrorKind::Numerical => BsgStatus::Numerical,
    }
}

/// Run `f`, recording any error or panic.
fn guard<F: FnOnce() -> Result<(), BsgStatus>>(f: F) -> BsgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BsgStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal: panic".into());
            BsgStatus::Internal
        }
    }
}

fn fail(e: Error) -> BsgStatus {
    let s = status_of(&e);
    set_error(format!("{}: {e}", e.kind().label()));
    s
}

unsafe fn model<'a>(m: *const BsgModel) -> Result<&'a BsgModel, BsgStatus> {
    m.as_ref().ok_or_else(|| usage("null model"))
}

unsafe fn string<'a>(s: *const c_char, what: &str) -> Result<&'a str, BsgStatus> {
    if s.is_null() {
        return Err(usage(&format!("null {what}")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| usage(&format!("{what} is not UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, BsgStatus> {
    p.as_mut().ok_or_else(|| usage(&format!("null {what}")))
}

unsafe fn buffer<'a>(
    p: *mut f64,
    len: usize,
    need: usize,
    what: &str,
) -> Result<&'a mut [f64], BsgStatus> {
    if p.is_null() {
        return Err(usage(&format!("null {what}")));
    }
    if len < need {
        return Err(usage(&format!("{what} holds {len} values, {need} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn write_gaussian(
    g: &Gaussian,
    mean: *mut f64,
    var: *mut f64,
    len: usize,
) -> Result<(), BsgStatus> {
    let d = g.dim();
    buffer(mean, len, d, "mean buffer")?.copy_from_slice(g.mean());
    let v = buffer(var, len, d, "variance buffer")?;
    for (i, x) in v.iter_mut().enumerate() {
        *x = g.var_at(i);
    }
    Ok(())
}

fn word_id(m: &BsgModel, id: usize) -> Result<usize, BsgStatus> {
    if id >= m.bundle.vocab_size() {
        return Err(fail(Error::InvalidWordId {
            id,
            size: m.bundle.vocab_size(),
        }));
    }
    Ok(id)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn bsg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Load a text or binary model file into `*out_model`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_model` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bsg_model_load(
    path: *const c_char,
    out_model: *mut *mut BsgModel,
) -> BsgStatus {
    guard(|| {
        let path = string(path, "path")?;
        let slot = out(out_model, "output handle")?;
        *slot = std::ptr::null_mut();
        let bundle = ModelBundle::load(Path::new(path)).map_err(fail)?;
        *slot = Box::into_raw(Box::new(BsgModel { bundle }));
        Ok(())
    })
}

/// Release a handle; null is ignored.
///
/// # Safety
/// `m` must come from [`bsg_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bsg_model_free(m: *mut BsgModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bsg_model_dim(m: *const BsgModel, dim: *mut usize) -> BsgStatus {
    guard(|| {
        *out(dim, "dim")? = model(m)?.bundle.dim();
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bsg_model_vocab_size(m: *const BsgModel, size: *mut usize) -> BsgStatus {
    guard(|| {
        *out(size, "size")? = model(m)?.bundle.vocab_size();
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid and `word` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bsg_word_id(
    m: *const BsgModel,
    word: *const c_char,
    id: *mut usize,
) -> BsgStatus {
    guard(|| {
        let m = model(m)?;
        let w = string(word, "word")?;
        *out(id, "id")? = m.bundle.require_id(w).map_err(fail)?;
        Ok(())
    })
}

/// Prior mean and per-dimension variance of word `id`; both buffers hold
/// at least `len` ≥ dim values.
///
/// # Safety
/// Pointers must be valid for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn bsg_prior(
    m: *const BsgModel,
    id: usize,
    mean: *mut f64,
    var: *mut f64,
    len: usize,
) -> BsgStatus {
    guard(|| {
        let m = model(m)?;
        let g = m.bundle.prior(word_id(m, id)?).map_err(fail)?;
        write_gaussian(&g, mean, var, len)
    })
}

/// KL[prior_a ‖ prior_b].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bsg_kl_words(
    m: *const BsgModel,
    a: usize,
    b: usize,
    kl: *mut f64,
) -> BsgStatus {
    guard(|| {
        let m = model(m)?;
        let (a, b) = (word_id(m, a)?, word_id(m, b)?);
        let pa = m.bundle.prior(a).map_err(fail)?;
        let pb = m.bundle.prior(b).map_err(fail)?;
        *out(kl, "kl")? = kl_divergence(&pa, &pb).map_err(fail)?;
        Ok(())
    })
}

/// Cosine of the two words' mean vectors.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bsg_cosine_words(
    m: *const BsgModel,
    a: usize,
    b: usize,
    cos: *mut f64,
) -> BsgStatus {
    guard(|| {
        let m = model(m)?;
        let (a, b) = (word_id(m, a)?, word_id(m, b)?);
        *out(cos, "cosine")? = cosine(&m.bundle.mean(a), &m.bundle.mean(b)).map_err(fail)?;
        Ok(())
    })
}

/// Posterior of `tokens[target]` given the in-vocabulary tokens within
/// `window` positions of it.
///
/// # Safety
/// `tokens` must point to `n_tokens` NUL-terminated strings; output
/// buffers must be valid for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn bsg_infer_posterior(
    m: *const BsgModel,
    tokens: *const *const c_char,
    n_tokens: usize,
    target: usize,
    window: usize,
    mean: *mut f64,
    var: *mut f64,
    len: usize,
) -> BsgStatus {
    guard(|| {
        let m = model(m)?;
        if tokens.is_null() {
            return Err(usage("null tokens"));
        }
        let toks = std::slice::from_raw_parts(tokens, n_tokens)
            .iter()
            .map(|&t| string(t, "token").map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        let q = infer(&m.bundle, &toks, target, window).map_err(fail)?;
        write_gaussian(&q, mean, var, len)
    })
}

/// Up to `k` nearest words to `word`, best first. Word ids go to `ids`,
/// scores to `scores`, and the number written to `*n_out`.
///
/// # Safety
/// `ids` and `scores` must be valid for `k` elements.
#[no_mangle]
pub unsafe extern "C" fn bsg_nearest(
    m: *const BsgModel,
    word: *const c_char,
    k: usize,
    measure: BsgMeasure,
    ids: *mut usize,
    scores: *mut f64,
    n_out: *mut usize,
) -> BsgStatus {
    guard(|| {
        let m = model(m)?;
        let w = string(word, "word")?;
        let n = out(n_out, "count")?;
        *n = 0;
        if ids.is_null() {
            return Err(usage("null ids"));
        }
        let s = buffer(scores, k, k, "scores")?;
        let measure = match measure {
            BsgMeasure::CosineMean => NearestMeasure::CosineMean,
            BsgMeasure::NegKl => NearestMeasure::NegKl,
        };
        let hits = nearest(&m.bundle, w, k, measure).map_err(fail)?;
        let id_out = std::slice::from_raw_parts_mut(ids, k);
        for (i, (word, score)) in hits.iter().enumerate() {
            id_out[i] = m.bundle.require_id(word).map_err(fail)?;
            s[i] = *score;
        }
        *n = hits.len();
        Ok(())
    })
}
