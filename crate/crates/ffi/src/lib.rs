//! C ABI over `egnn-core`.
//!
//! Objects are opaque handles created by `*_new` and released by `*_free`.
//! Every fallible call returns an [`EgnnStatus`]; the message of the last
//! failure on the calling thread is available from [`egnn_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use egnn_core::features::Normalizer;
use egnn_core::metrics::interpretability;
use egnn_core::network::UpdateRule;
use egnn_core::{Error, HyperParams, Model};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EgnnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidHyperParams = 2,
    OutOfRange = 3,
    NonFinite = 4,
    DimensionMismatch = 5,
    EmptyModel = 6,
    InvalidJson = 7,
    BufferTooSmall = 8,
    InvalidArgument = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EgnnUpdateRule {
    ClassAware = 0,
    Listing = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgnnHyperParams {
    pub rho0: f64,
    pub hr: u64,
    pub eta: f64,
    pub update_rule: EgnnUpdateRule,
}

impl From<EgnnHyperParams> for HyperParams {
    fn from(p: EgnnHyperParams) -> Self {
        HyperParams {
            rho0: p.rho0,
            hr: p.hr,
            eta: p.eta,
            update_rule: match p.update_rule {
                EgnnUpdateRule::ClassAware => UpdateRule::ClassAware,
                EgnnUpdateRule::Listing => UpdateRule::Listing,
            },
            ..HyperParams::default()
        }
    }
}

/// Classifier plus the random source used for its first estimate.
pub struct EgnnModel {
    model: Model,
    rng: ChaCha8Rng,
}

pub struct EgnnNormalizer {
    inner: Normalizer,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> EgnnStatus {
    match e {
        Error::OutOfUnitRange { .. } => EgnnStatus::OutOfRange,
        Error::NonFinite { .. } => EgnnStatus::NonFinite,
        Error::DimensionMismatch { .. } => EgnnStatus::DimensionMismatch,
        Error::EmptyModel => EgnnStatus::EmptyModel,
        Error::InvalidHyperParams(_) => EgnnStatus::InvalidHyperParams,
        Error::Json(_) => EgnnStatus::InvalidJson,
        _ => EgnnStatus::InvalidArgument,
    }
}

fn fail(status: EgnnStatus, msg: impl Into<String>) -> EgnnStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), EgnnStatus>) -> EgnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EgnnStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(EgnnStatus::Panic, "internal panic"),
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], EgnnStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(EgnnStatus::NullPointer, "null array"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *mut T) -> Result<&'a mut T, EgnnStatus> {
    p.as_mut().ok_or_else(|| fail(EgnnStatus::NullPointer, "null handle"))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, EgnnStatus> {
    p.as_mut().ok_or_else(|| fail(EgnnStatus::NullPointer, "null output pointer"))
}

/// Message of the last failure on this thread. Valid until the next call
/// into the library from the same thread.
#[no_mangle]
pub extern "C" fn egnn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn egnn_default_hyper_params() -> EgnnHyperParams {
    let d = HyperParams::default();
    EgnnHyperParams {
        rho0: d.rho0,
        hr: d.hr,
        eta: d.eta,
        update_rule: EgnnUpdateRule::ClassAware,
    }
}

/// # Safety
/// `params` may be null (defaults). `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn egnn_model_new(params: *const EgnnHyperParams, seed: u64, out_model: *mut *mut EgnnModel) -> EgnnStatus {
    guard(|| {
        let slot = out(out_model)?;
        *slot = ptr::null_mut();
        let hp = params.as_ref().copied().unwrap_or_else(|| egnn_default_hyper_params());
        let model = Model::new(hp.into()).map_err(|e| fail(status_of(&e), e.to_string()))?;
        *slot = Box::into_raw(Box::new(EgnnModel {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn egnn_model_free(model: *mut EgnnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Restricts the first random estimate to the given classes.
///
/// # Safety
/// `classes` must point at `len` values.
#[no_mangle]
pub unsafe extern "C" fn egnn_model_set_classes(model: *mut EgnnModel, classes: *const u32, len: usize) -> EgnnStatus {
    guard(|| {
        let m = handle(model)?;
        let classes = slice(classes, len)?;
        if classes.is_empty() {
            return Err(fail(EgnnStatus::InvalidArgument, "empty class list"));
        }
        m.model.class_universe = Some(classes.to_vec());
        Ok(())
    })
}

/// One prequential step. Writes the class predicted before learning.
///
/// # Safety
/// `x` must point at `n` values; `out_predicted` may be null.
#[no_mangle]
pub unsafe extern "C" fn egnn_model_learn(model: *mut EgnnModel, x: *const f64, n: usize, label: u32, out_predicted: *mut u32) -> EgnnStatus {
    guard(|| {
        let m = handle(model)?;
        let x = slice(x, n)?;
        let outcome = m
            .model
            .learn(x, label, &mut m.rng)
            .map_err(|e| fail(status_of(&e), e.to_string()))?;
        if let Some(p) = out_predicted.as_mut() {
            *p = outcome.predicted_class;
        }
        Ok(())
    })
}

/// Predicts without learning. When `probabilities` is non-null it receives
/// one softmax value per granule; `capacity` must be at least the granule
/// count, which is written to `out_granules` once prediction succeeds.
///
/// # Safety
/// `x` must point at `n` values, `probabilities` at `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn egnn_model_predict(
    model: *const EgnnModel,
    x: *const f64,
    n: usize,
    out_class: *mut u32,
    probabilities: *mut f64,
    capacity: usize,
    out_granules: *mut usize,
) -> EgnnStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(EgnnStatus::NullPointer, "null handle"))?;
        let x = slice(x, n)?;
        let p = m.model.predict(x).map_err(|e| fail(status_of(&e), e.to_string()))?;
        if let Some(c) = out_granules.as_mut() {
            *c = p.probabilities.len();
        }
        if !probabilities.is_null() {
            if capacity < p.probabilities.len() {
                return Err(fail(
                    EgnnStatus::BufferTooSmall,
                    format!("need {} probabilities, buffer holds {capacity}", p.probabilities.len()),
                ));
            }
            std::slice::from_raw_parts_mut(probabilities, p.probabilities.len()).copy_from_slice(&p.probabilities);
        }
        *out(out_class)? = p.predicted_class;
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn egnn_model_granule_count(model: *const EgnnModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.granule_count())
}

/// Current maximum granule width; NaN for a null handle.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn egnn_model_rho(model: *const EgnnModel) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.model.rho)
}

/// # Safety
/// `model` must be a live handle; `out_ii` must be writable.
#[no_mangle]
pub unsafe extern "C" fn egnn_model_interpretability(model: *const EgnnModel, out_ii: *mut f64) -> EgnnStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(EgnnStatus::NullPointer, "null handle"))?;
        let report = interpretability(&m.model).ok_or_else(|| fail(EgnnStatus::EmptyModel, "model has no granules"))?;
        *out(out_ii)? = report.ii;
        Ok(())
    })
}

/// Serializes the model. Free the string with [`egnn_string_free`].
///
/// # Safety
/// `model` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn egnn_model_to_json(model: *const EgnnModel, out_json: *mut *mut c_char) -> EgnnStatus {
    guard(|| {
        let slot = out(out_json)?;
        *slot = ptr::null_mut();
        let m = model.as_ref().ok_or_else(|| fail(EgnnStatus::NullPointer, "null handle"))?;
        let json = m.model.to_json().map_err(|e| fail(status_of(&e), e.to_string()))?;
        *slot = CString::new(json).map_err(|e| fail(EgnnStatus::InvalidArgument, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Restores a model. The random source is reseeded from `seed`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn egnn_model_from_json(json: *const c_char, seed: u64, out_model: *mut *mut EgnnModel) -> EgnnStatus {
    guard(|| {
        let slot = out(out_model)?;
        *slot = ptr::null_mut();
        if json.is_null() {
            return Err(fail(EgnnStatus::NullPointer, "null string"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| fail(EgnnStatus::InvalidJson, e.to_string()))?;
        let model = Model::from_json(text).map_err(|e| fail(status_of(&e), e.to_string()))?;
        *slot = Box::into_raw(Box::new(EgnnModel {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }));
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn egnn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Online min-max normalizer.
#[no_mangle]
pub extern "C" fn egnn_normalizer_new() -> *mut EgnnNormalizer {
    Box::into_raw(Box::new(EgnnNormalizer {
        inner: Normalizer::new(),
    }))
}

/// # Safety
/// `normalizer` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn egnn_normalizer_free(normalizer: *mut EgnnNormalizer) {
    if !normalizer.is_null() {
        drop(Box::from_raw(normalizer));
    }
}

/// Updates the running ranges with `x` and writes the scaled vector.
///
/// # Safety
/// `x` and `out_x` must each point at `n` values.
#[no_mangle]
pub unsafe extern "C" fn egnn_normalizer_normalize(normalizer: *mut EgnnNormalizer, x: *const f64, n: usize, out_x: *mut f64) -> EgnnStatus {
    guard(|| {
        let norm = handle(normalizer)?;
        let x = slice(x, n)?;
        if out_x.is_null() && n > 0 {
            return Err(fail(EgnnStatus::NullPointer, "null output array"));
        }
        let y = norm.inner.normalize(x).map_err(|e| fail(status_of(&e), e.to_string()))?;
        if n > 0 {
            std::slice::from_raw_parts_mut(out_x, n).copy_from_slice(&y);
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::EmptyModel), EgnnStatus::EmptyModel);
        assert_eq!(
            status_of(&Error::DimensionMismatch { expected: 2, actual: 3 }),
            EgnnStatus::DimensionMismatch
        );
        assert_eq!(status_of(&Error::InvalidHyperParams("x".into())), EgnnStatus::InvalidHyperParams);
    }

    #[test]
    fn panics_become_status() {
        assert_eq!(guard(|| panic!("boom")), EgnnStatus::Panic);
        let msg = unsafe { CStr::from_ptr(egnn_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }

    #[test]
    fn error_messages_without_nul() {
        set_error("a\0b".into());
        let msg = unsafe { CStr::from_ptr(egnn_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "a b");
    }
}
