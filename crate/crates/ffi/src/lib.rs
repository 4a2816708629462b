//! C ABI for the behavior classifier.
//!
//! Models and stream states live behind opaque handles created and released
//! by this library. Every fallible call returns a [`DbcStatus`]; outputs are
//! written through caller-provided pointers. The generated header lives at
//! `include/dbc.h`.

use std::ffi::CStr;
use std::ptr;

use libc::c_char;

use dbc_core::featurizer;
use dbc_core::model::{load_model, save_model, ModelParams, Variant};
use dbc_core::stream::{op_count_report, stream_init, stream_push, StreamState};
use dbc_core::{Dims, Error, Segment};

/// Result codes for every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DbcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// The file could not be read.
    IoError = 2,
    /// The bytes are not a valid model (magic, version, truncation,
    /// or non-finite values).
    FormatError = 3,
    /// An argument value is outside its valid range.
    InvalidArgument = 4,
    /// An input length does not match the model dimensions.
    DimensionMismatch = 5,
    /// A provided buffer is too small.
    BufferTooSmall = 6,
}

/// Opaque handle to a loaded model.
pub struct DbcModel {
    params: ModelParams<f32>,
}

/// Opaque handle to a per-sample inference stream.
pub struct DbcStream {
    params: ModelParams<f32>,
    state: StreamState<f32>,
}

/// Model dimensions and variant, filled by `dbc_model_info`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DbcModelInfo {
    pub n: u32,
    pub k1: u32,
    pub k2: u32,
    pub f: u32,
    pub l: u32,
    pub c: u32,
    /// 0 = nonlinear, 1 = linear, 2 = six-feature.
    pub variant: u8,
}

/// Per-inference operation counts, filled by `dbc_op_counts`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DbcOpCounts {
    pub parameters: u64,
    pub adds: u64,
    pub abs_evals: u64,
    pub mults: u64,
    pub tanh_evals: u64,
    pub relu_ops: u64,
    pub argmax_ops: u64,
}

fn status_of(err: &Error) -> DbcStatus {
    match err {
        Error::Io(_) => DbcStatus::IoError,
        Error::Format(_) | Error::Corruption(_) | Error::Parse(_) => DbcStatus::FormatError,
        Error::Dimension(_) | Error::Shape(_) => DbcStatus::DimensionMismatch,
        _ => DbcStatus::InvalidArgument,
    }
}

/// Human-readable name for a status code. The returned pointer is static.
#[no_mangle]
pub extern "C" fn dbc_status_name(status: DbcStatus) -> *const c_char {
    let name: &'static [u8] = match status {
        DbcStatus::Ok => b"ok\0",
        DbcStatus::NullPointer => b"null pointer\0",
        DbcStatus::IoError => b"io error\0",
        DbcStatus::FormatError => b"format error\0",
        DbcStatus::InvalidArgument => b"invalid argument\0",
        DbcStatus::DimensionMismatch => b"dimension mismatch\0",
        DbcStatus::BufferTooSmall => b"buffer too small\0",
    };
    name.as_ptr().cast()
}

/// Deserialize a model from its binary format.
///
/// On success writes a handle to `out`; release it with `dbc_model_free`.
///
/// # Safety
/// `bytes` must point to `len` readable bytes and `out` must be a valid
/// pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn dbc_model_from_bytes(
    bytes: *const u8,
    len: usize,
    out: *mut *mut DbcModel,
) -> DbcStatus {
    if bytes.is_null() || out.is_null() {
        return DbcStatus::NullPointer;
    }
    let slice = std::slice::from_raw_parts(bytes, len);
    match load_model::<f32>(slice) {
        Ok(params) => {
            *out = Box::into_raw(Box::new(DbcModel { params }));
            DbcStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Load a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn dbc_model_load(
    path: *const c_char,
    out: *mut *mut DbcModel,
) -> DbcStatus {
    if path.is_null() || out.is_null() {
        return DbcStatus::NullPointer;
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(s) => s,
        Err(_) => return DbcStatus::InvalidArgument,
    };
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(_) => return DbcStatus::IoError,
    };
    dbc_model_from_bytes(bytes.as_ptr(), bytes.len(), out)
}

/// Release a model handle. Null is a no-op.
///
/// # Safety
/// `model` must have come from `dbc_model_load`/`dbc_model_from_bytes` and
/// must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dbc_model_free(model: *mut DbcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Fill `out` with the model's dimensions and variant.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dbc_model_info(
    model: *const DbcModel,
    out: *mut DbcModelInfo,
) -> DbcStatus {
    if model.is_null() || out.is_null() {
        return DbcStatus::NullPointer;
    }
    let dims = (*model).params.dims;
    *out = DbcModelInfo {
        n: dims.n as u32,
        k1: dims.k1 as u32,
        k2: dims.k2 as u32,
        f: dims.f as u32,
        l: dims.l as u32,
        c: dims.c as u32,
        variant: match (*model).params.variant() {
            Variant::Nonlinear => 0,
            Variant::Linear => 1,
            Variant::SixFeature => 2,
        },
    };
    DbcStatus::Ok
}

/// Size in bytes of the model's serialized form, for sizing the buffer
/// passed to `dbc_model_save`.
///
/// # Safety
/// `model` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn dbc_model_serialized_len(model: *const DbcModel) -> usize {
    if model.is_null() {
        return 0;
    }
    (*model).params.serialized_len()
}

/// Serialize the model into `buf` and write the byte count to `written`.
///
/// # Safety
/// `buf` must hold at least `buf_len` writable bytes; `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn dbc_model_save(
    model: *const DbcModel,
    buf: *mut u8,
    buf_len: usize,
    written: *mut usize,
) -> DbcStatus {
    if model.is_null() || buf.is_null() {
        return DbcStatus::NullPointer;
    }
    let bytes = match save_model(&(*model).params) {
        Ok(b) => b,
        Err(e) => return status_of(&e),
    };
    if bytes.len() > buf_len {
        return DbcStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
    if !written.is_null() {
        *written = bytes.len();
    }
    DbcStatus::Ok
}

/// Classify one whole segment given as three per-axis arrays of raw counts.
///
/// `len` must equal the model's segment length `N`. The predicted class
/// index is written to `class_out`; when `features_out` is non-null it
/// receives the `F` feature values.
///
/// # Safety
/// `x`, `y`, `z` must each point to `len` readable values; `class_out` must
/// be valid; `features_out` must be null or point to at least `F` floats.
#[no_mangle]
pub unsafe extern "C" fn dbc_infer(
    model: *const DbcModel,
    x: *const i16,
    y: *const i16,
    z: *const i16,
    len: usize,
    class_out: *mut u32,
    features_out: *mut f32,
) -> DbcStatus {
    if model.is_null() || x.is_null() || y.is_null() || z.is_null() || class_out.is_null() {
        return DbcStatus::NullPointer;
    }
    let params = &(*model).params;
    if len != params.dims.n {
        return DbcStatus::DimensionMismatch;
    }
    let segment = Segment {
        readings: [
            std::slice::from_raw_parts(x, len).to_vec(),
            std::slice::from_raw_parts(y, len).to_vec(),
            std::slice::from_raw_parts(z, len).to_vec(),
        ],
        label: 0,
        animal_id: String::new(),
        dataset_id: String::new(),
    };
    match featurizer::features(&segment, params) {
        Ok((features, cache)) => {
            *class_out = featurizer::argmax(&cache.logits) as u32;
            if !features_out.is_null() {
                ptr::copy_nonoverlapping(
                    features.0.as_ptr(),
                    features_out,
                    features.len(),
                );
            }
            DbcStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Create a streaming inference handle bound to a copy of the model.
///
/// # Safety
/// `model` must be a valid handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn dbc_stream_new(
    model: *const DbcModel,
    out: *mut *mut DbcStream,
) -> DbcStatus {
    if model.is_null() || out.is_null() {
        return DbcStatus::NullPointer;
    }
    let params = (*model).params.clone();
    let state = stream_init(&params);
    *out = Box::into_raw(Box::new(DbcStream { params, state }));
    DbcStatus::Ok
}

/// Push one triaxial sample.
///
/// Writes 1 to `emitted` and fills `class_out` (and `features_out`, if
/// non-null, with `F` floats) when this push completes a segment; writes 0
/// otherwise. The stream resets itself after each emission.
///
/// # Safety
/// `stream` and `emitted` must be valid; `class_out` must be valid when
/// `emitted` can fire; `features_out` must be null or hold `F` floats.
#[no_mangle]
pub unsafe extern "C" fn dbc_stream_push(
    stream: *mut DbcStream,
    ax: i16,
    ay: i16,
    az: i16,
    emitted: *mut i32,
    class_out: *mut u32,
    features_out: *mut f32,
) -> DbcStatus {
    if stream.is_null() || emitted.is_null() {
        return DbcStatus::NullPointer;
    }
    let s = &mut *stream;
    match stream_push(&mut s.state, [ax, ay, az], &s.params) {
        Some((class, features)) => {
            if class_out.is_null() {
                return DbcStatus::NullPointer;
            }
            *emitted = 1;
            *class_out = class as u32;
            if !features_out.is_null() {
                ptr::copy_nonoverlapping(
                    features.0.as_ptr(),
                    features_out,
                    features.len(),
                );
            }
            DbcStatus::Ok
        }
        None => {
            *emitted = 0;
            DbcStatus::Ok
        }
    }
}

/// Drop any partial segment and return the stream to its initial state.
///
/// # Safety
/// `stream` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn dbc_stream_reset(stream: *mut DbcStream) {
    if !stream.is_null() {
        (*stream).state.reset();
    }
}

/// Release a stream handle. Null is a no-op.
///
/// # Safety
/// `stream` must have come from `dbc_stream_new` and must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn dbc_stream_free(stream: *mut DbcStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Stored-parameter and per-inference operation counts for a configuration
/// of the full (nonlinear) pipeline.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dbc_op_counts(
    n: u32,
    k1: u32,
    k2: u32,
    f: u32,
    l: u32,
    c: u32,
    out: *mut DbcOpCounts,
) -> DbcStatus {
    if out.is_null() {
        return DbcStatus::NullPointer;
    }
    let dims = match Dims::new(
        n as usize,
        k1 as usize,
        k2 as usize,
        f as usize,
        l as usize,
        c as usize,
    ) {
        Ok(d) => d,
        Err(_) => return DbcStatus::InvalidArgument,
    };
    match op_count_report(dims) {
        Ok(report) => {
            let total = report.ops.total();
            *out = DbcOpCounts {
                parameters: report.params.total as u64,
                adds: total.adds,
                abs_evals: total.abs_evals,
                mults: total.mults,
                tanh_evals: total.tanh_evals,
                relu_ops: total.relu_ops,
                argmax_ops: total.argmax_ops,
            };
            DbcStatus::Ok
        }
        Err(_) => DbcStatus::InvalidArgument,
    }
}
