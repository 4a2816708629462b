//! Exercises the C ABI the way a foreign caller would: through raw
//! pointers and status codes.

use std::ffi::CString;

use dbc_core::model::{init_model, save_model, Dims, Variant};
use dbc_core::{featurizer, Segment};
use dbc_ffi::*;

fn test_model_bytes() -> Vec<u8> {
    let dims = Dims::new(32, 4, 4, 9, 3, 4).unwrap();
    let mut params = init_model::<f32>(dims, 42, Variant::Nonlinear).unwrap();
    params.norm.mean = [10.0, -5.0, 3.0];
    params.norm.inv_std = [0.01, 0.02, 0.015];
    save_model(&params).unwrap()
}

fn load(bytes: &[u8]) -> *mut DbcModel {
    let mut handle: *mut DbcModel = std::ptr::null_mut();
    let status = unsafe { dbc_model_from_bytes(bytes.as_ptr(), bytes.len(), &mut handle) };
    assert_eq!(status, DbcStatus::Ok);
    assert!(!handle.is_null());
    handle
}

#[test]
fn load_info_free() {
    let bytes = test_model_bytes();
    let model = load(&bytes);
    let mut info = DbcModelInfo::default();
    let status = unsafe { dbc_model_info(model, &mut info) };
    assert_eq!(status, DbcStatus::Ok);
    assert_eq!(
        (info.n, info.k1, info.k2, info.f, info.l, info.c, info.variant),
        (32, 4, 4, 9, 3, 4, 0)
    );
    unsafe { dbc_model_free(model) };
}

#[test]
fn load_from_file_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.dbc");
    std::fs::write(&path, test_model_bytes()).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle: *mut DbcModel = std::ptr::null_mut();
    let status = unsafe { dbc_model_load(cpath.as_ptr(), &mut handle) };
    assert_eq!(status, DbcStatus::Ok);
    unsafe { dbc_model_free(handle) };

    let missing = CString::new(dir.path().join("nope.dbc").to_str().unwrap()).unwrap();
    let status = unsafe { dbc_model_load(missing.as_ptr(), &mut handle) };
    assert_eq!(status, DbcStatus::IoError);
}

#[test]
fn garbage_bytes_are_format_error() {
    let mut handle: *mut DbcModel = std::ptr::null_mut();
    let garbage = [0u8; 16];
    let status = unsafe { dbc_model_from_bytes(garbage.as_ptr(), garbage.len(), &mut handle) };
    assert_eq!(status, DbcStatus::FormatError);
    assert!(handle.is_null());
}

#[test]
fn null_arguments_are_rejected() {
    let bytes = test_model_bytes();
    let mut handle: *mut DbcModel = std::ptr::null_mut();
    let status = unsafe { dbc_model_from_bytes(std::ptr::null(), 0, &mut handle) };
    assert_eq!(status, DbcStatus::NullPointer);
    let status = unsafe { dbc_model_from_bytes(bytes.as_ptr(), bytes.len(), std::ptr::null_mut()) };
    assert_eq!(status, DbcStatus::NullPointer);
    unsafe { dbc_model_free(std::ptr::null_mut()) }; // no-op
    unsafe { dbc_stream_free(std::ptr::null_mut()) };
}

#[test]
fn save_roundtrip_through_ffi() {
    let bytes = test_model_bytes();
    let model = load(&bytes);
    let len = unsafe { dbc_model_serialized_len(model) };
    assert_eq!(len, bytes.len());

    let mut small = vec![0u8; len - 1];
    let status =
        unsafe { dbc_model_save(model, small.as_mut_ptr(), small.len(), std::ptr::null_mut()) };
    assert_eq!(status, DbcStatus::BufferTooSmall);

    let mut buf = vec![0u8; len];
    let mut written = 0usize;
    let status = unsafe { dbc_model_save(model, buf.as_mut_ptr(), buf.len(), &mut written) };
    assert_eq!(status, DbcStatus::Ok);
    assert_eq!(written, len);
    assert_eq!(buf, bytes);
    unsafe { dbc_model_free(model) };
}

#[test]
fn infer_matches_core_pipeline() {
    let bytes = test_model_bytes();
    let model = load(&bytes);
    let params = dbc_core::model::load_model::<f32>(&bytes).unwrap();

    let n = 32usize;
    let make_axis = |offset: i16| -> Vec<i16> {
        (0..n).map(|i| ((i as i16) * 7 % 100) - 50 + offset).collect()
    };
    let (x, y, z) = (make_axis(0), make_axis(25), make_axis(-60));

    let mut class = 0u32;
    let mut features = [0f32; 9];
    let status = unsafe {
        dbc_infer(
            model,
            x.as_ptr(),
            y.as_ptr(),
            z.as_ptr(),
            n,
            &mut class,
            features.as_mut_ptr(),
        )
    };
    assert_eq!(status, DbcStatus::Ok);

    let segment = Segment {
        readings: [x.clone(), y.clone(), z.clone()],
        label: 0,
        animal_id: String::new(),
        dataset_id: String::new(),
    };
    let expected_class = featurizer::infer(&segment, &params).unwrap();
    let (expected_features, _) = featurizer::features(&segment, &params).unwrap();
    assert_eq!(class as usize, expected_class);
    assert_eq!(features.to_vec(), expected_features.0);

    // Wrong length.
    let status = unsafe {
        dbc_infer(
            model,
            x.as_ptr(),
            y.as_ptr(),
            z.as_ptr(),
            n - 1,
            &mut class,
            std::ptr::null_mut(),
        )
    };
    assert_eq!(status, DbcStatus::DimensionMismatch);
    unsafe { dbc_model_free(model) };
}

#[test]
fn stream_emits_once_per_segment_and_matches_infer() {
    let bytes = test_model_bytes();
    let model = load(&bytes);
    let mut stream: *mut DbcStream = std::ptr::null_mut();
    assert_eq!(unsafe { dbc_stream_new(model, &mut stream) }, DbcStatus::Ok);

    let n = 32usize;
    let samples: Vec<[i16; 3]> = (0..2 * n)
        .map(|i| {
            [
                ((i * 13) % 200) as i16 - 100,
                ((i * 29) % 180) as i16 - 90,
                ((i * 7) % 160) as i16 - 80,
            ]
        })
        .collect();

    let mut emissions = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let mut emitted = 0i32;
        let mut class = 0u32;
        let mut features = [0f32; 9];
        let status = unsafe {
            dbc_stream_push(
                stream,
                s[0],
                s[1],
                s[2],
                &mut emitted,
                &mut class,
                features.as_mut_ptr(),
            )
        };
        assert_eq!(status, DbcStatus::Ok);
        if emitted == 1 {
            emissions.push((i, class, features));
        }
    }
    assert_eq!(emissions.len(), 2);
    assert_eq!(emissions[0].0, n - 1);
    assert_eq!(emissions[1].0, 2 * n - 1);

    // Each emission equals whole-segment inference over the same window.
    let params = dbc_core::model::load_model::<f32>(&bytes).unwrap();
    for (seg_idx, emission) in emissions.iter().enumerate() {
        let window = &samples[seg_idx * n..(seg_idx + 1) * n];
        let segment = Segment {
            readings: [
                window.iter().map(|s| s[0]).collect(),
                window.iter().map(|s| s[1]).collect(),
                window.iter().map(|s| s[2]).collect(),
            ],
            label: 0,
            animal_id: String::new(),
            dataset_id: String::new(),
        };
        let expected = featurizer::infer(&segment, &params).unwrap();
        assert_eq!(emission.1 as usize, expected);
    }

    unsafe { dbc_stream_free(stream) };
    unsafe { dbc_model_free(model) };
}

#[test]
fn stream_reset_discards_partial_segment() {
    let bytes = test_model_bytes();
    let model = load(&bytes);
    let mut stream: *mut DbcStream = std::ptr::null_mut();
    assert_eq!(unsafe { dbc_stream_new(model, &mut stream) }, DbcStatus::Ok);

    let mut emitted = 0i32;
    let mut class = 0u32;
    for _ in 0..10 {
        unsafe {
            dbc_stream_push(stream, 5, 5, 5, &mut emitted, &mut class, std::ptr::null_mut())
        };
        assert_eq!(emitted, 0);
    }
    unsafe { dbc_stream_reset(stream) };
    // A full segment after reset emits exactly on sample N.
    for i in 0..32 {
        unsafe {
            dbc_stream_push(stream, 1, 2, 3, &mut emitted, &mut class, std::ptr::null_mut())
        };
        assert_eq!(emitted, i32::from(i == 31), "push {i}");
    }
    unsafe { dbc_stream_free(stream) };
    unsafe { dbc_model_free(model) };
}

#[test]
fn op_counts_reference_totals() {
    let mut counts = DbcOpCounts::default();
    let status = unsafe { dbc_op_counts(256, 8, 8, 9, 7, 6, &mut counts) };
    assert_eq!(status, DbcStatus::Ok);
    assert_eq!(counts.parameters, 175);
    assert_eq!(counts.adds, 14_967);
    assert_eq!(counts.abs_evals, 1_494);
    assert_eq!(counts.mults, 13_431);
    assert_eq!(counts.tanh_evals, 747);
    assert_eq!(counts.relu_ops, 7);
    assert_eq!(counts.argmax_ops, 1);

    let status = unsafe { dbc_op_counts(2, 8, 8, 9, 7, 6, &mut counts) };
    assert_eq!(status, DbcStatus::InvalidArgument);
}

#[test]
fn status_names_are_readable() {
    for status in [
        DbcStatus::Ok,
        DbcStatus::NullPointer,
        DbcStatus::IoError,
        DbcStatus::FormatError,
        DbcStatus::InvalidArgument,
        DbcStatus::DimensionMismatch,
        DbcStatus::BufferTooSmall,
    ] {
        let name = unsafe { std::ffi::CStr::from_ptr(dbc_status_name(status)) };
        assert!(!name.to_str().unwrap().is_empty());
    }
}
