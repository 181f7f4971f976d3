//! Exercises the C ABI surface through the exported symbols.

use std::ptr;

use otoc_sim_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let len = unsafe { otoc_last_error(buf.as_mut_ptr() as *mut _, buf.len()) };
    buf.truncate(len.min(buf.len() - 1));
    String::from_utf8_lossy(&buf).into_owned()
}

#[test]
fn system_lifecycle_and_qubit_count() {
    let mut sys: *mut OtocSystem = ptr::null_mut();
    let status = unsafe { otoc_system_new(2, 2, 3, 8.7, 0.2, 0, &mut sys) };
    assert_eq!(status, OtocStatus::Ok);
    assert!(!sys.is_null());

    let mut qubits = 0usize;
    assert_eq!(unsafe { otoc_system_qubits(sys, &mut qubits) }, OtocStatus::Ok);
    assert_eq!(qubits, 11);

    let mut q = 0i64;
    assert_eq!(unsafe { otoc_coherence_order(sys, 0, &mut q) }, OtocStatus::Ok);
    assert_eq!(q, 5);
    assert_eq!(unsafe { otoc_coherence_order(sys, 3, &mut q) }, OtocStatus::Ok);
    assert_eq!(q, -1);

    unsafe { otoc_system_free(sys) };
}

#[test]
fn oversized_register_reports_ceiling_status() {
    let mut sys: *mut OtocSystem = ptr::null_mut();
    let status = unsafe { otoc_system_new(3, 2, 3, 8.7, 0.0, 0, &mut sys) };
    assert_eq!(status, OtocStatus::RegisterCeiling);
    assert!(sys.is_null());
    assert!(last_error().contains("ceiling"));
}

#[test]
fn null_pointer_is_rejected() {
    let status = unsafe { otoc_system_new(1, 2, 3, 8.7, 0.0, 0, ptr::null_mut()) };
    assert_eq!(status, OtocStatus::NullPointer);
}

#[test]
fn mqc_series_fills_caller_buffers() {
    let mut sys: *mut OtocSystem = ptr::null_mut();
    assert_eq!(unsafe { otoc_system_new(1, 2, 3, 8.7, 0.3, 0, &mut sys) }, OtocStatus::Ok);

    let n_points = 16;
    let mut jt = vec![0.0f64; n_points];
    let mut values = vec![0.0f64; n_points];
    let status = unsafe {
        otoc_mqc_series(
            sys,
            1,
            OtocMode::UnitaryOnly,
            0.0,
            0.0,
            0.0,
            2.0,
            n_points,
            jt.as_mut_ptr(),
            values.as_mut_ptr(),
        )
    };
    assert_eq!(status, OtocStatus::Ok);
    assert_eq!(jt[0], 0.0);
    assert_eq!(*jt.last().unwrap(), 2.0);
    assert!((values[0] - 1.0).abs() < 1e-10);
    assert!(values.iter().any(|v| *v < 0.999), "series should evolve at g > 0");

    // invalid coherence selector
    let status = unsafe {
        otoc_mqc_series(
            sys,
            7,
            OtocMode::UnitaryOnly,
            0.0,
            0.0,
            0.0,
            2.0,
            n_points,
            jt.as_mut_ptr(),
            values.as_mut_ptr(),
        )
    };
    assert_eq!(status, OtocStatus::InvalidArgument);

    unsafe { otoc_system_free(sys) };
}

#[test]
fn dephasing_mode_requires_t2() {
    let mut sys: *mut OtocSystem = ptr::null_mut();
    assert_eq!(unsafe { otoc_system_new(1, 2, 3, 8.7, 0.0, 0, &mut sys) }, OtocStatus::Ok);
    let mut jt = vec![0.0f64; 16];
    let mut values = vec![0.0f64; 16];
    let status = unsafe {
        otoc_mqc_series(
            sys,
            1,
            OtocMode::UnitaryPlusDecoherence,
            0.0, // missing T2*
            0.0,
            0.0,
            1.0,
            16,
            jt.as_mut_ptr(),
            values.as_mut_ptr(),
        )
    };
    assert_eq!(status, OtocStatus::InvalidArgument);
    assert!(last_error().contains("t2_star_jt"));
    unsafe { otoc_system_free(sys) };
}

#[test]
fn layer_series_is_unity_at_zero_field() {
    let mut sys: *mut OtocSystem = ptr::null_mut();
    assert_eq!(unsafe { otoc_system_new(1, 2, 3, 8.7, 0.0, 0, &mut sys) }, OtocStatus::Ok);
    let n_points = 24;
    let mut jt = vec![0.0f64; n_points];
    let mut values = vec![0.0f64; n_points];
    let status = unsafe {
        otoc_layer_scrambling_series(sys, 5.0, n_points, jt.as_mut_ptr(), values.as_mut_ptr())
    };
    assert_eq!(status, OtocStatus::Ok);
    for v in &values {
        assert!((v - 1.0).abs() < 1e-10);
    }
    unsafe { otoc_system_free(sys) };
}

#[test]
fn gradient_ratio_through_the_abi() {
    let mut out = 0.0f64;
    assert_eq!(unsafe { otoc_gradient_ratio(1, 1.0, 2.4681, &mut out) }, OtocStatus::Ok);
    assert_eq!(out, -1.0);
    assert_eq!(unsafe { otoc_gradient_ratio(-1, 1.0, 2.4681, &mut out) }, OtocStatus::Ok);
    assert!((out - 3.9362).abs() < 1e-12);
    assert_eq!(
        unsafe { otoc_gradient_ratio(1, 0.0, 2.4681, &mut out) },
        OtocStatus::InvalidArgument
    );
}
