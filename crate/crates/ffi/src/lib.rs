//! C ABI for the otoc-sim library.
//!
//! Handles are opaque pointers created by `otoc_system_new` and released by
//! `otoc_system_free`. Every function returns an [`OtocStatus`] code; on
//! failure a thread-local message is retrievable with `otoc_last_error`.
//! The matching header lives at `include/otoc_sim.h`.

use std::cell::RefCell;
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};

use otoc_sim::analysis::gradient_ratio;
use otoc_sim::evolution::{DecoherenceParams, EvolutionMode};
use otoc_sim::mqc::coherence_order;
use otoc_sim::otoc::{layer_scrambling_otoc, otoc_mqc};
use otoc_sim::topology::{HamiltonianParams, TopologySpec};
use otoc_sim::util::linspace;

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OtocStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    RegisterCeiling = 3,
    Numerics = 4,
    Panic = 5,
}

/// Evolution mode selector mirrored in the header.
#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OtocMode {
    UnitaryOnly = 0,
    DecoherenceOnly = 1,
    UnitaryPlusDecoherence = 2,
    Ctp = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string());
}

fn status_of(err: &otoc_sim::Error) -> OtocStatus {
    match err {
        otoc_sim::Error::RegisterCeiling { .. } => OtocStatus::RegisterCeiling,
        otoc_sim::Error::NotHermitian { .. } | otoc_sim::Error::NotUnitary { .. } => {
            OtocStatus::Numerics
        }
        _ => OtocStatus::InvalidArgument,
    }
}

/// Opaque simulation handle: a topology plus Hamiltonian parameters.
pub struct OtocSystem {
    topology: TopologySpec,
    params: HamiltonianParams,
}

fn guarded<F: FnOnce() -> OtocStatus>(f: F) -> OtocStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            OtocStatus::Panic
        }
    }
}

/// Create a simulation handle. `central_field_once` is 0 or 1.
///
/// # Safety
/// `out` must be a valid pointer to an `*mut OtocSystem` slot.
#[no_mangle]
pub unsafe extern "C" fn otoc_system_new(
    branches: usize,
    h_per_branch: usize,
    f_per_h: usize,
    j_hz: f64,
    g: f64,
    central_field_once: c_int,
    out: *mut *mut OtocSystem,
) -> OtocStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return OtocStatus::NullPointer;
        }
        let topology = match TopologySpec::new(branches, h_per_branch, f_per_h) {
            Ok(t) => t,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        let mut params = match HamiltonianParams::new(j_hz, g) {
            Ok(p) => p,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        params.central_field_once = central_field_once != 0;
        unsafe { *out = Box::into_raw(Box::new(OtocSystem { topology, params })) };
        OtocStatus::Ok
    })
}

/// Release a handle created by `otoc_system_new`. Null is a no-op.
///
/// # Safety
/// `sys` must be null or a pointer from `otoc_system_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn otoc_system_free(sys: *mut OtocSystem) {
    if !sys.is_null() {
        drop(unsafe { Box::from_raw(sys) });
    }
}

/// Total number of qubits in the register.
///
/// # Safety
/// `sys` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn otoc_system_qubits(
    sys: *const OtocSystem,
    out: *mut usize,
) -> OtocStatus {
    guarded(|| {
        if sys.is_null() || out.is_null() {
            set_error("null pointer");
            return OtocStatus::NullPointer;
        }
        unsafe { *out = (*sys).topology.n_qubits() };
        OtocStatus::Ok
    })
}

/// Coherence order q = N1 - 2n + 1 for this system's first layer.
///
/// # Safety
/// `sys` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn otoc_coherence_order(
    sys: *const OtocSystem,
    n: usize,
    out: *mut i64,
) -> OtocStatus {
    guarded(|| {
        if sys.is_null() || out.is_null() {
            set_error("null pointer");
            return OtocStatus::NullPointer;
        }
        let n1 = unsafe { (*sys).topology.n1() };
        if n > n1 {
            set_error("n exceeds the first-layer size");
            return OtocStatus::InvalidArgument;
        }
        unsafe { *out = coherence_order(n1, n) };
        OtocStatus::Ok
    })
}

fn build_mode(
    mode: OtocMode,
    t2_star_jt: f64,
    dt_jt: f64,
    ctp_total_jt: f64,
) -> Result<EvolutionMode, String> {
    let dec = || -> Result<DecoherenceParams, String> {
        if t2_star_jt <= 0.0 {
            return Err("dephasing modes need t2_star_jt > 0".into());
        }
        let dt = if dt_jt > 0.0 { dt_jt } else { otoc_sim::evolution::DEFAULT_DT_JT };
        Ok(DecoherenceParams { t2_star_jt, dt_jt: dt })
    };
    match mode {
        OtocMode::UnitaryOnly => Ok(EvolutionMode::UnitaryOnly),
        OtocMode::DecoherenceOnly => Ok(EvolutionMode::DecoherenceOnly(dec()?)),
        OtocMode::UnitaryPlusDecoherence => Ok(EvolutionMode::UnitaryPlusDecoherence(dec()?)),
        OtocMode::Ctp => {
            if ctp_total_jt <= 0.0 {
                return Err("ctp mode needs ctp_total_jt > 0".into());
            }
            Ok(EvolutionMode::Ctp { total_jt: ctp_total_jt })
        }
    }
}

/// MQC OTOC series for coherence selector `n` on `n_points` times spanning
/// [0, max_jt]. `out_jt` and `out_values` must hold `n_points` doubles.
/// Unused mode parameters may be passed as 0.
///
/// # Safety
/// `sys` must be a live handle; `out_jt` and `out_values` must point to
/// writable arrays of length `n_points`.
#[no_mangle]
pub unsafe extern "C" fn otoc_mqc_series(
    sys: *const OtocSystem,
    n: usize,
    mode: OtocMode,
    t2_star_jt: f64,
    dt_jt: f64,
    ctp_total_jt: f64,
    max_jt: f64,
    n_points: usize,
    out_jt: *mut f64,
    out_values: *mut f64,
) -> OtocStatus {
    guarded(|| {
        if sys.is_null() || out_jt.is_null() || out_values.is_null() {
            set_error("null pointer");
            return OtocStatus::NullPointer;
        }
        if n_points < 2 || !(max_jt > 0.0) {
            set_error("need n_points >= 2 and max_jt > 0");
            return OtocStatus::InvalidArgument;
        }
        let mode = match build_mode(mode, t2_star_jt, dt_jt, ctp_total_jt) {
            Ok(m) => m,
            Err(msg) => {
                set_error(&msg);
                return OtocStatus::InvalidArgument;
            }
        };
        let system = unsafe { &*sys };
        let grid = linspace(max_jt, n_points);
        match otoc_mqc(&system.topology, &system.params, n, &grid, &mode) {
            Ok(series) => {
                let jt = unsafe { std::slice::from_raw_parts_mut(out_jt, n_points) };
                let values = unsafe { std::slice::from_raw_parts_mut(out_values, n_points) };
                jt.copy_from_slice(&series.jt);
                values.copy_from_slice(&series.values);
                OtocStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Layer-scrambling OTOC series (central-spin information probed on the
/// second layer); same buffer contract as `otoc_mqc_series`.
///
/// # Safety
/// As for `otoc_mqc_series`.
#[no_mangle]
pub unsafe extern "C" fn otoc_layer_scrambling_series(
    sys: *const OtocSystem,
    max_jt: f64,
    n_points: usize,
    out_jt: *mut f64,
    out_values: *mut f64,
) -> OtocStatus {
    guarded(|| {
        if sys.is_null() || out_jt.is_null() || out_values.is_null() {
            set_error("null pointer");
            return OtocStatus::NullPointer;
        }
        if n_points < 2 || !(max_jt > 0.0) {
            set_error("need n_points >= 2 and max_jt > 0");
            return OtocStatus::InvalidArgument;
        }
        let system = unsafe { &*sys };
        let grid = linspace(max_jt, n_points);
        match layer_scrambling_otoc(&system.topology, &system.params, &grid) {
            Ok(series) => {
                let jt = unsafe { std::slice::from_raw_parts_mut(out_jt, n_points) };
                let values = unsafe { std::slice::from_raw_parts_mut(out_values, n_points) };
                jt.copy_from_slice(&series.jt);
                values.copy_from_slice(&series.values);
                OtocStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Pulsed-field-gradient ratio -(γ_P + (q-1)γ_H)/γ_P.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn otoc_gradient_ratio(
    q: i64,
    gamma_p: f64,
    gamma_h: f64,
    out: *mut f64,
) -> OtocStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null pointer");
            return OtocStatus::NullPointer;
        }
        match gradient_ratio(q, gamma_p, gamma_h) {
            Ok(r) => {
                unsafe { *out = r };
                OtocStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                OtocStatus::InvalidArgument
            }
        }
    })
}

/// Copy the last error message for this thread into `buf` (truncated,
/// NUL-terminated). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null with `cap` 0.
#[no_mangle]
pub unsafe extern "C" fn otoc_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}
