//! C ABI over the derivation engine. Results travel as opaque handles;
//! strings are UTF-8, heap-owned, and released with `wres_string_free`.
//! Every entry point catches panics and reports them as a status code.

use std::ffi::CString;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use wres::functionals::{
    compute_p, compute_q, render_report, wres_assemble, FunctionalResult, OutputFormat,
};
use wres::oracle::cross_check;

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WresStatus {
    Ok = 0,
    NullArgument = 1,
    BadFunctional = 2,
    BadFormat = 3,
    IndexOutOfRange = 4,
    ComputeFailed = 5,
    NumericFailed = 6,
    Internal = 7,
}

/// Output format selector for `wres_render`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WresFormat {
    Plain = 0,
    Latex = 1,
    Json = 2,
}

/// Opaque computed-functional handle.
pub struct WresResult {
    inner: FunctionalResult,
}

fn guarded<F: FnOnce() -> WresStatus>(f: F) -> WresStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => WresStatus::Internal,
    }
}

fn hand_out(s: String, out: *mut *mut c_char) -> WresStatus {
    // Interior NUL cannot occur in rendered output; guard anyway.
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            WresStatus::Ok
        }
        Err(_) => WresStatus::Internal,
    }
}

/// Derive one functional. `functional` is 'P' or 'Q' (ASCII, either case).
/// On success `*out` owns the handle; release with `wres_result_free`.
#[no_mangle]
pub extern "C" fn wres_compute(functional: c_char, out: *mut *mut WresResult) -> WresStatus {
    if out.is_null() {
        return WresStatus::NullArgument;
    }
    guarded(|| {
        let computed = match (functional as u8).to_ascii_uppercase() {
            b'P' => compute_p(),
            b'Q' => compute_q(),
            _ => return WresStatus::BadFunctional,
        };
        match computed {
            Ok(inner) => {
                let handle = Box::new(WresResult { inner });
                unsafe { *out = Box::into_raw(handle) };
                WresStatus::Ok
            }
            Err(_) => WresStatus::ComputeFailed,
        }
    })
}

/// Release a handle returned by `wres_compute`. NULL is a no-op.
#[no_mangle]
pub extern "C" fn wres_result_free(result: *mut WresResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

/// Render the assembled functional statement in the requested format.
#[no_mangle]
pub extern "C" fn wres_render(
    result: *const WresResult,
    format: WresFormat,
    out: *mut *mut c_char,
) -> WresStatus {
    if result.is_null() || out.is_null() {
        return WresStatus::NullArgument;
    }
    guarded(|| {
        let r = unsafe { &*result };
        let f = match format {
            WresFormat::Plain => OutputFormat::Plain,
            WresFormat::Latex => OutputFormat::Latex,
            WresFormat::Json => OutputFormat::Json,
        };
        hand_out(wres_assemble(&r.inner, f), out)
    })
}

/// Exact coefficient of one basis slot (0..=10) of the density, as a
/// rational-function string.
#[no_mangle]
pub extern "C" fn wres_density_coefficient(
    result: *const WresResult,
    slot: usize,
    out: *mut *mut c_char,
) -> WresStatus {
    if result.is_null() || out.is_null() {
        return WresStatus::NullArgument;
    }
    guarded(|| {
        let r = unsafe { &*result };
        match r.inner.density.coefficients.get(slot) {
            Some(c) => hand_out(c.to_string(), out),
            None => WresStatus::IndexOutOfRange,
        }
    })
}

/// Number of recorded checkpoints, or -1 for a NULL handle.
#[no_mangle]
pub extern "C" fn wres_checkpoint_count(result: *const WresResult) -> i64 {
    if result.is_null() {
        return -1;
    }
    unsafe { &*result }.inner.checkpoints.len() as i64
}

/// Tag of checkpoint `index` (derivation order).
#[no_mangle]
pub extern "C" fn wres_checkpoint_tag(
    result: *const WresResult,
    index: usize,
    out: *mut *mut c_char,
) -> WresStatus {
    if result.is_null() || out.is_null() {
        return WresStatus::NullArgument;
    }
    guarded(|| {
        let r = unsafe { &*result };
        match r.inner.checkpoints.get(index) {
            Some(cp) => hand_out(cp.tag.clone(), out),
            None => WresStatus::IndexOutOfRange,
        }
    })
}

/// Whether checkpoint `index` reproduced its displayed value.
#[no_mangle]
pub extern "C" fn wres_checkpoint_matches(
    result: *const WresResult,
    index: usize,
    out: *mut bool,
) -> WresStatus {
    if result.is_null() || out.is_null() {
        return WresStatus::NullArgument;
    }
    guarded(|| {
        let r = unsafe { &*result };
        match r.inner.checkpoints.get(index) {
            Some(cp) => {
                unsafe { *out = cp.matches };
                WresStatus::Ok
            }
            None => WresStatus::IndexOutOfRange,
        }
    })
}

/// Whether the derivation diverged from the displayed tables anywhere.
#[no_mangle]
pub extern "C" fn wres_has_discrepancy(
    result: *const WresResult,
    out: *mut bool,
) -> WresStatus {
    if result.is_null() || out.is_null() {
        return WresStatus::NullArgument;
    }
    unsafe { *out = (*result).inner.report.is_some() };
    WresStatus::Ok
}

/// Rendered discrepancy report with its audit trail; `*out` is NULL when
/// every checkpoint matched.
#[no_mangle]
pub extern "C" fn wres_report_render(
    result: *const WresResult,
    out: *mut *mut c_char,
) -> WresStatus {
    if result.is_null() || out.is_null() {
        return WresStatus::NullArgument;
    }
    guarded(|| {
        let r = unsafe { &*result };
        match &r.inner.report {
            Some(rep) => hand_out(render_report(rep), out),
            None => {
                unsafe { *out = std::ptr::null_mut() };
                WresStatus::Ok
            }
        }
    })
}

/// Release a string returned by any renderer. NULL is a no-op.
#[no_mangle]
pub extern "C" fn wres_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Numeric oracle: `draws` random curvature draws at half-dimension `m`
/// (2 or 3), seeded; writes the worst relative deviation and whether all
/// comparisons stayed within `tolerance`.
#[no_mangle]
pub extern "C" fn wres_cross_check(
    m: u32,
    draws: u32,
    seed: u64,
    tolerance: f64,
    out_max_rel: *mut f64,
    out_ok: *mut bool,
) -> WresStatus {
    if out_max_rel.is_null() || out_ok.is_null() {
        return WresStatus::NullArgument;
    }
    guarded(|| match cross_check(m as usize, draws as usize, seed, tolerance) {
        Ok(outcome) => {
            unsafe {
                *out_max_rel = outcome.max_rel;
                *out_ok = outcome.ok;
            }
            WresStatus::Ok
        }
        Err(_) => WresStatus::NumericFailed,
    })
}
