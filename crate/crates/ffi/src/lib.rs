//! C ABI over the contact-lab core: opaque map handles, status codes, and a
//! JSON-in/JSON-out census entry point.
//!
//! Conventions shared by every function here:
//!
//! * Results travel through out-pointers; every function returns a
//!   [`ClStatus`] and never unwinds across the boundary.
//! * Points use the flat layout `[x_1..x_n, y_1..y_n, z]` of length
//!   `2 n + 1`, matching the row order of the variational data.
//! * On any status other than `CL_STATUS_OK` a human-readable message is
//!   stored per thread and can be read back with
//!   [`cl_last_error_message`]; the pointer stays valid until the next
//!   failing call on the same thread.
//! * Handles returned through `out` parameters are owned by the caller and
//!   must be released with the matching `cl_*_free` function exactly once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use contact_lab::census::run_census;
use contact_lab::config::ExperimentConfig;
use contact_lab::flow::FlowOpts;
use contact_lab::jet::gamma;
use contact_lab::map::{make_family, ContactMap, FamilyParams};
use contact_lab::report::CensusReport;
use contact_lab::translated::residual;
use contact_lab::ContactPoint;
use contact_lab::Error;

/// Status code returned by every FFI entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClStatus {
    /// The call succeeded and all out-parameters are populated.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Arguments were structurally valid but rejected (unknown family,
    /// malformed config, wrong buffer length, zero iterate, ...).
    InvalidArgument = 3,
    /// The computation itself failed (integration or solver error).
    RuntimeError = 4,
    /// The library caught a panic; state is consistent but the call did
    /// nothing.
    InternalPanic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    // Interior NULs cannot come from our error types, but never panic here.
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn fail(status: ClStatus, msg: impl AsRef<str>) -> ClStatus {
    set_last_error(msg.as_ref());
    status
}

fn status_for(err: &Error) -> ClStatus {
    match err {
        Error::InvalidFamily { .. }
        | Error::DimensionMismatch { .. }
        | Error::Config { .. }
        | Error::Io { .. } => ClStatus::InvalidArgument,
        Error::IntegrationFailure { .. }
        | Error::NotTranslated { .. }
        | Error::LemmaPrecondition { .. } => ClStatus::RuntimeError,
    }
}

/// Shields the boundary: turns panics into `InternalPanic` instead of
/// undefined behaviour from unwinding into C.
fn guarded(body: impl FnOnce() -> ClStatus) -> ClStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(ClStatus::InternalPanic, "internal panic in contact-lab"),
    }
}

/// # Safety
/// `p` must be null or a NUL-terminated C string valid for reads.
unsafe fn utf8_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, ClStatus> {
    if p.is_null() {
        return Err(fail(ClStatus::NullPointer, format!("`{name}` is null")));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(ClStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

/// Opaque handle to a compactly supported contactomorphism (a word of
/// contact Hamiltonian flows together with its integration settings).
pub struct ClMap {
    inner: ContactMap,
}

/// # Safety
/// `map` must be a live handle produced by this library.
unsafe fn map_arg<'a>(map: *const ClMap) -> Result<&'a ContactMap, ClStatus> {
    if map.is_null() {
        return Err(fail(ClStatus::NullPointer, "`map` is null"));
    }
    Ok(unsafe { &(*map).inner })
}

/// # Safety
/// `q` must point to `len` readable doubles in the layout
/// `[x_1..x_n, y_1..y_n, z]` and `len` must equal `2 n + 1` for the map.
unsafe fn point_arg(m: &ContactMap, q: *const f64, len: usize) -> Result<ContactPoint, ClStatus> {
    if q.is_null() {
        return Err(fail(ClStatus::NullPointer, "`q` is null"));
    }
    if len != m.dim() {
        return Err(fail(
            ClStatus::InvalidArgument,
            format!("point length {len} does not match map dimension {}", m.dim()),
        ));
    }
    let flat = unsafe { std::slice::from_raw_parts(q, len) };
    Ok(ContactPoint::from_flat(flat, m.periodic_z()))
}

/// Builds a catalog contactomorphism.
///
/// `family` is one of `radial_twist`, `z_perturbed_twist`,
/// `anisotropic_twist`, `hamiltonian_lift`; `params_json` carries its
/// parameters, e.g. `{"c": 1.0, "power": 2}` or
/// `{"c": 0.7, "a": 1.0, "b": 2.0}`. `periodic_z` selects the manifold
/// (`false` for Euclidean space, `true` for the circle-fibered case) and
/// `steps_per_unit` the RK4 resolution per unit of flow time.
///
/// # Safety
/// `family` and `params_json` must be NUL-terminated strings; `out` must be
/// a valid pointer. On success `*out` owns the handle and must be released
/// with [`cl_map_free`].
#[no_mangle]
pub unsafe extern "C" fn cl_map_new(
    family: *const c_char,
    params_json: *const c_char,
    n: usize,
    periodic_z: bool,
    steps_per_unit: usize,
    out: *mut *mut ClMap,
) -> ClStatus {
    guarded(|| {
        if out.is_null() {
            return fail(ClStatus::NullPointer, "`out` is null");
        }
        let family = match unsafe { utf8_arg(family, "family") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let params = match unsafe { utf8_arg(params_json, "params_json") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let params: FamilyParams = match serde_json::from_str(params) {
            Ok(p) => p,
            Err(e) => {
                return fail(ClStatus::InvalidArgument, format!("params_json: {e}"));
            }
        };
        match make_family(
            family,
            &params,
            n,
            periodic_z,
            FlowOpts::with_steps(steps_per_unit.max(1)),
        ) {
            Ok(m) => {
                unsafe { *out = Box::into_raw(Box::new(ClMap { inner: m })) };
                ClStatus::Ok
            }
            Err(e) => fail(status_for(&e), e.to_string()),
        }
    })
}

/// Creates the `k`-th iterate of `map` as a new handle.
///
/// # Safety
/// `map` must be a live handle; `out` must be valid. On success `*out`
/// owns the new handle.
#[no_mangle]
pub unsafe extern "C" fn cl_map_iterate(
    map: *const ClMap,
    k: usize,
    out: *mut *mut ClMap,
) -> ClStatus {
    guarded(|| {
        if out.is_null() {
            return fail(ClStatus::NullPointer, "`out` is null");
        }
        let m = match unsafe { map_arg(map) } {
            Ok(m) => m,
            Err(status) => return status,
        };
        if k == 0 {
            return fail(ClStatus::InvalidArgument, "iterate k must be at least 1");
        }
        let iterated = m.iterate(k);
        unsafe { *out = Box::into_raw(Box::new(ClMap { inner: iterated })) };
        ClStatus::Ok
    })
}

/// Releases a handle created by [`cl_map_new`] or [`cl_map_iterate`].
/// Passing null is a no-op.
///
/// # Safety
/// `map` must be null or a live handle; the handle must not be used again.
#[no_mangle]
pub unsafe extern "C" fn cl_map_free(map: *mut ClMap) {
    if !map.is_null() {
        drop(unsafe { Box::from_raw(map) });
    }
}

/// Writes the flat point dimension `2 n + 1` of the map to `*out_dim`.
///
/// # Safety
/// `map` must be a live handle and `out_dim` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cl_map_dim(map: *const ClMap, out_dim: *mut usize) -> ClStatus {
    guarded(|| {
        if out_dim.is_null() {
            return fail(ClStatus::NullPointer, "`out_dim` is null");
        }
        match unsafe { map_arg(map) } {
            Ok(m) => {
                unsafe { *out_dim = m.dim() };
                ClStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Evaluates the map at `q`, writing the image point (flat layout, same
/// length as `q`) and the conformal exponent `g` with `phi* alpha = e^g alpha`.
///
/// # Safety
/// `map` must be a live handle; `q` must point to `len` doubles;
/// `out_image` must have room for `len` doubles; `out_g` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cl_map_evaluate(
    map: *const ClMap,
    q: *const f64,
    len: usize,
    out_image: *mut f64,
    out_g: *mut f64,
) -> ClStatus {
    guarded(|| {
        if out_image.is_null() || out_g.is_null() {
            return fail(ClStatus::NullPointer, "`out_image` or `out_g` is null");
        }
        let m = match unsafe { map_arg(map) } {
            Ok(m) => m,
            Err(status) => return status,
        };
        let point = match unsafe { point_arg(m, q, len) } {
            Ok(p) => p,
            Err(status) => return status,
        };
        match m.evaluate_point(&point) {
            Ok((image, g)) => {
                let flat = image.flat();
                unsafe {
                    std::slice::from_raw_parts_mut(out_image, len)
                        .copy_from_slice(flat.as_slice());
                    *out_g = g;
                }
                ClStatus::Ok
            }
            Err(e) => fail(status_for(&e), e.to_string()),
        }
    })
}

/// Writes the Euclidean norm of the translated-point residual
/// `[phi(q)_xy - q_xy, g(q)]` to `*out_norm`; zero exactly on translated
/// points of the map.
///
/// # Safety
/// Same pointer contracts as [`cl_map_evaluate`].
#[no_mangle]
pub unsafe extern "C" fn cl_translated_residual(
    map: *const ClMap,
    q: *const f64,
    len: usize,
    out_norm: *mut f64,
) -> ClStatus {
    guarded(|| {
        if out_norm.is_null() {
            return fail(ClStatus::NullPointer, "`out_norm` is null");
        }
        let m = match unsafe { map_arg(map) } {
            Ok(m) => m,
            Err(status) => return status,
        };
        let point = match unsafe { point_arg(m, q, len) } {
            Ok(p) => p,
            Err(status) => return status,
        };
        match residual(m, &point) {
            Ok(r) => {
                unsafe { *out_norm = r.norm() };
                ClStatus::Ok
            }
            Err(e) => fail(status_for(&e), e.to_string()),
        }
    })
}

/// Writes the contact action `z(phi(q)) - z(q)` (the Reeb displacement;
/// the action of a translated point when the residual vanishes) to
/// `*out_action`.
///
/// # Safety
/// Same pointer contracts as [`cl_map_evaluate`].
#[no_mangle]
pub unsafe extern "C" fn cl_contact_action(
    map: *const ClMap,
    q: *const f64,
    len: usize,
    out_action: *mut f64,
) -> ClStatus {
    guarded(|| {
        if out_action.is_null() {
            return fail(ClStatus::NullPointer, "`out_action` is null");
        }
        let m = match unsafe { map_arg(map) } {
            Ok(m) => m,
            Err(status) => return status,
        };
        let point = match unsafe { point_arg(m, q, len) } {
            Ok(p) => p,
            Err(status) => return status,
        };
        match m.evaluate_point(&point) {
            Ok((image, _)) => {
                unsafe { *out_action = image.z - point.z };
                ClStatus::Ok
            }
            Err(e) => fail(status_for(&e), e.to_string()),
        }
    })
}

/// Writes the Legendrian-graph point of the map at `q` as
/// `[base (2n+1), p (2n+1), theta]`, `4 n + 3` doubles in total: the jet
/// coordinates in which translated points are exactly the intersections
/// with the wall `p = 0` and `theta` is the contact action there.
///
/// # Safety
/// `map` must be a live handle; `q` must point to `len` doubles;
/// `out_graph` must have room for `graph_len = 2 * len + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn cl_jet_graph_point(
    map: *const ClMap,
    q: *const f64,
    len: usize,
    out_graph: *mut f64,
    graph_len: usize,
) -> ClStatus {
    guarded(|| {
        if out_graph.is_null() {
            return fail(ClStatus::NullPointer, "`out_graph` is null");
        }
        let m = match unsafe { map_arg(map) } {
            Ok(m) => m,
            Err(status) => return status,
        };
        let point = match unsafe { point_arg(m, q, len) } {
            Ok(p) => p,
            Err(status) => return status,
        };
        let need = 2 * m.dim() + 1;
        if graph_len != need {
            return fail(
                ClStatus::InvalidArgument,
                format!("graph buffer length {graph_len} does not match {need}"),
            );
        }
        match gamma(m, &point) {
            Ok(jet) => {
                let out = unsafe { std::slice::from_raw_parts_mut(out_graph, need) };
                let d = m.dim();
                out[..d].copy_from_slice(&jet.base);
                out[d..2 * d].copy_from_slice(&jet.p);
                out[2 * d] = jet.theta;
                ClStatus::Ok
            }
            Err(e) => fail(status_for(&e), e.to_string()),
        }
    })
}

/// Runs a full translated-point census from an experiment configuration
/// (the same JSON schema the CLI accepts) and returns the report JSON.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out_report_json` a
/// valid pointer. On success `*out_report_json` owns a NUL-terminated
/// string that must be released with [`cl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cl_census_run(
    config_json: *const c_char,
    out_report_json: *mut *mut c_char,
) -> ClStatus {
    guarded(|| {
        if out_report_json.is_null() {
            return fail(ClStatus::NullPointer, "`out_report_json` is null");
        }
        let text = match unsafe { utf8_arg(config_json, "config_json") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let config = match ExperimentConfig::from_json(text, "<ffi>") {
            Ok(c) => c,
            Err(e) => return fail(status_for(&e), e.to_string()),
        };
        let map = match config.build_map() {
            Ok(m) => m,
            Err(e) => return fail(status_for(&e), e.to_string()),
        };
        let census = match run_census(&map, &config.census_opts()) {
            Ok(c) => c,
            Err(e) => return fail(status_for(&e), e.to_string()),
        };
        let report = CensusReport::new(config.canonical_value(), &census);
        match CString::new(report.to_json()) {
            Ok(s) => {
                unsafe { *out_report_json = s.into_raw() };
                ClStatus::Ok
            }
            Err(_) => fail(
                ClStatus::RuntimeError,
                "report JSON contained an interior NUL",
            ),
        }
    })
}

/// Releases a string returned by [`cl_census_run`]. Passing null is a
/// no-op.
///
/// # Safety
/// `s` must be null or a string owned by this library; it must not be used
/// again.
#[no_mangle]
pub unsafe extern "C" fn cl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Returns the message for the most recent failure on this thread, or an
/// empty string if nothing failed yet. The pointer stays valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Handles may be created on one thread and released on another.
    #[test]
    fn handles_are_send() {
        fn is_send<T: Send>() {}
        is_send::<ClMap>();
    }

    #[test]
    fn status_codes_are_stable() {
        assert_eq!(ClStatus::Ok as i32, 0);
        assert_eq!(ClStatus::NullPointer as i32, 1);
        assert_eq!(ClStatus::InvalidUtf8 as i32, 2);
        assert_eq!(ClStatus::InvalidArgument as i32, 3);
        assert_eq!(ClStatus::RuntimeError as i32, 4);
        assert_eq!(ClStatus::InternalPanic as i32, 5);
    }
}
