//! C ABI over the `eqo` library.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `_free`. Complex arrays are interleaved `re, im` pairs
//! in row-major order, so an `n x n` matrix occupies `2 n^2` doubles.
//!
//! Every entry point returns an [`EqoStatus`]. On failure the message is
//! available from [`eqo_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eqo::oracle::{apply_factorization, evolve_generator, GaussianState};
use eqo::reorder::{decompose, reconstruct, transfer_matrix};
use eqo::{appendix, catalog, ComplexMatrix, EqoError, Factorization, QuadraticGenerator};
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqoStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Malformed input: bad shape, asymmetric D1/D2, unknown catalog entry.
    InvalidInput = 2,
    /// The ordered form does not exist here (singular T22 and the like).
    Domain = 3,
    /// The caller's output buffer is shorter than required.
    BufferTooSmall = 4,
    /// A panic was caught at the boundary. This is a bug.
    Internal = 5,
}

/// Opaque generator `R = [[D1, F], [F^T, D2]]`.
pub struct EqoGenerator(QuadraticGenerator);

/// Opaque factorization: `W`, `Y`, `Z` and the prefactor.
pub struct EqoFactorization(Factorization);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: EqoStatus, msg: impl Into<String>) -> EqoStatus {
    set_error(msg);
    status
}

fn from_eqo(e: EqoError) -> EqoStatus {
    let status = if e.is_domain_error() {
        EqoStatus::Domain
    } else {
        EqoStatus::InvalidInput
    };
    fail(status, e.to_string())
}

fn guard(body: impl FnOnce() -> EqoStatus) -> EqoStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(p) => {
            let what = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(EqoStatus::Internal, format!("internal error: {what}"))
        }
    }
}

/// # Safety
/// `data` must point to `2 n^2` readable doubles.
unsafe fn read_matrix(n: usize, data: *const f64, name: &str) -> Result<ComplexMatrix, EqoStatus> {
    if data.is_null() {
        return Err(fail(EqoStatus::NullPointer, format!("{name} is null")));
    }
    let raw = std::slice::from_raw_parts(data, 2 * n * n);
    let entries = raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
    ComplexMatrix::new(n, n, entries).map_err(|e| fail(EqoStatus::InvalidInput, format!("{name}: {e}")))
}

/// # Safety
/// `out` must point to `len` writable doubles.
unsafe fn write_matrix(m: &ComplexMatrix, out: *mut f64, len: usize) -> EqoStatus {
    if out.is_null() {
        return fail(EqoStatus::NullPointer, "output buffer is null");
    }
    let need = 2 * m.rows() * m.cols();
    if len < need {
        return fail(EqoStatus::BufferTooSmall, format!("need {need} doubles, got {len}"));
    }
    let dst = std::slice::from_raw_parts_mut(out, need);
    for (pair, z) in dst.chunks_exact_mut(2).zip(m.as_slice()) {
        pair[0] = z.re;
        pair[1] = z.im;
    }
    EqoStatus::Ok
}

fn boxed<T>(value: T, out: *mut *mut T) -> EqoStatus {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    EqoStatus::Ok
}

/// Message for the last failing call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn eqo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eqo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a generator from `n x n` blocks. `D1` and `D2` must be symmetric.
///
/// # Safety
/// Each block must point to `2 n^2` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eqo_generator_new(
    n: usize,
    d1: *const f64,
    f: *const f64,
    d2: *const f64,
    out: *mut *mut EqoGenerator,
) -> EqoStatus {
    guard(|| {
        if out.is_null() {
            return fail(EqoStatus::NullPointer, "out is null");
        }
        if n == 0 {
            return fail(EqoStatus::InvalidInput, "n must be positive");
        }
        let blocks = (|| Ok((read_matrix(n, d1, "D1")?, read_matrix(n, f, "F")?, read_matrix(n, d2, "D2")?)))();
        let (d1, f, d2) = match blocks {
            Ok(b) => b,
            Err(s) => return s,
        };
        match QuadraticGenerator::new(d1, f, d2) {
            Ok(g) => boxed(EqoGenerator(g), out),
            Err(e) => from_eqo(e),
        }
    })
}

/// Builds a named catalog operator. `keys[i]` pairs with `values[i]`;
/// omitted parameters default to zero.
///
/// # Safety
/// `name` and each `keys[i]` must be NUL-terminated; `keys` and `values`
/// must hold `count` elements (either may be null when `count` is 0).
#[no_mangle]
pub unsafe extern "C" fn eqo_generator_catalog(
    name: *const c_char,
    keys: *const *const c_char,
    values: *const f64,
    count: usize,
    out: *mut *mut EqoGenerator,
) -> EqoStatus {
    guard(|| {
        if out.is_null() || name.is_null() || (count > 0 && (keys.is_null() || values.is_null())) {
            return fail(EqoStatus::NullPointer, "null argument");
        }
        let utf8 = |p: *const c_char| CStr::from_ptr(p).to_str().map(str::to_owned);
        let Ok(name) = utf8(name) else {
            return fail(EqoStatus::InvalidInput, "name is not UTF-8");
        };
        let mut params = BTreeMap::new();
        for i in 0..count {
            let key = *keys.add(i);
            if key.is_null() {
                return fail(EqoStatus::NullPointer, format!("keys[{i}] is null"));
            }
            match utf8(key) {
                Ok(k) => params.insert(k, *values.add(i)),
                Err(_) => return fail(EqoStatus::InvalidInput, format!("keys[{i}] is not UTF-8")),
            };
        }
        match catalog::by_name(&name, &params) {
            Ok(op) => boxed(EqoGenerator(op.generator), out),
            Err(e) => from_eqo(e),
        }
    })
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqo_generator_modes(g: *const EqoGenerator) -> usize {
    g.as_ref().map_or(0, |g| g.0.modes())
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eqo_generator_free(g: *mut EqoGenerator) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Writes `T = exp(R Sigma^-1)`, a `2n x 2n` matrix (`8 n^2` doubles).
///
/// # Safety
/// `g` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eqo_transfer_matrix(g: *const EqoGenerator, out: *mut f64, len: usize) -> EqoStatus {
    guard(|| {
        let Some(g) = g.as_ref() else {
            return fail(EqoStatus::NullPointer, "generator is null");
        };
        match transfer_matrix(&g.0) {
            Ok(t) => write_matrix(&t.full(), out, len),
            Err(e) => from_eqo(e),
        }
    })
}

/// Runs the full pipeline. `EQO_STATUS_DOMAIN` when T22 is singular.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eqo_decompose(g: *const EqoGenerator, out: *mut *mut EqoFactorization) -> EqoStatus {
    guard(|| {
        let Some(g) = g.as_ref() else {
            return fail(EqoStatus::NullPointer, "generator is null");
        };
        if out.is_null() {
            return fail(EqoStatus::NullPointer, "out is null");
        }
        match decompose(&g.0) {
            Ok(f) => boxed(EqoFactorization(f), out),
            Err(e) => from_eqo(e),
        }
    })
}

/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqo_factorization_modes(f: *const EqoFactorization) -> usize {
    f.as_ref().map_or(0, |f| f.0.modes())
}

/// # Safety
/// `f` must be a live handle; `out` must hold `len` doubles.
unsafe fn write_block(
    f: *const EqoFactorization,
    pick: fn(&Factorization) -> &ComplexMatrix,
    out: *mut f64,
    len: usize,
) -> EqoStatus {
    guard(|| match f.as_ref() {
        Some(f) => write_matrix(pick(&f.0), out, len),
        None => fail(EqoStatus::NullPointer, "factorization is null"),
    })
}

/// Writes `W` as `2 n^2` interleaved doubles.
///
/// # Safety
/// `f` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eqo_factorization_w(f: *const EqoFactorization, out: *mut f64, len: usize) -> EqoStatus {
    write_block(f, |f| &f.w, out, len)
}

/// Writes `Y`. The principal logarithm is used, so `exp(-Y) = T22^T`.
///
/// # Safety
/// `f` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eqo_factorization_y(f: *const EqoFactorization, out: *mut f64, len: usize) -> EqoStatus {
    write_block(f, |f| &f.y, out, len)
}

/// Writes `Z` as `2 n^2` interleaved doubles.
///
/// # Safety
/// `f` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eqo_factorization_z(f: *const EqoFactorization, out: *mut f64, len: usize) -> EqoStatus {
    write_block(f, |f| &f.z, out, len)
}

/// Writes `exp(tr Y / 2)` as `out[0] + i out[1]`.
///
/// # Safety
/// `f` must be a live handle; `out` must hold 2 doubles.
#[no_mangle]
pub unsafe extern "C" fn eqo_factorization_prefactor(f: *const EqoFactorization, out: *mut f64) -> EqoStatus {
    guard(|| match f.as_ref() {
        Some(f) => write_matrix(&ComplexMatrix::scalar(f.0.prefactor), out, 2),
        None => fail(EqoStatus::NullPointer, "factorization is null"),
    })
}

/// Multiplies the factors back into `T` (`8 n^2` doubles).
///
/// # Safety
/// `f` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eqo_factorization_reconstruct(f: *const EqoFactorization, out: *mut f64, len: usize) -> EqoStatus {
    guard(|| {
        let Some(f) = f.as_ref() else {
            return fail(EqoStatus::NullPointer, "factorization is null");
        };
        match reconstruct(&f.0) {
            Ok(t) => write_matrix(&t.full(), out, len),
            Err(e) => from_eqo(e),
        }
    })
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eqo_factorization_free(f: *mut EqoFactorization) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Distance between the factored action and the integrated Gaussian flow,
/// both applied to the vacuum, over `steps` Runge-Kutta steps.
///
/// # Safety
/// `g` must be a live handle; `distance` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eqo_oracle_check(g: *const EqoGenerator, steps: usize, distance: *mut f64) -> EqoStatus {
    guard(|| {
        let (Some(g), false) = (g.as_ref(), distance.is_null()) else {
            return fail(EqoStatus::NullPointer, "null argument");
        };
        if steps == 0 {
            return fail(EqoStatus::InvalidInput, "steps must be positive");
        }
        let start = GaussianState::vacuum(g.0.modes());
        let run = || -> eqo::Result<f64> {
            let factored = apply_factorization(&decompose(&g.0)?, &start)?;
            Ok(factored.distance(&evolve_generator(&g.0, &start, steps)?))
        };
        match run() {
            Ok(d) => {
                *distance = d;
                EqoStatus::Ok
            }
            Err(e) => from_eqo(e),
        }
    })
}

/// `|v(1) - prefactor|` from the v(t) integration; `consistent` is set when
/// it is below 1e-7.
///
/// # Safety
/// `g` must be a live handle; `residual` and `consistent` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eqo_prefactor_check(
    g: *const EqoGenerator,
    steps: usize,
    residual: *mut f64,
    consistent: *mut bool,
) -> EqoStatus {
    guard(|| {
        let Some(g) = g.as_ref() else {
            return fail(EqoStatus::NullPointer, "generator is null");
        };
        if residual.is_null() || consistent.is_null() {
            return fail(EqoStatus::NullPointer, "null output");
        }
        match appendix::prefactor_report(&g.0, steps) {
            Ok(r) => {
                *residual = r.residual;
                *consistent = r.consistent;
                EqoStatus::Ok
            }
            Err(e) => from_eqo(e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrices_interleave_row_major() {
        let m = ComplexMatrix::from_rows(&[
            vec![Complex64::new(1.0, 2.0), Complex64::new(3.0, 4.0)],
            vec![Complex64::new(5.0, 6.0), Complex64::new(7.0, 8.0)],
        ])
        .unwrap();
        let mut buf = [0.0; 8];
        assert_eq!(unsafe { write_matrix(&m, buf.as_mut_ptr(), 8) }, EqoStatus::Ok);
        assert_eq!(buf, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(unsafe { read_matrix(2, buf.as_ptr(), "m") }.unwrap(), m);
    }

    #[test]
    fn panics_become_internal() {
        let hook = std::panic::take_hook();
        std::panic::set_hook(Box::new(|_| {}));
        let status = guard(|| panic!("boom"));
        std::panic::set_hook(hook);
        assert_eq!(status, EqoStatus::Internal);
        let msg = unsafe { CStr::from_ptr(eqo_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }

    #[test]
    fn domain_errors_map_to_domain() {
        let e = EqoError::ZeroT22 { magnitude: 0.0 };
        assert_eq!(from_eqo(e), EqoStatus::Domain);
        assert_eq!(from_eqo(EqoError::InvalidParameter("x".into())), EqoStatus::InvalidInput);
    }
}
