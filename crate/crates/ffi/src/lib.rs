//! C ABI for the `ollga` crate.
//!
//! Objects are opaque handles created by `*_new*` functions and released
//! with the matching `*_free`. Every fallible function returns an
//! [`OllgaStatus`]; on failure, [`ollga_last_error_message`] describes the
//! most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ollga::analysis;
use ollga::sampling::{binomial_pmf, hypergeometric_pmf, Pmf};
use ollga::{BitString, Error, GaParams, OneMaxInstance, RngStream, RunOutcome, Variant};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OllgaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    BufferTooSmall = 4,
    Panic = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OllgaVariant {
    Standard = 0,
    /// The best of all mutation and crossover offspring competes with the parent.
    AllCompete = 1,
}

/// Outcome of one optimization run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OllgaRunOutcome {
    pub iterations: u64,
    pub evaluations: u64,
    pub success: bool,
    pub seed: u64,
    pub final_distance: u64,
}

/// A OneMax instance with a hidden target string.
pub struct OllgaInstance(OneMaxInstance);

/// Algorithm parameters `(n, lambda, k, r)`, variant and budget.
pub struct OllgaParams(GaParams);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OllgaStatus {
    match e {
        Error::LengthMismatch { .. } => OllgaStatus::LengthMismatch,
        Error::InvalidParameter(_) | Error::OutOfRange { .. } | Error::EmptyInput(_) | Error::TooLarge { .. } => {
            OllgaStatus::InvalidArgument
        }
        _ => OllgaStatus::Internal,
    }
}

fn fail(status: OllgaStatus, msg: impl Into<String>) -> OllgaStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), OllgaStatus>>(f: F) -> OllgaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OllgaStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(OllgaStatus::Panic, "internal panic"),
    }
}

fn lib<T>(r: ollga::Result<T>) -> Result<T, OllgaStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, OllgaStatus> {
    p.as_ref().ok_or_else(|| fail(OllgaStatus::NullPointer, format!("{what} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, OllgaStatus> {
    p.as_mut().ok_or_else(|| fail(OllgaStatus::NullPointer, format!("{what} is null")))
}

unsafe fn bits_from<'a>(bits: *const u8, len: usize) -> Result<&'a [u8], OllgaStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if bits.is_null() {
        return Err(fail(OllgaStatus::NullPointer, "bit buffer is null"));
    }
    Ok(std::slice::from_raw_parts(bits, len))
}

fn outcome(o: RunOutcome) -> OllgaRunOutcome {
    OllgaRunOutcome {
        iterations: o.iterations,
        evaluations: o.evaluations,
        success: o.success,
        seed: o.seed,
        final_distance: o.final_distance as u64,
    }
}

/// Message for the most recent failed call on this thread, or null if the
/// last call succeeded. The pointer is valid until the next call into this
/// library on the same thread.
#[no_mangle]
pub extern "C" fn ollga_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn ollga_status_message(status: OllgaStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        OllgaStatus::Ok => b"ok\0",
        OllgaStatus::NullPointer => b"null pointer argument\0",
        OllgaStatus::InvalidArgument => b"invalid argument\0",
        OllgaStatus::LengthMismatch => b"length mismatch\0",
        OllgaStatus::BufferTooSmall => b"output buffer too small\0",
        OllgaStatus::Panic => b"internal panic\0",
        OllgaStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ollga_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Classic OneMax (target all ones) on `n` bits.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ollga_instance_new_classic(n: usize, out: *mut *mut OllgaInstance) -> OllgaStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let inst = lib(OneMaxInstance::classic(n))?;
        *out = Box::into_raw(Box::new(OllgaInstance(inst)));
        Ok(())
    })
}

/// OneMax with the given target; `target` holds `n` bytes, each 0 or 1.
///
/// # Safety
/// `target` must point to `n` readable bytes and `out` to writable storage
/// for one handle.
#[no_mangle]
pub unsafe extern "C" fn ollga_instance_new(
    target: *const u8,
    n: usize,
    out: *mut *mut OllgaInstance,
) -> OllgaStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let bits = lib(BitString::from_bytes(bits_from(target, n)?))?;
        let inst = lib(OneMaxInstance::new(bits))?;
        *out = Box::into_raw(Box::new(OllgaInstance(inst)));
        Ok(())
    })
}

/// OneMax with a uniformly random target drawn from `seed`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ollga_instance_new_random(n: usize, seed: u64, out: *mut *mut OllgaInstance) -> OllgaStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let inst = lib(OneMaxInstance::random(n, &mut RngStream::new(seed)))?;
        *out = Box::into_raw(Box::new(OllgaInstance(inst)));
        Ok(())
    })
}

/// Releases an instance. Null is ignored.
///
/// # Safety
/// `inst` must be null or a handle from `ollga_instance_new*` that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn ollga_instance_free(inst: *mut OllgaInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of bits, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ollga_instance_len(inst: *const OllgaInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.n())
}

/// Writes the target string (one byte per bit) into `buf`.
///
/// # Safety
/// `inst` must be a live handle and `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ollga_instance_target(inst: *const OllgaInstance, buf: *mut u8, len: usize) -> OllgaStatus {
    guard(|| {
        let inst = &deref(inst, "instance")?.0;
        if len < inst.n() {
            return Err(fail(OllgaStatus::BufferTooSmall, format!("need {} bytes, got {len}", inst.n())));
        }
        let out = std::slice::from_raw_parts_mut(deref_mut(buf, "buffer")?, len);
        out[..inst.n()].copy_from_slice(&inst.target().to_bytes());
        Ok(())
    })
}

/// Fitness of `x` (`len` bytes, each 0 or 1).
///
/// # Safety
/// `inst` must be a live handle, `x` must point to `len` readable bytes and
/// `fitness` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ollga_instance_evaluate(
    inst: *const OllgaInstance,
    x: *const u8,
    len: usize,
    fitness: *mut usize,
) -> OllgaStatus {
    guard(|| {
        let inst = &deref(inst, "instance")?.0;
        let fitness = deref_mut(fitness, "fitness")?;
        let x = lib(BitString::from_bytes(bits_from(x, len)?))?;
        *fitness = lib(inst.evaluate(&x))?;
        Ok(())
    })
}

/// Parameters with `0 < k <= n` and `0 < r <= k`, standard variant and the
/// default budget.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ollga_params_new(
    n: usize,
    lambda: usize,
    k: f64,
    r: f64,
    out: *mut *mut OllgaParams,
) -> OllgaStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let p = lib(GaParams::new(n, lambda, k, r))?;
        *out = Box::into_raw(Box::new(OllgaParams(p)));
        Ok(())
    })
}

/// Parameters `lambda = k = round(lambda*(n))`, `r = 1`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ollga_params_suggested(n: usize, out: *mut *mut OllgaParams) -> OllgaStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let p = lib(GaParams::suggested(n))?;
        *out = Box::into_raw(Box::new(OllgaParams(p)));
        Ok(())
    })
}

/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ollga_params_set_variant(params: *mut OllgaParams, variant: OllgaVariant) -> OllgaStatus {
    guard(|| {
        let p = deref_mut(params, "params")?;
        let v = match variant {
            OllgaVariant::Standard => Variant::Standard,
            OllgaVariant::AllCompete => Variant::AllCompete,
        };
        p.0 = p.0.with_variant(v);
        Ok(())
    })
}

/// Sets the evaluation budget; 0 restores the default `1e4 n log2 n`.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ollga_params_set_budget(params: *mut OllgaParams, budget: u64) -> OllgaStatus {
    guard(|| {
        let p = deref_mut(params, "params")?;
        p.0 = p.0.with_budget((budget > 0).then_some(budget));
        Ok(())
    })
}

/// Population size, or 0 for a null handle.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ollga_params_lambda(params: *const OllgaParams) -> usize {
    params.as_ref().map_or(0, |p| p.0.lambda())
}

/// # Safety
/// `params` must be null or a handle from `ollga_params_*` that has not been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn ollga_params_free(params: *mut OllgaParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Runs the GA from a random start until the optimum or the budget.
///
/// # Safety
/// `params` and `inst` must be live handles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ollga_run(
    params: *const OllgaParams,
    inst: *const OllgaInstance,
    seed: u64,
    out: *mut OllgaRunOutcome,
) -> OllgaStatus {
    guard(|| {
        let params = &deref(params, "params")?.0;
        let inst = &deref(inst, "instance")?.0;
        let out = deref_mut(out, "out")?;
        *out = outcome(lib(ollga::run(params, inst, &mut RngStream::new(seed)))?);
        Ok(())
    })
}

/// Runs the (1+1) EA with standard bit mutation at `rate`; `budget` 0 means
/// the default.
///
/// # Safety
/// `inst` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ollga_run_opo_ea(
    inst: *const OllgaInstance,
    rate: f64,
    seed: u64,
    budget: u64,
    out: *mut OllgaRunOutcome,
) -> OllgaStatus {
    guard(|| {
        let inst = &deref(inst, "instance")?.0;
        let out = deref_mut(out, "out")?;
        let budget = (budget > 0).then_some(budget);
        *out = outcome(lib(ollga::run_opo_ea(inst.n(), rate, inst, &mut RngStream::new(seed), budget))?);
        Ok(())
    })
}

/// `sqrt(log n loglog n / logloglog n)` with clamped logarithms.
#[no_mangle]
pub extern "C" fn ollga_lambda_star(n: f64) -> f64 {
    analysis::lambda_star(n)
}

/// `n log n / lambda*(n)`.
#[no_mangle]
pub extern "C" fn ollga_f_star(n: f64) -> f64 {
    analysis::f_star(n)
}

/// `max(n log n / lambda, n lambda loglog lambda / log lambda)`.
#[no_mangle]
pub extern "C" fn ollga_two_term_runtime(n: f64, lambda: f64) -> f64 {
    analysis::two_term_runtime(n, lambda)
}

unsafe fn write_pmf(pmf: Pmf, buf: *mut f64, len: usize, start: *mut u64, written: *mut usize) -> Result<(), OllgaStatus> {
    let start = deref_mut(start, "start")?;
    let written = deref_mut(written, "written")?;
    let probs = pmf.probs();
    *start = pmf.start();
    *written = probs.len();
    if len < probs.len() {
        return Err(fail(
            OllgaStatus::BufferTooSmall,
            format!("need {} entries, got {len}", probs.len()),
        ));
    }
    std::slice::from_raw_parts_mut(deref_mut(buf, "buffer")?, len)[..probs.len()].copy_from_slice(probs);
    Ok(())
}

/// Probabilities of `B(n, p)` at `*start, *start + 1, ...` into `buf`. On
/// `BUFFER_TOO_SMALL`, `*written` holds the required length.
///
/// # Safety
/// `buf` must point to `len` writable doubles; `start` and `written` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ollga_binomial_pmf(
    n: u64,
    p: f64,
    buf: *mut f64,
    len: usize,
    start: *mut u64,
    written: *mut usize,
) -> OllgaStatus {
    guard(|| write_pmf(lib(binomial_pmf(n, p))?, buf, len, start, written))
}

/// Hypergeometric law of the number of marked items among `draws` drawn
/// without replacement from `population`. Same buffer protocol as
/// [`ollga_binomial_pmf`].
///
/// # Safety
/// As for [`ollga_binomial_pmf`].
#[no_mangle]
pub unsafe extern "C" fn ollga_hypergeometric_pmf(
    population: u64,
    draws: u64,
    marked: u64,
    buf: *mut f64,
    len: usize,
    start: *mut u64,
    written: *mut usize,
) -> OllgaStatus {
    guard(|| write_pmf(lib(hypergeometric_pmf(population, draws, marked))?, buf, len, start, written))
}
