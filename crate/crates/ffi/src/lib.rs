//! C ABI over the `cbem` library.
//!
//! Conventions:
//! * every fallible function returns a [`CbemStatus`] and writes results
//!   through out-pointers, which are left untouched on failure;
//! * datasets and fits are opaque heap handles released with their
//!   `*_free` function;
//! * the message for the most recent failure on the calling thread is
//!   available from [`cbem_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cbem::{CbError, CbParams, Dataset, EmConfig, EmResult, GridSpec, Scenario};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbemStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfSupport = 3,
    /// The fit hit a zero-probability observation or a non-finite likelihood.
    Degenerate = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn fail(status: CbemStatus, message: impl Into<String>) -> CbemStatus {
    set_last_error(message.into());
    status
}

fn status_of(err: &CbError) -> CbemStatus {
    match err {
        CbError::OutOfSupport { .. } | CbError::Parse { .. } => CbemStatus::OutOfSupport,
        CbError::InvalidParameter { .. } | CbError::Empty(_) | CbError::Config(_) => {
            CbemStatus::InvalidArgument
        }
        CbError::ZeroProbability { .. }
        | CbError::NonFiniteLikelihood { .. }
        | CbError::AllReplicationsFailed(_) => CbemStatus::Degenerate,
    }
}

fn from_error(err: CbError) -> CbemStatus {
    let status = status_of(&err);
    fail(status, err.to_string())
}

/// Runs `body`, converting panics into [`CbemStatus::Panic`].
fn guard<F>(body: F) -> CbemStatus
where
    F: FnOnce() -> Result<(), CbemStatus>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CbemStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(CbemStatus::Panic, "internal panic"),
    }
}

fn check_out<T>(out: *mut T) -> Result<(), CbemStatus> {
    if out.is_null() {
        Err(fail(CbemStatus::NullPointer, "output pointer is NULL"))
    } else {
        Ok(())
    }
}

/// Opaque dataset handle.
pub struct CbemDataset(Dataset);

/// Opaque fit handle.
pub struct CbemFit(EmResult);

/// EM controls. [`cbem_em_config_default`] gives start (0.5, 0.5),
/// 1000 iterations and tolerance 1e-15.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CbemEmConfig {
    pub start_p: f64,
    pub start_rho: f64,
    pub max_iterations: usize,
    pub epsilon: f64,
}

impl From<CbemEmConfig> for EmConfig {
    fn from(c: CbemEmConfig) -> Self {
        EmConfig {
            start_p: c.start_p,
            start_rho: c.start_rho,
            max_iterations: c.max_iterations,
            epsilon: c.epsilon,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CbemFitSummary {
    pub p_hat: f64,
    pub rho_hat: f64,
    pub iterations: usize,
    pub converged_p: bool,
    pub converged_rho: bool,
    pub log_likelihood: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CbemGridPoint {
    pub p: f64,
    pub rho: f64,
    pub log_likelihood: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CbemParameterSummary {
    pub bias: f64,
    pub rmse: f64,
    pub interval_low: f64,
    pub interval_high: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CbemStudySummary {
    pub p: CbemParameterSummary,
    pub rho: CbemParameterSummary,
    pub degenerate_count: usize,
    pub failed_count: usize,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cbem_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn cbem_status_message(status: CbemStatus) -> *const c_char {
    let s: &'static CStr = match status {
        CbemStatus::Ok => c"ok",
        CbemStatus::NullPointer => c"null pointer argument",
        CbemStatus::InvalidArgument => c"invalid argument",
        CbemStatus::OutOfSupport => c"value outside the support 0..=n",
        CbemStatus::Degenerate => c"degenerate fit",
        CbemStatus::BufferTooSmall => c"buffer too small",
        CbemStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Message for the last failure on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cbem_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |message| message.as_ptr())
    })
}

#[no_mangle]
pub extern "C" fn cbem_em_config_default() -> CbemEmConfig {
    let d = EmConfig::default();
    CbemEmConfig {
        start_p: d.start_p,
        start_rho: d.start_rho,
        max_iterations: d.max_iterations,
        epsilon: d.epsilon,
    }
}

/// # Safety
/// `out` must be NULL or valid for writing one `double`.
#[no_mangle]
pub unsafe extern "C" fn cbem_binomial_pmf(y: u32, n: u32, p: f64, out: *mut f64) -> CbemStatus {
    guard(|| {
        check_out(out)?;
        let v = cbem::binomial_pmf(y, n, p).map_err(from_error)?;
        *out = v;
        Ok(())
    })
}

/// # Safety
/// `out` must be NULL or valid for writing one `double`.
#[no_mangle]
pub unsafe extern "C" fn cbem_cb_pmf(y: u32, n: u32, p: f64, rho: f64, out: *mut f64) -> CbemStatus {
    guard(|| {
        check_out(out)?;
        let params = CbParams::new(n, p, rho).map_err(from_error)?;
        *out = cbem::cb_pmf(y, &params).map_err(from_error)?;
        Ok(())
    })
}

/// Copies `len` observations into a new dataset.
///
/// # Safety
/// `observations` must point to `len` readable `uint32_t` values (it may be
/// NULL only when `len` is 0). `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn cbem_dataset_new(
    n: u32,
    observations: *const u32,
    len: usize,
    out: *mut *mut CbemDataset,
) -> CbemStatus {
    guard(|| {
        check_out(out)?;
        let values = if len == 0 {
            Vec::new()
        } else if observations.is_null() {
            return Err(fail(CbemStatus::NullPointer, "observations pointer is NULL"));
        } else {
            std::slice::from_raw_parts(observations, len).to_vec()
        };
        let data = Dataset::new(n, values).map_err(from_error)?;
        *out = Box::into_raw(Box::new(CbemDataset(data)));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cbem_dataset_free(dataset: *mut CbemDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of observations, 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cbem_dataset_len(dataset: *const CbemDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.len())
}

/// Trial count, 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cbem_dataset_n(dataset: *const CbemDataset) -> u32 {
    dataset.as_ref().map_or(0, |d| d.0.n())
}

/// Copies the observations into `buffer`, which must hold at least
/// `cbem_dataset_len` values.
///
/// # Safety
/// `dataset` must be a live handle; `buffer` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn cbem_dataset_copy_observations(
    dataset: *const CbemDataset,
    buffer: *mut u32,
    capacity: usize,
) -> CbemStatus {
    guard(|| {
        let data = dataset_ref(dataset)?;
        check_out(buffer)?;
        let obs = data.observations();
        if capacity < obs.len() {
            return Err(fail(
                CbemStatus::BufferTooSmall,
                format!("need {} slots, got {capacity}", obs.len()),
            ));
        }
        ptr::copy_nonoverlapping(obs.as_ptr(), buffer, obs.len());
        Ok(())
    })
}

unsafe fn dataset_ref<'a>(dataset: *const CbemDataset) -> Result<&'a Dataset, CbemStatus> {
    dataset
        .as_ref()
        .map(|d| &d.0)
        .ok_or_else(|| fail(CbemStatus::NullPointer, "dataset is NULL"))
}

/// Observed-data log-likelihood; may be `-inf` when the data contradict
/// boundary parameters.
///
/// # Safety
/// `dataset` must be a live handle; `out` valid for one `double`.
#[no_mangle]
pub unsafe extern "C" fn cbem_log_likelihood(
    dataset: *const CbemDataset,
    p: f64,
    rho: f64,
    out: *mut f64,
) -> CbemStatus {
    guard(|| {
        let data = dataset_ref(dataset)?;
        check_out(out)?;
        let params = CbParams::new(data.n(), p, rho).map_err(from_error)?;
        *out = cbem::log_likelihood(data, &params).map_err(from_error)?;
        Ok(())
    })
}

/// Seeded draw of `k` observations from CB(n, p, rho).
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn cbem_sample(
    n: u32,
    p: f64,
    rho: f64,
    k: usize,
    seed: u64,
    out: *mut *mut CbemDataset,
) -> CbemStatus {
    guard(|| {
        check_out(out)?;
        let params = CbParams::new(n, p, rho).map_err(from_error)?;
        let data = cbem::sample(&params, k, seed).map_err(from_error)?;
        *out = Box::into_raw(Box::new(CbemDataset(data)));
        Ok(())
    })
}

/// Runs EM. `config` may be NULL for the defaults.
///
/// # Safety
/// `dataset` must be a live handle, `config` NULL or valid, `out` valid
/// for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn cbem_em_fit(
    dataset: *const CbemDataset,
    config: *const CbemEmConfig,
    out: *mut *mut CbemFit,
) -> CbemStatus {
    guard(|| {
        let data = dataset_ref(dataset)?;
        check_out(out)?;
        let config = config.as_ref().map_or_else(EmConfig::default, |c| (*c).into());
        let fit = cbem::em_fit(data, &config).map_err(from_error)?;
        *out = Box::into_raw(Box::new(CbemFit(fit)));
        Ok(())
    })
}

/// # Safety
/// `fit` must be NULL or a handle from [`cbem_em_fit`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cbem_fit_free(fit: *mut CbemFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// # Safety
/// `fit` must be a live handle; `out` valid for writing one summary.
#[no_mangle]
pub unsafe extern "C" fn cbem_fit_summary(fit: *const CbemFit, out: *mut CbemFitSummary) -> CbemStatus {
    guard(|| {
        let fit = &fit
            .as_ref()
            .ok_or_else(|| fail(CbemStatus::NullPointer, "fit is NULL"))?
            .0;
        check_out(out)?;
        *out = CbemFitSummary {
            p_hat: fit.p_hat,
            rho_hat: fit.rho_hat,
            iterations: fit.iterations,
            converged_p: fit.converged_p,
            converged_rho: fit.converged_rho,
            log_likelihood: fit.log_likelihood,
        };
        Ok(())
    })
}

/// Copies the final responsibilities (one per observation) into `buffer`.
///
/// # Safety
/// `fit` must be a live handle; `buffer` valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn cbem_fit_responsibilities(
    fit: *const CbemFit,
    buffer: *mut f64,
    capacity: usize,
) -> CbemStatus {
    guard(|| {
        let fit = &fit
            .as_ref()
            .ok_or_else(|| fail(CbemStatus::NullPointer, "fit is NULL"))?
            .0;
        check_out(buffer)?;
        let tau = &fit.responsibilities;
        if capacity < tau.len() {
            return Err(fail(
                CbemStatus::BufferTooSmall,
                format!("need {} slots, got {capacity}", tau.len()),
            ));
        }
        ptr::copy_nonoverlapping(tau.as_ptr(), buffer, tau.len());
        Ok(())
    })
}

/// Brute-force grid maximizer. Pass `resolution = 0` for the default
/// search (2001 points, 3 refinement rounds, shrink 0.05).
///
/// # Safety
/// `dataset` must be a live handle; `out` valid for writing one point.
#[no_mangle]
pub unsafe extern "C" fn cbem_grid_mle(
    dataset: *const CbemDataset,
    resolution: usize,
    refine_rounds: usize,
    refine_shrink: f64,
    out: *mut CbemGridPoint,
) -> CbemStatus {
    guard(|| {
        let data = dataset_ref(dataset)?;
        check_out(out)?;
        let spec = if resolution == 0 {
            GridSpec::default()
        } else {
            GridSpec::new(resolution, refine_rounds, refine_shrink).map_err(from_error)?
        };
        let best = cbem::grid_mle(data, &spec).map_err(from_error)?;
        *out = CbemGridPoint {
            p: best.p,
            rho: best.rho,
            log_likelihood: best.log_likelihood,
        };
        Ok(())
    })
}

/// Monte-Carlo study of `replications` fits on samples of size `k`.
/// `config` may be NULL for the default EM controls.
///
/// # Safety
/// `config` must be NULL or valid; `out` valid for writing one summary.
#[no_mangle]
pub unsafe extern "C" fn cbem_run_scenario(
    n: u32,
    p: f64,
    rho: f64,
    k: usize,
    replications: usize,
    seed: u64,
    config: *const CbemEmConfig,
    out: *mut CbemStudySummary,
) -> CbemStatus {
    guard(|| {
        check_out(out)?;
        let params = CbParams::new(n, p, rho).map_err(from_error)?;
        let em_config = config.as_ref().map_or_else(EmConfig::default, |c| (*c).into());
        let scenario = Scenario {
            params,
            sample_size: k,
            replications,
            em_config,
            seed,
        };
        let report = cbem::run_scenario(&scenario).map_err(from_error)?;
        let summary = |s: &cbem::sim::ParameterSummary| CbemParameterSummary {
            bias: s.bias,
            rmse: s.rmse,
            interval_low: s.interval_low,
            interval_high: s.interval_high,
        };
        *out = CbemStudySummary {
            p: summary(&report.p),
            rho: summary(&report.rho),
            degenerate_count: report.degenerate_count,
            failed_count: report.failed_count,
        };
        Ok(())
    })
}
