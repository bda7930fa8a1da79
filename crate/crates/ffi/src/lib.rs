//! C ABI over `hardyfrac`.
//!
//! Every entry point returns an [`HfStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read back with
//! [`hf_last_error_message`]. Runs are returned as opaque handles that the
//! caller releases with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hardyfrac::fode::{blowup_time, volterra_solve, CaseTag, FodeProblem, Trajectory};
use hardyfrac::fracops::TimeGrid;
use hardyfrac::harness::{pde_problem, ExperimentConfig};
use hardyfrac::potential::{hardy_constant, PotentialSpec, RadialDomain};
use hardyfrac::radial::{eigen_first, solve, RadialGrid, RunReport};
use hardyfrac::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    ShapeMismatch = 3,
    Domain = 4,
    Regime = 5,
    NoConvergence = 6,
    SolverFailure = 7,
    Precondition = 8,
    Config = 9,
    Io = 10,
    InvalidUtf8 = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfCase {
    I1 = 1,
    I2 = 2,
    II = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HfBlowupEstimate {
    pub t_m: f64,
    pub case_tag: HfCase,
    pub delta: f64,
    pub w0: f64,
}

/// Opaque scalar trajectory.
pub struct HfTrajectory {
    inner: Trajectory,
}

/// Opaque radial run.
pub struct HfPdeRun {
    report: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> HfStatus {
    match e {
        Error::Parameter { .. } => HfStatus::InvalidParameter,
        Error::Shape { .. } => HfStatus::ShapeMismatch,
        Error::Domain(_) => HfStatus::Domain,
        Error::Regime(_) => HfStatus::Regime,
        Error::Convergence { .. } => HfStatus::NoConvergence,
        Error::Solver { .. } => HfStatus::SolverFailure,
        Error::Precondition(_) => HfStatus::Precondition,
        Error::Config(_) => HfStatus::Config,
        Error::Io(_) => HfStatus::Io,
    }
}

fn fail(status: HfStatus, msg: impl Into<String>) -> HfStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), HfStatus>) -> HfStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(HfStatus::Panic, "panic inside hardyfrac"),
    }
}

fn lift<T>(r: hardyfrac::Result<T>) -> Result<T, HfStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), HfStatus> {
    if p.is_null() {
        Err(fail(HfStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Copies the last error message of this thread, NUL-terminated, into `buf`
/// and returns the full message length without the terminator. Passing a
/// null `buf` or `len == 0` only queries the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn hf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// NUL-terminated version string with static lifetime.
#[no_mangle]
pub extern "C" fn hf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `((n - p) / p)^p`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_hardy_constant(n: f64, p: f64, out: *mut f64) -> HfStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lift(hardy_constant(n, p))?;
        Ok(())
    })
}

/// Closed-form blow-up time of `D^alpha u = u^q`, `u(0) = u0`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_fode_blowup_time(alpha: f64, q: f64, u0: f64, out: *mut HfBlowupEstimate) -> HfStatus {
    guard(|| {
        non_null(out, "out")?;
        let est = blowup_time(&lift(FodeProblem::new(alpha, q, u0))?);
        *out = HfBlowupEstimate {
            t_m: est.t_m,
            case_tag: match est.case {
                CaseTag::I1 => HfCase::I1,
                CaseTag::I2 => HfCase::I2,
                CaseTag::II => HfCase::II,
            },
            delta: est.params.delta,
            w0: est.params.w0,
        };
        Ok(())
    })
}

/// Integrates `D^alpha u = u^q` on `steps` graded steps over `[0, horizon]`
/// (`grading = 1` is uniform), stopping once `u` exceeds `threshold`.
///
/// # Safety
/// `out` must be valid for writes. The handle written there is owned by the
/// caller and released with [`hf_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn hf_fode_solve(
    alpha: f64,
    q: f64,
    u0: f64,
    horizon: f64,
    steps: usize,
    grading: f64,
    threshold: f64,
    out: *mut *mut HfTrajectory,
) -> HfStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let problem = lift(FodeProblem::new(alpha, q, u0))?;
        let grid = lift(TimeGrid::graded(horizon, steps, grading))?;
        let inner = lift(volterra_solve(&problem, &grid, threshold))?;
        *out = Box::into_raw(Box::new(HfTrajectory { inner }));
        Ok(())
    })
}

/// Number of accepted nodes, including `t = 0`. Zero for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_trajectory_len(traj: *const HfTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.values().len())
}

/// Copies the accepted times and values into `times` and `values` (either may
/// be null). Both buffers need [`hf_trajectory_len`] entries.
///
/// # Safety
/// `traj` must be a live handle; non-null buffers must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn hf_trajectory_copy(
    traj: *const HfTrajectory,
    times: *mut f64,
    values: *mut f64,
    len: usize,
) -> HfStatus {
    guard(|| {
        non_null(traj, "traj")?;
        let t = &(*traj).inner;
        let n = t.values().len();
        if len < n {
            return Err(fail(HfStatus::BufferTooSmall, format!("need {n} entries, got {len}")));
        }
        if !times.is_null() {
            ptr::copy_nonoverlapping(t.times().as_ptr(), times, n);
        }
        if !values.is_null() {
            ptr::copy_nonoverlapping(t.values().as_ptr(), values, n);
        }
        Ok(())
    })
}

/// Writes 1 to `blew_up` and the divergence time to `time` if the solver
/// crossed its threshold, else 0 and NaN.
///
/// # Safety
/// `traj` must be a live handle; the out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_trajectory_blowup(
    traj: *const HfTrajectory,
    blew_up: *mut i32,
    time: *mut f64,
) -> HfStatus {
    guard(|| {
        non_null(traj, "traj")?;
        non_null(blew_up, "blew_up")?;
        non_null(time, "time")?;
        let t = &(*traj).inner;
        *blew_up = i32::from(t.blowup_flag());
        *time = t.blowup_time().unwrap_or(f64::NAN);
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_trajectory_free(traj: *mut HfTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// First eigenvalue of `-Delta_p v = lambda W_N |v|^{p-2} v` on the ball of
/// radius `radius` in dimension `n`, with `m` radial cells. `level` may be
/// `INFINITY` for the untruncated weight.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_eigen_first(n: f64, p: f64, radius: f64, level: f64, m: usize, out: *mut f64) -> HfStatus {
    guard(|| {
        non_null(out, "out")?;
        let domain = lift(RadialDomain::new(n, radius))?;
        let spec = lift(PotentialSpec::new(p, 0.0, domain))?;
        let grid = lift(RadialGrid::new(m, &domain))?;
        *out = lift(eigen_first(&spec, level, &grid))?.lambda;
        Ok(())
    })
}

/// Solves the truncated radial problem described by a TOML experiment config
/// (the same format as the command-line tool; missing keys take defaults).
/// A run that diverges still succeeds; query it with [`hf_pde_run_diverged`].
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out` must be valid for
/// writes. Release the handle with [`hf_pde_run_free`].
#[no_mangle]
pub unsafe extern "C" fn hf_pde_solve_toml(config_toml: *const c_char, out: *mut *mut HfPdeRun) -> HfStatus {
    guard(|| {
        non_null(config_toml, "config_toml")?;
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let text = CStr::from_ptr(config_toml)
            .to_str()
            .map_err(|e| fail(HfStatus::InvalidUtf8, e.to_string()))?;
        let config = lift(ExperimentConfig::from_toml_str(text))?;
        lift(config.validate())?;
        let problem = lift(pde_problem(
            &config,
            config.pde.mu_ratio,
            config.pde.amplitude,
            config.pde.truncation,
        ))?;
        let report = lift(solve(&problem))?;
        *out = Box::into_raw(Box::new(HfPdeRun { report }));
        Ok(())
    })
}

/// Number of recorded steps, including `t = 0`. Zero for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_pde_run_len(run: *const HfPdeRun) -> usize {
    run.as_ref().map_or(0, |r| r.report.records.len())
}

/// Last reached time. NaN for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_pde_run_final_time(run: *const HfPdeRun) -> f64 {
    run.as_ref().map_or(f64::NAN, |r| r.report.final_time())
}

/// 1 if the step solver diverged, 0 if the run reached the horizon, -1 for a
/// null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_pde_run_diverged(run: *const HfPdeRun) -> i32 {
    run.as_ref().map_or(-1, |r| i32::from(r.report.divergence.is_some()))
}

/// Copies per-step times and L2 norms; either buffer may be null.
///
/// # Safety
/// `run` must be a live handle; non-null buffers must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn hf_pde_run_norms(
    run: *const HfPdeRun,
    times: *mut f64,
    l2_norms: *mut f64,
    len: usize,
) -> HfStatus {
    guard(|| {
        non_null(run, "run")?;
        let records = &(*run).report.records;
        if len < records.len() {
            return Err(fail(
                HfStatus::BufferTooSmall,
                format!("need {} entries, got {len}", records.len()),
            ));
        }
        for (i, r) in records.iter().enumerate() {
            if !times.is_null() {
                *times.add(i) = r.time;
            }
            if !l2_norms.is_null() {
                *l2_norms.add(i) = r.l2_norm;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_pde_run_free(run: *mut HfPdeRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
