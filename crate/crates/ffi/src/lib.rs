//! C ABI over the `pmfix` toolkit.
//!
//! Every entry point returns a [`PmfixStatus`]. Results travel through out
//! pointers, and on failure a message describing the error is available from
//! [`pmfix_last_error`] on the same thread. Objects are opaque handles that
//! must be released with their matching `_free` function. Strings handed out
//! by the library are released with [`pmfix_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pmfix::control::ControlPair;
use pmfix::engine::{iterate, IterateOptions, IterationStatus, MapQuartet};
use pmfix::hausdorff::{h_p, FiniteSet};
use pmfix::metric::{eval_p, induced_ps, BuiltinMetric};
use pmfix::{Error, Point};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmfixStatus {
    Ok = 0,
    /// A hypothesis, condition or contraction check failed, or an iteration
    /// stopped without converging.
    Violation = 1,
    NullPointer = 2,
    InvalidArgument = 3,
    Domain = 4,
    Dimension = 5,
    EmptySet = 6,
    Parse = 7,
    Io = 8,
    Panic = 9,
}

/// Opaque handle to a bundled partial metric.
pub struct PmfixMetric {
    inner: BuiltinMetric,
}

/// Opaque handle to a finite point set.
pub struct PmfixPointSet {
    inner: FiniteSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> PmfixStatus {
    match err {
        Error::DomainMismatch { .. } => PmfixStatus::Domain,
        Error::Dimension { .. } => PmfixStatus::Dimension,
        Error::EmptySet => PmfixStatus::EmptySet,
        Error::Parse { .. } | Error::Schema { .. } | Error::Json(_) | Error::Csv(_) => PmfixStatus::Parse,
        Error::Io { .. } => PmfixStatus::Io,
        Error::Negativity(_) => PmfixStatus::Violation,
        _ => PmfixStatus::InvalidArgument,
    }
}

struct Failure(PmfixStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PmfixStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(PmfixStatus::InvalidArgument, msg.into())
}

/// Runs `body`, records any error for [`pmfix_last_error`] and converts
/// panics into [`PmfixStatus::Panic`].
fn guard(body: impl FnOnce() -> Result<PmfixStatus, Failure>) -> PmfixStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic with unknown payload".into());
            set_last_error(format!("internal panic: {msg}"));
            PmfixStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{what}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn metric_ref<'a>(m: *const PmfixMetric) -> Result<&'a BuiltinMetric, Failure> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null("metric"))
}

unsafe fn set_ref<'a>(s: *const PmfixPointSet, what: &str) -> Result<&'a FiniteSet, Failure> {
    s.as_ref().map(|s| &s.inner).ok_or_else(|| null(what))
}

/// Message of the most recent failure on the calling thread, or null when
/// the last call succeeded. The pointer stays valid until the next call into
/// the library on this thread and must not be freed.
#[no_mangle]
pub extern "C" fn pmfix_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn pmfix_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a bundled metric by name (`max_metric`, `euclidean`,
/// `mixed_metric`, ...). `param` points to the metric parameter (the constant `k`
/// of `mixed_metric`) or is null when the metric takes none.
///
/// # Safety
/// `name` must be a NUL-terminated string; `param` must be null or valid for
/// one read; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pmfix_metric_new(
    name: *const c_char,
    param: *const f64,
    out: *mut *mut PmfixMetric,
) -> PmfixStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let param = param.as_ref().copied();
        let inner = BuiltinMetric::from_name(name, param)?;
        let handle = Box::into_raw(Box::new(PmfixMetric { inner }));
        if let Err(e) = write_out(out, handle, "out") {
            drop(Box::from_raw(handle));
            return Err(e);
        }
        Ok(PmfixStatus::Ok)
    })
}

/// Releases a metric handle. Null is ignored.
///
/// # Safety
/// `m` must be null or a live handle from [`pmfix_metric_new`].
#[no_mangle]
pub unsafe extern "C" fn pmfix_metric_free(m: *mut PmfixMetric) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

unsafe fn point_pair(x: *const f64, y: *const f64, dim: usize) -> Result<(Point, Point), Failure> {
    if dim == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let x = Point::new(slice_arg(x, dim, "x")?)?;
    let y = Point::new(slice_arg(y, dim, "y")?)?;
    Ok((x, y))
}

/// Evaluates the partial metric `p(x, y)` for two points of dimension `dim`.
///
/// # Safety
/// `m` must be a live handle; `x` and `y` must be valid for `dim` reads;
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pmfix_metric_distance(
    m: *const PmfixMetric,
    x: *const f64,
    y: *const f64,
    dim: usize,
    out: *mut f64,
) -> PmfixStatus {
    guard(|| {
        let metric = metric_ref(m)?;
        let (x, y) = point_pair(x, y, dim)?;
        write_out(out, eval_p(metric, &x, &y)?, "out")?;
        Ok(PmfixStatus::Ok)
    })
}

/// Evaluates the induced metric `2p(x, y) - p(x, x) - p(y, y)`.
///
/// # Safety
/// Same contract as [`pmfix_metric_distance`].
#[no_mangle]
pub unsafe extern "C" fn pmfix_metric_induced(
    m: *const PmfixMetric,
    x: *const f64,
    y: *const f64,
    dim: usize,
    out: *mut f64,
) -> PmfixStatus {
    guard(|| {
        let metric = metric_ref(m)?;
        let (x, y) = point_pair(x, y, dim)?;
        write_out(out, induced_ps(metric, &x, &y)?, "out")?;
        Ok(PmfixStatus::Ok)
    })
}

/// Builds a point set from `n_points * dim` row-major coordinates.
/// Exact duplicates are kept once.
///
/// # Safety
/// `coords` must be valid for `n_points * dim` reads; `out` must be valid for
/// one write.
#[no_mangle]
pub unsafe extern "C" fn pmfix_point_set_new(
    coords: *const f64,
    n_points: usize,
    dim: usize,
    out: *mut *mut PmfixPointSet,
) -> PmfixStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let len = n_points
            .checked_mul(dim)
            .ok_or_else(|| invalid("coordinate count overflows"))?;
        let flat = slice_arg(coords, len, "coords")?.to_vec();
        let inner = FiniteSet::from_flat(dim, flat)?;
        let handle = Box::into_raw(Box::new(PmfixPointSet { inner }));
        if let Err(e) = write_out(out, handle, "out") {
            drop(Box::from_raw(handle));
            return Err(e);
        }
        Ok(PmfixStatus::Ok)
    })
}

/// Releases a point-set handle. Null is ignored.
///
/// # Safety
/// `s` must be null or a live handle from [`pmfix_point_set_new`].
#[no_mangle]
pub unsafe extern "C" fn pmfix_point_set_free(s: *mut PmfixPointSet) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of distinct points in the set, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pmfix_point_set_len(s: *const PmfixPointSet) -> usize {
    s.as_ref().map_or(0, |s| s.inner.len())
}

/// Partial Hausdorff distance `H_p(a, b)` under the metric `m`.
///
/// # Safety
/// `m`, `a` and `b` must be live handles; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pmfix_hausdorff(
    m: *const PmfixMetric,
    a: *const PmfixPointSet,
    b: *const PmfixPointSet,
    out: *mut f64,
) -> PmfixStatus {
    guard(|| {
        let metric = metric_ref(m)?;
        let (a, b) = (set_ref(a, "a")?, set_ref(b, "b")?);
        write_out(out, h_p(metric, a, b)?, "out")?;
        Ok(PmfixStatus::Ok)
    })
}

/// Result of [`pmfix_example_iterate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PmfixIterateResult {
    /// Limit point; NaN when the run did not converge.
    pub limit: f64,
    /// Number of recorded steps.
    pub steps: usize,
    /// Self-distance `p(limit, limit)`; NaN when the run did not converge.
    pub self_distance: f64,
}

/// Runs the alternating iteration of the bundled four-map worked example on
/// `[0, k]` with the mixed metric of constant `k`, starting at `x0`.
/// Returns [`PmfixStatus::Violation`] when the run stops without converging;
/// `out` is filled either way.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pmfix_example_iterate(
    k: f64,
    x0: f64,
    tol: f64,
    max_iters: usize,
    out: *mut PmfixIterateResult,
) -> PmfixStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(tol.is_finite() && tol > 0.0) || max_iters == 0 {
            return Err(invalid("tol must be positive and max_iters nonzero"));
        }
        let metric = BuiltinMetric::mixed(k)?;
        let quartet = MapQuartet::example22(k)?;
        let opts = IterateOptions {
            tol,
            max_iters,
            ..IterateOptions::default()
        };
        let trace = iterate(
            &metric,
            &quartet,
            &ControlPair::example22(),
            &Point::scalar(x0),
            &opts,
            None,
        )?;
        let result = PmfixIterateResult {
            limit: trace.limit.as_ref().map_or(f64::NAN, |p| p.x()),
            steps: trace.y.len(),
            self_distance: trace.self_distance.unwrap_or(f64::NAN),
        };
        out.write(result);
        if trace.status == IterationStatus::Converged {
            Ok(PmfixStatus::Ok)
        } else {
            Err(Failure(
                PmfixStatus::Violation,
                trace
                    .message
                    .unwrap_or_else(|| format!("iteration stopped: {:?}", trace.status)),
            ))
        }
    })
}

/// Runs a scenario given as JSON text, writing artifacts under `out_dir`.
/// `seed` is null to keep the scenario's own seed. On success `summary`
/// receives a one-line description to release with [`pmfix_string_free`].
/// Returns [`PmfixStatus::Violation`] when a check in the scenario failed;
/// the summary is still written in that case.
///
/// # Safety
/// `json` and `out_dir` must be NUL-terminated strings; `seed` must be null
/// or valid for one read; `summary` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pmfix_run_scenario_json(
    json: *const c_char,
    out_dir: *const c_char,
    seed: *const u64,
    summary: *mut *mut c_char,
) -> PmfixStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let dir = str_arg(out_dir, "out_dir")?;
        let scenario = pmfix::scenario::parse_scenario(text)?;
        let outcome = pmfix::scenario::run(&scenario, Path::new(dir), seed.as_ref().copied())?;
        if !summary.is_null() {
            let line = format!("{}: {}", outcome.command.name(), outcome.summary);
            summary.write(CString::new(line.replace('\0', " ")).unwrap_or_default().into_raw());
        }
        if outcome.violation {
            set_last_error(outcome.summary);
            Ok(PmfixStatus::Violation)
        } else {
            Ok(PmfixStatus::Ok)
        }
    })
}
