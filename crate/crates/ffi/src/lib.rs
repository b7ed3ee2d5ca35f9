//! C ABI for the ctbench engine.
//!
//! Matrices are row-major `double` buffers, one row per asset. Matrices
//! passed to a model are placed on an hourly grid starting at the Unix
//! epoch; the `start` or `tau` arguments give the grid position of the
//! first column. Every function returns a [`CtbStatus`]; on failure the
//! message is available from [`ctb_last_error`] on the same thread.

use chrono::{DateTime, Duration, Utc};
use ctbench::bench::{parse_config, run, RunOptions};
use ctbench::market_data::{hourly_timestamps, ReturnMatrix};
use ctbench::metrics::{risk_metrics, spearman, trading_metrics};
use ctbench::strategies::{simulate, EquityCurve, Strategy, StrategyError, WeightMatrix};
use ctbench::tasks::{fit_ou, s_score, stat_arb_weights, OuError, OuParams};
use ctbench::tsg::{ModelSpec, TsgError, TsgModelHandle};
use ndarray::Array2;
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    NotTrained = 4,
    Unsupported = 5,
    FitFailed = 6,
    Io = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("no interior nul"));
}

fn fail(status: CtbStatus, msg: impl Into<String>) -> CtbStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into [`CtbStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), (CtbStatus, String)>) -> CtbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CtbStatus::Ok
        }
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(CtbStatus::Panic, "panic inside ctbench"),
    }
}

type FfiResult<T> = Result<T, (CtbStatus, String)>;

fn tsg_status(e: TsgError) -> (CtbStatus, String) {
    let status = match &e {
        TsgError::NotTrained(_) => CtbStatus::NotTrained,
        TsgError::ModeUnsupported { .. } => CtbStatus::Unsupported,
        TsgError::ShapeMismatch(_) => CtbStatus::ShapeMismatch,
        TsgError::FitFailed(_) => CtbStatus::FitFailed,
        TsgError::InvalidConfig(_) => CtbStatus::InvalidArgument,
        TsgError::Bundle(_) | TsgError::External { .. } => CtbStatus::Io,
        TsgError::Data(_) => CtbStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn strategy_status(e: StrategyError) -> (CtbStatus, String) {
    let status = match &e {
        StrategyError::ShapeMismatch(_) => CtbStatus::ShapeMismatch,
        StrategyError::Io(_) | StrategyError::Csv(_) => CtbStatus::Io,
        _ => CtbStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn invalid(msg: impl Into<String>) -> (CtbStatus, String) {
    (CtbStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> (CtbStatus, String) {
    (CtbStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `ptr` must be null or point to `len` readable doubles.
unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// # Safety
/// `ptr` must be null or point to `len` writable doubles.
unsafe fn slice_mut<'a>(ptr: *mut f64, len: usize, what: &str) -> FfiResult<&'a mut [f64]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

/// # Safety
/// `ptr` must be null or a nul-terminated string.
unsafe fn string(ptr: *const c_char, what: &str) -> FfiResult<String> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(str::to_string)
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

fn grid_matrix(values: &[f64], n: usize, len: usize, start: usize) -> FfiResult<ReturnMatrix> {
    let total = n.checked_mul(len).ok_or_else(|| invalid("n * len overflows"))?;
    if values.len() != total {
        return Err((CtbStatus::ShapeMismatch, format!("expected {total} values")));
    }
    let arr = Array2::from_shape_vec((n, len), values.to_vec()).map_err(|e| invalid(e.to_string()))?;
    let epoch = DateTime::<Utc>::from_timestamp(0, 0).expect("epoch");
    let assets = (0..n).map(|i| format!("A{i}")).collect();
    ReturnMatrix::new(
        assets,
        hourly_timestamps(epoch + Duration::hours(start as i64), len),
        arr,
    )
    .map_err(|e| invalid(e.to_string()))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next ctbench call on this thread.
#[no_mangle]
pub extern "C" fn ctb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Engine version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ctb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque generator handle.
pub struct CtbModel {
    handle: TsgModelHandle,
}

/// Creates a model from a JSON spec such as `{"kind":"pca","components":"ev90"}`.
///
/// # Safety
/// `spec_json` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ctb_model_new(spec_json: *const c_char, seed: u64, out: *mut *mut CtbModel) -> CtbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = string(spec_json, "spec_json")?;
        let spec: ModelSpec = serde_json::from_str(&text).map_err(|e| invalid(format!("bad model spec: {e}")))?;
        let handle = TsgModelHandle::from_spec(&spec, seed).map_err(tsg_status)?;
        *out = Box::into_raw(Box::new(CtbModel { handle }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`ctb_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ctb_model_free(model: *mut CtbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Fits on an `n x len` training window ending just before grid hour `tau`.
///
/// # Safety
/// `model` must be live; `train` must hold `n * len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ctb_model_fit(
    model: *mut CtbModel,
    train: *const f64,
    n: usize,
    len: usize,
    tau: usize,
) -> CtbStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        if tau < len {
            return Err(invalid(format!("tau {tau} is before the end of a {len}-hour window")));
        }
        let values = slice(train, n.saturating_mul(len), "train")?;
        let train = grid_matrix(values, n, len, tau - len)?;
        m.handle.fit(&train, tau).map_err(tsg_status)
    })
}

/// Writes an `n x len` synthetic window to `out`.
///
/// # Safety
/// `model` must be live; `out` must hold `n * len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ctb_model_generate(
    model: *const CtbModel,
    n: usize,
    len: usize,
    seed: u64,
    out: *mut f64,
) -> CtbStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let out = slice_mut(out, n.saturating_mul(len), "out")?;
        let r = m.handle.generate(n, len, seed).map_err(tsg_status)?;
        out.copy_from_slice(r.values().as_standard_layout().as_slice().expect("standard layout"));
        Ok(())
    })
}

/// Reconstructs an `n x len` window whose first column is grid hour `start`.
///
/// # Safety
/// `model` must be live; `input` and `out` must hold `n * len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ctb_model_reconstruct(
    model: *const CtbModel,
    input: *const f64,
    n: usize,
    len: usize,
    start: usize,
    out: *mut f64,
) -> CtbStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let values = slice(input, n.saturating_mul(len), "input")?;
        let out = slice_mut(out, n.saturating_mul(len), "out")?;
        let r = m
            .handle
            .reconstruct(&grid_matrix(values, n, len, start)?)
            .map_err(tsg_status)?;
        out.copy_from_slice(r.values().as_standard_layout().as_slice().expect("standard layout"));
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CtbOuParams {
    pub theta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub sigma_eq: f64,
    pub a: f64,
    pub b: f64,
    pub residual_count: usize,
}

impl From<OuParams> for CtbOuParams {
    fn from(p: OuParams) -> Self {
        Self {
            theta: p.theta,
            mu: p.mu,
            sigma: p.sigma,
            sigma_eq: p.sigma_eq,
            a: p.a,
            b: p.b,
            residual_count: p.residual_count,
        }
    }
}

/// Fits OU parameters to a residual series. Non-mean-reverting and
/// degenerate series return [`CtbStatus::FitFailed`].
///
/// # Safety
/// `series` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctb_fit_ou(series: *const f64, len: usize, out: *mut CtbOuParams) -> CtbStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let xs = slice(series, len, "series")?;
        let p = fit_ou(xs).map_err(|e| match e {
            OuError::TooShort { .. } | OuError::NonFinite => invalid(e.to_string()),
            _ => (CtbStatus::FitFailed, e.to_string()),
        })?;
        *out = p.into();
        Ok(())
    })
}

/// # Safety
/// `params` must be readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctb_s_score(eps: f64, params: *const CtbOuParams, out: *mut f64) -> CtbStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if !(p.sigma_eq > 0.0) {
            return Err(invalid("sigma_eq must be > 0"));
        }
        let params = OuParams {
            theta: p.theta,
            mu: p.mu,
            sigma: p.sigma,
            sigma_eq: p.sigma_eq,
            a: p.a,
            b: p.b,
            residual_count: p.residual_count,
        };
        *out = s_score(eps, &params);
        Ok(())
    })
}

/// # Safety
/// `scores` and `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ctb_stat_arb_weights(scores: *const f64, n: usize, gamma: f64, out: *mut f64) -> CtbStatus {
    guard(|| {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma must be > 0"));
        }
        let s = slice(scores, n, "scores")?;
        let out = slice_mut(out, n, "out")?;
        out.copy_from_slice(&stat_arb_weights(s, gamma));
        Ok(())
    })
}

/// One cross-section of weights for `strategy` (`half_ls`, `csm`, `lotq`
/// or `pw`).
///
/// # Safety
/// `strategy` must be a nul-terminated string; `predictions` and `out`
/// must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ctb_strategy_weights(
    strategy: *const c_char,
    predictions: *const f64,
    n: usize,
    out: *mut f64,
) -> CtbStatus {
    guard(|| {
        let name = string(strategy, "strategy")?;
        let strategy: Strategy = name.parse().map_err(strategy_status)?;
        let p = slice(predictions, n, "predictions")?;
        let out = slice_mut(out, n, "out")?;
        out.copy_from_slice(&strategy.weights(p).map_err(strategy_status)?);
        Ok(())
    })
}

/// Simulates `n x s` weights against `n x s` log-returns; writes the `s`
/// equity values `V_1..V_s` to `equity_out`.
///
/// # Safety
/// `weights` and `returns` must hold `n * s` doubles, `equity_out` `s`.
#[no_mangle]
pub unsafe extern "C" fn ctb_simulate(
    weights: *const f64,
    returns: *const f64,
    n: usize,
    s: usize,
    fee: f64,
    v0: f64,
    equity_out: *mut f64,
) -> CtbStatus {
    guard(|| {
        let total = n.saturating_mul(s);
        let r = grid_matrix(slice(returns, total, "returns")?, n, s, 0)?;
        let w = Array2::from_shape_vec((n, s), slice(weights, total, "weights")?.to_vec())
            .map_err(|e| invalid(e.to_string()))?;
        let book = WeightMatrix::new(r.assets().to_vec(), r.timestamps().to_vec(), w).map_err(strategy_status)?;
        let curve = simulate(&book, &r, fee, v0).map_err(strategy_status)?;
        slice_mut(equity_out, s, "equity_out")?.copy_from_slice(&curve.equity);
        Ok(())
    })
}

/// Trading and risk metrics of one equity path. Undefined values are NaN;
/// an undefined IR-style ratio with a one-sided sign is +/-inf.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CtbCurveMetrics {
    pub cagr: f64,
    pub sharpe: f64,
    pub mdd: f64,
    pub var95: f64,
    pub es95: f64,
}

/// # Safety
/// `equity` must hold `s` doubles (`V_1..V_s`); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctb_curve_metrics(
    equity: *const f64,
    s: usize,
    v0: f64,
    out: *mut CtbCurveMetrics,
) -> CtbStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let eq = slice(equity, s, "equity")?.to_vec();
        let epoch = DateTime::<Utc>::from_timestamp(0, 0).expect("epoch");
        let curve = EquityCurve::from_equity(v0, 0.0, hourly_timestamps(epoch, s), eq, vec![0.0; s])
            .map_err(strategy_status)?;
        let t = trading_metrics(&curve).map_err(|e| invalid(e.to_string()))?;
        let r = risk_metrics(&curve);
        *out = CtbCurveMetrics {
            cagr: t.cagr,
            sharpe: t.sharpe,
            mdd: r.mdd,
            var95: r.var95,
            es95: r.es95,
        };
        Ok(())
    })
}

/// Spearman correlation; NaN when either side is constant.
///
/// # Safety
/// `x` and `y` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctb_spearman(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> CtbStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = spearman(slice(x, n, "x")?, slice(y, n, "y")?).unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Runs a benchmark config. `out_dir` may be null to use the config's
/// directory and `jobs` 0 for the default pool size. `all_ok` receives 1
/// when every cell succeeded.
///
/// # Safety
/// `config_path` must be a nul-terminated string, `out_dir` null or one,
/// `all_ok` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ctb_run_config(
    config_path: *const c_char,
    out_dir: *const c_char,
    jobs: usize,
    all_ok: *mut c_int,
) -> CtbStatus {
    guard(|| {
        let path = string(config_path, "config_path")?;
        let mut cfg = parse_config(&path).map_err(|e| invalid(e.to_string()))?;
        if !out_dir.is_null() {
            cfg.output_dir = PathBuf::from(string(out_dir, "out_dir")?);
        }
        let options = RunOptions {
            jobs: (jobs > 0).then_some(jobs),
        };
        let manifest = run(&cfg, options).map_err(|e| (CtbStatus::Io, e.to_string()))?;
        if let Some(flag) = all_ok.as_mut() {
            *flag = manifest.success() as c_int;
        }
        Ok(())
    })
}
