//! C ABI for the `pcredml` estimators and Monte Carlo harness.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns a
//! [`PcdStatus`]; the message for the most recent failure on the calling
//! thread is available from [`pcd_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pcredml::cli::prepare_panel;
use pcredml::estimators::{ConfiguredEstimator, Estimator, EstimatorSettings, PanelEstimator};
use pcredml::montecarlo::{run_monte_carlo, simulate_panel, DgpParams, SimulationReport};
use pcredml::panel::{ColumnSchema, PanelDataset};
use pcredml::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Schema = 4,
    Data = 5,
    Fit = 6,
    Degenerate = 7,
    Panic = 8,
}

/// Estimator selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcdEstimator {
    Ols = 0,
    FixedEffects = 1,
    SystemGmm = 2,
    CreDml = 3,
    PCreDml = 4,
}

impl From<PcdEstimator> for Estimator {
    fn from(e: PcdEstimator) -> Self {
        match e {
            PcdEstimator::Ols => Estimator::Ols,
            PcdEstimator::FixedEffects => Estimator::FixedEffects,
            PcdEstimator::SystemGmm => Estimator::SystemGmm,
            PcdEstimator::CreDml => Estimator::CreDml,
            PcdEstimator::PCreDml => Estimator::PCreDml,
        }
    }
}

/// Point estimate with inference. `se` and `p_value` are NaN when the
/// estimator produced none.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcdEstimate {
    pub coef: f64,
    pub se: f64,
    pub p_value: f64,
    pub n_obs: usize,
}

/// Bias, variance and MSE of one estimator across replications.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcdSummary {
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub n_draws: usize,
    pub n_failures: usize,
}

/// Opaque panel dataset.
pub struct PcdPanel(PanelDataset);

/// Opaque Monte Carlo report.
pub struct PcdReport(SimulationReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> PcdStatus {
    match e {
        Error::Io { .. } | Error::Csv { .. } => PcdStatus::Io,
        Error::MissingColumn(_) | Error::Schema(_) | Error::ColumnExists(_) => PcdStatus::Schema,
        Error::Config(_) | Error::Shape(_) => PcdStatus::InvalidArgument,
        Error::DegenerateTreatment | Error::Collinear { .. } | Error::NoWithinVariation => {
            PcdStatus::Degenerate
        }
        Error::Fit(_) | Error::Optimizer(_) => PcdStatus::Fit,
        Error::Integrity(_) | Error::Imputation(_) | Error::Incomplete(_) | Error::Data(_) => {
            PcdStatus::Data
        }
    }
}

/// Runs `f`, recording errors and converting panics into [`PcdStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), (PcdStatus, String)>) -> PcdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PcdStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PcdStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (PcdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PcdStatus, String) {
    (PcdStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn pcd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pcd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a panel CSV with the default column names, builds the lag and
/// entity-mean columns the estimators need and stores a new handle in `out`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pcd_panel_load_csv(
    path: *const c_char,
    out: *mut *mut PcdPanel,
) -> PcdStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| {
            (
                PcdStatus::InvalidArgument,
                "path is not valid UTF-8".to_string(),
            )
        })?;
        let ds = prepare_panel(Path::new(path), &ColumnSchema::default(), None).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PcdPanel(ds)));
        Ok(())
    })
}

/// Simulates replication `replication` of the default data-generating
/// process under `seed`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pcd_panel_simulate(
    seed: u64,
    replication: usize,
    out: *mut *mut PcdPanel,
) -> PcdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = DgpParams {
            seed,
            ..DgpParams::default()
        };
        let ds = simulate_panel(&params, replication).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PcdPanel(ds)));
        Ok(())
    })
}

/// Releases a panel handle; null is ignored.
///
/// # Safety
/// `panel` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pcd_panel_free(panel: *mut PcdPanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `panel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcd_panel_nrows(panel: *const PcdPanel) -> usize {
    panel.as_ref().map_or(0, |p| p.0.n_rows())
}

/// Number of entities, or 0 for a null handle.
///
/// # Safety
/// `panel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcd_panel_nentities(panel: *const PcdPanel) -> usize {
    panel.as_ref().map_or(0, |p| p.0.n_entities())
}

/// Fits one estimator with default settings seeded by `seed`.
///
/// # Safety
/// `panel` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pcd_estimate(
    panel: *const PcdPanel,
    estimator: PcdEstimator,
    seed: u64,
    out: *mut PcdEstimate,
) -> PcdStatus {
    guard(|| {
        let panel = panel.as_ref().ok_or_else(|| null("panel"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let settings = EstimatorSettings::default().reseeded(seed);
        let r = Estimator::from(estimator)
            .run(&panel.0, &settings)
            .map_err(lib_err)?;
        *out = PcdEstimate {
            coef: r.coef,
            se: r.se.unwrap_or(f64::NAN),
            p_value: r.p_value.unwrap_or(f64::NAN),
            n_obs: r.diagnostics.n_obs,
        };
        Ok(())
    })
}

/// Runs `n_sims` replications of the default data-generating process with
/// every estimator.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pcd_monte_carlo(
    seed: u64,
    n_sims: usize,
    out: *mut *mut PcdReport,
) -> PcdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = DgpParams {
            seed,
            ..DgpParams::default()
        };
        let estimators: Vec<ConfiguredEstimator> = Estimator::ALL
            .into_iter()
            .map(|kind| ConfiguredEstimator {
                kind,
                settings: EstimatorSettings::default(),
            })
            .collect();
        let refs: Vec<&dyn PanelEstimator> = estimators
            .iter()
            .map(|e| e as &dyn PanelEstimator)
            .collect();
        let report = run_monte_carlo(&params, n_sims, &refs).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PcdReport(report)));
        Ok(())
    })
}

/// Summary of one estimator. Fails with [`PcdStatus::Fit`] when every
/// replication of that estimator failed.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pcd_report_summary(
    report: *const PcdReport,
    estimator: PcdEstimator,
    out: *mut PcdSummary,
) -> PcdStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let label = Estimator::from(estimator).label();
        let draws = report
            .0
            .get(label)
            .ok_or_else(|| (PcdStatus::InvalidArgument, format!("{label} was not run")))?;
        let s = draws
            .summary
            .ok_or_else(|| (PcdStatus::Fit, format!("{label}: every replication failed")))?;
        *out = PcdSummary {
            bias: s.bias,
            variance: s.variance,
            mse: s.mse,
            n_draws: draws.draws.len(),
            n_failures: draws.failures,
        };
        Ok(())
    })
}

/// Releases a report handle; null is ignored.
///
/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pcd_report_free(report: *mut PcdReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
