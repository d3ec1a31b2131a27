//! The five panel estimators and the column sets each one uses.
//!
//! | Estimator     | Regressors / controls                                                    |
//! |---------------|--------------------------------------------------------------------------|
//! | OLS           | const, treatment, controls, proxy lags                                   |
//! | Fixed Effects | treatment, controls, proxy lags (entity-demeaned)                        |
//! | System GMM    | outcome lag, treatment, controls, proxy lags; instruments from lags 2-3  |
//! | CRE-DML       | controls, outcome lag, treatment mean, outcome mean                      |
//! | P-CRE-DML     | CRE-DML controls plus proxy lags and proxy means                         |

mod gmm;
mod linear;
mod normal;
mod simplex;

use std::fmt;
use std::str::FromStr;

use crate::dml::{dml_plr, DmlConfig, EstimateResult};
use crate::error::{Error, Result};
use crate::panel::{ColumnSchema, PanelDataset};

pub use gmm::{gmm_objective, run_system_gmm, GmmConfig};
pub use linear::{least_squares, run_fixed_effects, run_ols, within_transform, LeastSquares};
pub use normal::normal_cdf;
pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};

/// Base variables of a model; derived column names follow the
/// `<name>_lag` / `<name>_mean` convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelColumns {
    pub outcome: String,
    pub treatment: String,
    pub controls: Vec<String>,
    pub proxies: Vec<String>,
}

impl Default for ModelColumns {
    fn default() -> Self {
        Self::from(&ColumnSchema::default())
    }
}

impl From<&ColumnSchema> for ModelColumns {
    fn from(s: &ColumnSchema) -> Self {
        Self {
            outcome: s.outcome.clone(),
            treatment: s.treatment.clone(),
            controls: s.controls.clone(),
            proxies: s.proxies.clone(),
        }
    }
}

pub fn lag_name(col: &str) -> String {
    format!("{col}_lag")
}

pub fn mean_name(col: &str) -> String {
    format!("{col}_mean")
}

impl ModelColumns {
    pub fn outcome_lag(&self) -> String {
        lag_name(&self.outcome)
    }

    pub fn proxy_lags(&self) -> Vec<String> {
        self.proxies.iter().map(|p| lag_name(p)).collect()
    }

    pub fn proxy_means(&self) -> Vec<String> {
        self.proxies.iter().map(|p| mean_name(p)).collect()
    }

    /// Treatment, controls and proxy lags (OLS and FE).
    pub fn linear_regressors(&self) -> Vec<String> {
        std::iter::once(self.treatment.clone())
            .chain(self.controls.iter().cloned())
            .chain(self.proxy_lags())
            .collect()
    }

    /// Outcome lag, treatment, controls, proxy lags; the treatment is at
    /// index 1.
    pub fn gmm_regressors(&self) -> Vec<String> {
        [self.outcome_lag(), self.treatment.clone()]
            .into_iter()
            .chain(self.controls.iter().cloned())
            .chain(self.proxy_lags())
            .collect()
    }

    /// Controls, outcome lag and the entity means of treatment and outcome.
    pub fn cre_controls(&self) -> Vec<String> {
        self.controls
            .iter()
            .cloned()
            .chain([
                self.outcome_lag(),
                mean_name(&self.treatment),
                mean_name(&self.outcome),
            ])
            .collect()
    }

    /// CRE controls plus the lagged proxies and their entity means.
    pub fn p_cre_controls(&self) -> Vec<String> {
        self.controls
            .iter()
            .cloned()
            .chain([self.outcome_lag()])
            .chain(self.proxy_lags())
            .chain([mean_name(&self.treatment), mean_name(&self.outcome)])
            .chain(self.proxy_means())
            .collect()
    }
}

/// Fails with every absent column named at once.
pub(crate) fn require_columns<'a>(
    ds: &PanelDataset,
    names: impl IntoIterator<Item = &'a String>,
) -> Result<()> {
    let missing: Vec<&str> = names
        .into_iter()
        .filter(|n| !ds.has_column(n))
        .map(String::as_str)
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingColumn(missing.join(", ")))
    }
}

fn run_named_dml(
    label: &str,
    ds: &PanelDataset,
    cols: &ModelColumns,
    controls: Vec<String>,
    cfg: &DmlConfig,
) -> Result<EstimateResult> {
    require_columns(ds, controls.iter().chain([&cols.outcome, &cols.treatment]))?;
    let refs: Vec<&str> = controls.iter().map(String::as_str).collect();
    let mut result = dml_plr(ds, &cols.outcome, &cols.treatment, &refs, cfg)?;
    result.estimator = label.to_string();
    Ok(result)
}

/// Cross-fitted PLR with entity means of treatment and outcome as controls.
pub fn run_cre_dml(
    ds: &PanelDataset,
    cols: &ModelColumns,
    cfg: &DmlConfig,
) -> Result<EstimateResult> {
    run_named_dml("CRE-DML", ds, cols, cols.cre_controls(), cfg)
}

/// CRE-DML with the lagged proxies and their entity means added.
pub fn run_p_cre_dml(
    ds: &PanelDataset,
    cols: &ModelColumns,
    cfg: &DmlConfig,
) -> Result<EstimateResult> {
    run_named_dml("P-CRE-DML", ds, cols, cols.p_cre_controls(), cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Ols,
    FixedEffects,
    SystemGmm,
    CreDml,
    PCreDml,
}

impl Estimator {
    /// All estimators in reporting order.
    pub const ALL: [Estimator; 5] = [
        Estimator::Ols,
        Estimator::FixedEffects,
        Estimator::SystemGmm,
        Estimator::CreDml,
        Estimator::PCreDml,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Estimator::Ols => "OLS",
            Estimator::FixedEffects => "Fixed Effects",
            Estimator::SystemGmm => "System GMM",
            Estimator::CreDml => "CRE-DML",
            Estimator::PCreDml => "P-CRE-DML",
        }
    }

    pub fn run(self, ds: &PanelDataset, settings: &EstimatorSettings) -> Result<EstimateResult> {
        let cols = &settings.columns;
        match self {
            Estimator::Ols => run_ols(ds, cols),
            Estimator::FixedEffects => run_fixed_effects(ds, cols),
            Estimator::SystemGmm => run_system_gmm(ds, cols, &settings.gmm),
            Estimator::CreDml => run_cre_dml(ds, cols, &settings.dml),
            Estimator::PCreDml => run_p_cre_dml(ds, cols, &settings.dml),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match key.as_str() {
            "ols" => Ok(Estimator::Ols),
            "fe" | "fixedeffects" => Ok(Estimator::FixedEffects),
            "gmm" | "systemgmm" => Ok(Estimator::SystemGmm),
            "cre" | "credml" => Ok(Estimator::CreDml),
            "pcre" | "pcredml" => Ok(Estimator::PCreDml),
            _ => Err(Error::Config(format!("unknown estimator `{s}`"))),
        }
    }
}

/// Parses a comma-separated estimator list; `all` selects every estimator.
pub fn parse_estimator_list(s: &str) -> Result<Vec<Estimator>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Estimator::ALL.to_vec());
    }
    let mut out: Vec<Estimator> = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let e: Estimator = part.parse()?;
        if !out.contains(&e) {
            out.push(e);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no estimators selected".into()));
    }
    Ok(out)
}

/// Everything an estimator run needs besides the data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimatorSettings {
    pub columns: ModelColumns,
    pub dml: DmlConfig,
    pub gmm: GmmConfig,
}

impl EstimatorSettings {
    /// Copy with the DML and bootstrap seeds replaced by substreams of `seed`.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut out = self.clone();
        out.dml.seed = crate::numeric::substream_seed(seed, 0);
        out.gmm.seed = crate::numeric::substream_seed(seed, 1);
        out
    }
}

/// Anything that produces a treatment-effect estimate from a panel. The
/// Monte Carlo driver accepts trait objects so custom estimators can be
/// compared alongside the built-in ones.
pub trait PanelEstimator: Send + Sync {
    fn label(&self) -> String;
    fn estimate(&self, ds: &PanelDataset, seed: u64) -> Result<EstimateResult>;
}

/// A built-in estimator bound to its settings.
#[derive(Debug, Clone)]
pub struct ConfiguredEstimator {
    pub kind: Estimator,
    pub settings: EstimatorSettings,
}

impl PanelEstimator for ConfiguredEstimator {
    fn label(&self) -> String {
        self.kind.label().to_string()
    }

    fn estimate(&self, ds: &PanelDataset, seed: u64) -> Result<EstimateResult> {
        self.kind.run(ds, &self.settings.reseeded(seed))
    }
}
