//! Cross-fitted partially linear regression.
//!
//! For `Y = theta * D + g(X) + e`, the nuisance regressions `E[Y|X]` and
//! `E[D|X]` are learned by regression forests on K-1 folds and evaluated on
//! the held-out fold. `theta` is then the slope of the outcome residuals on
//! the treatment residuals, with the sandwich-form asymptotic standard error.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::normal_cdf;
use crate::forest::{ForestParams, RegressionForest};
use crate::numeric::{self, substream_seed};
use crate::panel::PanelDataset;

/// How per-fold information is combined into a single coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThetaAggregation {
    /// One residual-on-residual regression over all cross-fitted rows.
    #[default]
    Pooled,
    /// Mean of the per-fold residual regressions.
    FoldAverage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmlConfig {
    pub n_folds: usize,
    pub n_reps: usize,
    pub learner: ForestParams,
    pub aggregation: ThetaAggregation,
    pub seed: u64,
}

impl Default for DmlConfig {
    fn default() -> Self {
        Self {
            n_folds: 5,
            n_reps: 1,
            learner: ForestParams::compact(),
            aggregation: ThetaAggregation::Pooled,
            seed: 42,
        }
    }
}

impl DmlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 2 {
            return Err(Error::Config("n_folds must be at least 2".into()));
        }
        if self.n_reps == 0 {
            return Err(Error::Config("n_reps must be at least 1".into()));
        }
        self.learner.validate()
    }
}

/// Cross-fitted residuals `Y - g(X)` and `D - m(X)` with their fold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPair {
    pub y_res: Vec<f64>,
    pub d_res: Vec<f64>,
    pub fold_of: Vec<usize>,
}

impl ResidualPair {
    pub fn new(y_res: Vec<f64>, d_res: Vec<f64>, fold_of: Vec<usize>) -> Result<Self> {
        if y_res.len() != d_res.len() || y_res.len() != fold_of.len() {
            return Err(Error::Shape("residual vectors differ in length".into()));
        }
        Ok(Self {
            y_res,
            d_res,
            fold_of,
        })
    }

    /// Residuals with every row in fold 0.
    pub fn unfolded(y_res: Vec<f64>, d_res: Vec<f64>) -> Result<Self> {
        let n = y_res.len();
        Self::new(y_res, d_res, vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.y_res.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_res.is_empty()
    }
}

/// Extra information some estimators report alongside the coefficient.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub n_obs: usize,
    /// Student-t p-value with the residual degrees of freedom (OLS, FE).
    pub t_p_value: Option<f64>,
    /// Whether the simplex search met its tolerances (System GMM).
    pub converged: Option<bool>,
    /// Successful bootstrap refits (System GMM).
    pub bootstrap_refits: Option<usize>,
}

/// Coefficient, standard error and two-sided p-value for one estimator run.
///
/// `se` and `p_value` are `None` when they cannot be computed, e.g. when no
/// bootstrap refit succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub estimator: String,
    pub coef: f64,
    pub se: Option<f64>,
    pub p_value: Option<f64>,
    pub diagnostics: Diagnostics,
}

/// Training and evaluation rows used for one fold's nuisance fits.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldTrace {
    pub fold: usize,
    pub train_rows: Vec<usize>,
    pub eval_rows: Vec<usize>,
}

/// Seeded uniform random partition of `0..n` into `k` folds whose sizes
/// differ by at most one.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || n < k {
        return Err(Error::Config(format!(
            "cannot split {n} observations into {k} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (position, &row) in order.iter().enumerate() {
        folds[row] = position % k;
    }
    Ok(folds)
}

/// Slope of the residual-on-residual regression, `sum(D~ Y~) / sum(D~^2)`.
pub fn plr_estimate(r: &ResidualPair) -> Result<f64> {
    let sdd = numeric::sum(r.d_res.iter().map(|d| d * d));
    if sdd.is_nan() || sdd <= 0.0 {
        return Err(Error::DegenerateTreatment);
    }
    let sdy = numeric::sum(r.d_res.iter().zip(&r.y_res).map(|(d, y)| d * y));
    Ok(sdy / sdd)
}

/// Mean of the per-fold residual regression slopes.
pub fn plr_estimate_fold_average(r: &ResidualPair) -> Result<f64> {
    let k = r.fold_of.iter().copied().max().map_or(0, |m| m + 1);
    let mut thetas = Vec::with_capacity(k);
    for fold in 0..k {
        let (y, d): (Vec<f64>, Vec<f64>) = r
            .fold_of
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| (r.y_res[i], r.d_res[i]))
            .unzip();
        if y.is_empty() {
            continue;
        }
        thetas.push(plr_estimate(&ResidualPair::unfolded(y, d)?)?);
    }
    if thetas.is_empty() {
        return Err(Error::DegenerateTreatment);
    }
    Ok(numeric::mean(&thetas))
}

/// Asymptotic standard error
/// `sqrt( mean(e^2 D~^2) / mean(D~^2)^2 / n )` with `e = Y~ - theta D~`.
pub fn plr_stderr(r: &ResidualPair, theta: f64) -> Result<f64> {
    let n = r.len();
    if n < 2 {
        return Err(Error::Data(format!(
            "need at least 2 residual pairs, got {n}"
        )));
    }
    let nf = n as f64;
    let mean_dd = numeric::sum(r.d_res.iter().map(|d| d * d)) / nf;
    if mean_dd.is_nan() || mean_dd <= 0.0 {
        return Err(Error::DegenerateTreatment);
    }
    let mean_score_sq = numeric::sum(r.d_res.iter().zip(&r.y_res).map(|(d, y)| {
        let e = y - theta * d;
        e * e * d * d
    })) / nf;
    Ok((mean_score_sq / (mean_dd * mean_dd) / nf).sqrt())
}

/// Two-sided standard-normal p-value of `coef / se`.
///
/// With `se == 0` the statistic is infinite unless `coef == 0`: the result is
/// `0` for a nonzero coefficient and `1` otherwise.
pub fn p_value(coef: f64, se: f64) -> f64 {
    if se == 0.0 {
        return if coef == 0.0 { 1.0 } else { 0.0 };
    }
    let z = (coef / se).abs();
    (2.0 * (1.0 - normal_cdf(z))).clamp(0.0, 1.0)
}

struct PlrInputs {
    y: Vec<f64>,
    d: Vec<f64>,
    x: DMatrix<f64>,
}

fn gather(
    ds: &PanelDataset,
    outcome: &str,
    treatment: &str,
    controls: &[&str],
) -> Result<PlrInputs> {
    if controls.is_empty() {
        return Err(Error::Config(
            "at least one control column is required".into(),
        ));
    }
    let y = ds.complete_column(outcome)?;
    let d = ds.complete_column(treatment)?;
    let cols = controls
        .iter()
        .map(|c| ds.complete_column(c))
        .collect::<Result<Vec<_>>>()?;
    let x = DMatrix::from_fn(ds.n_rows(), cols.len(), |i, j| cols[j][i]);
    Ok(PlrInputs { y, d, x })
}

fn rows_of(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

fn cross_fit_once(
    inputs: &PlrInputs,
    cfg: &DmlConfig,
    rep: usize,
) -> Result<(ResidualPair, Vec<FoldTrace>)> {
    let n = inputs.y.len();
    let fold_seed = substream_seed(cfg.seed, 2 * rep as u64);
    let learner_seed = substream_seed(cfg.seed, 2 * rep as u64 + 1);
    let folds = make_folds(n, cfg.n_folds, fold_seed)?;

    let per_fold = (0..cfg.n_folds)
        .into_par_iter()
        .map(|fold| {
            let (eval_rows, train_rows): (Vec<usize>, Vec<usize>) =
                (0..n).partition(|&i| folds[i] == fold);
            if train_rows.len() < 2 {
                return Err(Error::Fit(format!(
                    "fold {fold} leaves only {} training rows",
                    train_rows.len()
                )));
            }
            let x_train = rows_of(&inputs.x, &train_rows);
            let x_eval = rows_of(&inputs.x, &eval_rows);
            let y_train: Vec<f64> = train_rows.iter().map(|&i| inputs.y[i]).collect();
            let d_train: Vec<f64> = train_rows.iter().map(|&i| inputs.d[i]).collect();

            let outcome_params = cfg
                .learner
                .clone()
                .with_seed(substream_seed(learner_seed, 2 * fold as u64));
            let treatment_params = cfg
                .learner
                .clone()
                .with_seed(substream_seed(learner_seed, 2 * fold as u64 + 1));
            let g_hat =
                RegressionForest::fit(&x_train, &y_train, &outcome_params)?.predict(&x_eval)?;
            let m_hat =
                RegressionForest::fit(&x_train, &d_train, &treatment_params)?.predict(&x_eval)?;
            Ok((
                FoldTrace {
                    fold,
                    train_rows,
                    eval_rows,
                },
                g_hat,
                m_hat,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut y_res = vec![f64::NAN; n];
    let mut d_res = vec![f64::NAN; n];
    let mut traces = Vec::with_capacity(cfg.n_folds);
    for (trace, g_hat, m_hat) in per_fold {
        for (k, &row) in trace.eval_rows.iter().enumerate() {
            y_res[row] = inputs.y[row] - g_hat[k];
            d_res[row] = inputs.d[row] - m_hat[k];
        }
        traces.push(trace);
    }
    Ok((ResidualPair::new(y_res, d_res, folds)?, traces))
}

/// Cross-fitted residuals for the first repetition of `cfg`.
pub fn cross_fit_residuals(
    ds: &PanelDataset,
    outcome: &str,
    treatment: &str,
    controls: &[&str],
    cfg: &DmlConfig,
) -> Result<ResidualPair> {
    cross_fit_traced(ds, outcome, treatment, controls, cfg).map(|(r, _)| r)
}

/// As [`cross_fit_residuals`], also returning the row sets each fold's
/// forests were trained and evaluated on.
pub fn cross_fit_traced(
    ds: &PanelDataset,
    outcome: &str,
    treatment: &str,
    controls: &[&str],
    cfg: &DmlConfig,
) -> Result<(ResidualPair, Vec<FoldTrace>)> {
    cfg.validate()?;
    let inputs = gather(ds, outcome, treatment, controls)?;
    cross_fit_once(&inputs, cfg, 0)
}

/// Full cross-fitted PLR estimate of the coefficient on `treatment`.
///
/// With several repetitions the reported coefficient is the (lower) median
/// across repetitions, paired with that repetition's standard error.
pub fn dml_plr(
    ds: &PanelDataset,
    outcome: &str,
    treatment: &str,
    controls: &[&str],
    cfg: &DmlConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    let inputs = gather(ds, outcome, treatment, controls)?;
    let mut fits = (0..cfg.n_reps)
        .map(|rep| {
            let (r, _) = cross_fit_once(&inputs, cfg, rep)?;
            let theta = match cfg.aggregation {
                ThetaAggregation::Pooled => plr_estimate(&r)?,
                ThetaAggregation::FoldAverage => plr_estimate_fold_average(&r)?,
            };
            let se = plr_stderr(&r, theta)?;
            Ok((theta, se))
        })
        .collect::<Result<Vec<_>>>()?;
    fits.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (coef, se) = fits[(fits.len() - 1) / 2];
    Ok(EstimateResult {
        estimator: "DML-PLR".into(),
        coef,
        se: Some(se),
        p_value: Some(p_value(coef, se)),
        diagnostics: Diagnostics {
            n_obs: inputs.y.len(),
            ..Diagnostics::default()
        },
    })
}
