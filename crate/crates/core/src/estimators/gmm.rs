//! Moment-based dynamic panel estimator.
//!
//! The objective is the mean of the squared sample moments `Z' e` with
//! `e = y - X b`, minimized by Nelder-Mead from the zero vector without any
//! weighting matrix. Regressors are the lagged outcome, the treatment, the
//! controls and the lagged proxies; instruments are the second lag of the
//! outcome and the second and third lags of the treatment. The standard error
//! is the spread of the treatment coefficient over row-resampled refits.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dml::{p_value, Diagnostics, EstimateResult};
use crate::error::{Error, Result};
use crate::numeric::{self, substream_seed};
use crate::panel::PanelDataset;

use super::simplex::{nelder_mead, SimplexOptions};
use super::{require_columns, ModelColumns};

#[derive(Debug, Clone, PartialEq)]
pub struct GmmConfig {
    pub n_boot: usize,
    pub seed: u64,
    pub simplex: SimplexOptions,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self {
            n_boot: 10,
            seed: 42,
            simplex: SimplexOptions::default(),
        }
    }
}

/// Mean over instruments of the squared moment `sum_i Z_ij e_i`.
pub fn gmm_objective(params: &[f64], y: &[f64], x: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<f64> {
    let n = y.len();
    if x.nrows() != n || z.nrows() != n || x.ncols() != params.len() || z.ncols() == 0 {
        return Err(Error::Shape(format!(
            "y: {n}, X: {}x{}, Z: {}x{}, params: {}",
            x.nrows(),
            x.ncols(),
            z.nrows(),
            z.ncols(),
            params.len()
        )));
    }
    Ok(objective_unchecked(params, y, x, z))
}

fn objective_unchecked(params: &[f64], y: &[f64], x: &DMatrix<f64>, z: &DMatrix<f64>) -> f64 {
    let errors: Vec<f64> = (0..y.len())
        .map(|i| {
            y[i] - (0..params.len())
                .map(|j| x[(i, j)] * params[j])
                .sum::<f64>()
        })
        .collect();
    let q = z.ncols();
    let total: f64 = (0..q)
        .map(|j| {
            let m: f64 = errors.iter().enumerate().map(|(i, e)| z[(i, j)] * e).sum();
            m * m
        })
        .sum();
    total / q as f64
}

struct MomentData {
    y: Vec<f64>,
    x: DMatrix<f64>,
    z: DMatrix<f64>,
}

impl MomentData {
    fn resample(&self, rows: &[usize]) -> Self {
        Self {
            y: rows.iter().map(|&r| self.y[r]).collect(),
            x: DMatrix::from_fn(rows.len(), self.x.ncols(), |i, j| self.x[(rows[i], j)]),
            z: DMatrix::from_fn(rows.len(), self.z.ncols(), |i, j| self.z[(rows[i], j)]),
        }
    }

    fn minimize(&self, opts: &SimplexOptions) -> Result<(Vec<f64>, bool)> {
        let x0 = vec![0.0; self.x.ncols()];
        let r = nelder_mead(
            |p| objective_unchecked(p, &self.y, &self.x, &self.z),
            &x0,
            opts,
        )?;
        Ok((r.x, r.converged))
    }
}

/// Names of the lag-2/lag-3 instrument columns built for `cols`.
fn instrument_names(cols: &ModelColumns) -> [String; 4] {
    [
        format!("{}_lag2", cols.outcome),
        format!("{}_lag2", cols.treatment),
        format!("{}_lag3", cols.treatment),
        format!("{}_lag3", cols.outcome),
    ]
}

pub fn run_system_gmm(
    ds: &PanelDataset,
    cols: &ModelColumns,
    cfg: &GmmConfig,
) -> Result<EstimateResult> {
    let regressors = cols.gmm_regressors();
    require_columns(ds, regressors.iter().chain([&cols.outcome]))?;
    let [y_lag2, d_lag2, d_lag3, y_lag3] = instrument_names(cols);
    let prepared = ds
        .add_lag(&cols.treatment, 2, &d_lag2)?
        .add_lag(&cols.treatment, 3, &d_lag3)?
        .add_lag(&cols.outcome, 2, &y_lag2)?
        .add_lag(&cols.outcome, 3, &y_lag3)?;
    let instruments = [y_lag2.clone(), d_lag2.clone(), d_lag3.clone()];
    let needed: Vec<&str> = std::iter::once(cols.outcome.as_str())
        .chain(regressors.iter().map(String::as_str))
        .chain(instruments.iter().map(String::as_str))
        .chain([y_lag3.as_str()])
        .collect();
    let sample = prepared.drop_missing_rows(&needed)?;
    if sample.is_empty() {
        return Err(Error::Data(
            "no complete rows remain after building lag-2 and lag-3 instruments".into(),
        ));
    }

    let n = sample.n_rows();
    let x_cols = regressors
        .iter()
        .map(|c| sample.complete_column(c))
        .collect::<Result<Vec<_>>>()?;
    let z_cols = instruments
        .iter()
        .map(|c| sample.complete_column(c))
        .collect::<Result<Vec<_>>>()?;
    let data = MomentData {
        y: sample.complete_column(&cols.outcome)?,
        x: DMatrix::from_fn(n, x_cols.len(), |i, j| x_cols[j][i]),
        z: DMatrix::from_fn(n, z_cols.len(), |i, j| z_cols[j][i]),
    };
    let treatment_idx = 1;
    let (params, converged) = data.minimize(&cfg.simplex)?;
    let beta = params[treatment_idx];

    let boot: Vec<f64> = (0..cfg.n_boot)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(cfg.seed, b as u64));
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            data.resample(&rows)
                .minimize(&cfg.simplex)
                .ok()
                .map(|(p, _)| p[treatment_idx])
                .filter(|v| v.is_finite())
        })
        .collect();
    let se = (!boot.is_empty()).then(|| numeric::population_variance(&boot).sqrt());

    Ok(EstimateResult {
        estimator: "System GMM".into(),
        coef: beta,
        se,
        p_value: se.map(|s| p_value(beta, s)),
        diagnostics: Diagnostics {
            n_obs: n,
            converged: Some(converged),
            bootstrap_refits: Some(boot.len()),
            ..Diagnostics::default()
        },
    })
}
