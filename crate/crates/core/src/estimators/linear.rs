//! Pooled OLS and within (entity fixed effects) regressions.

use nalgebra::{DMatrix, DVector};

use crate::dml::{p_value, Diagnostics, EstimateResult};
use crate::error::{Error, Result};
use crate::numeric;
use crate::panel::PanelDataset;

use super::normal::student_t_p_value;
use super::{require_columns, ModelColumns};

/// Least-squares fit of `y` on the columns of `x`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coef: DVector<f64>,
    /// `(X'X)^{-1}`.
    pub xtx_inv: DMatrix<f64>,
    pub rss: f64,
    pub n_obs: usize,
}

impl LeastSquares {
    /// Homoskedastic standard error of coefficient `j` given residual degrees
    /// of freedom.
    pub fn stderr(&self, j: usize, df_resid: f64) -> f64 {
        let sigma2 = self.rss / df_resid;
        (sigma2 * self.xtx_inv[(j, j)]).max(0.0).sqrt()
    }
}

/// Solves least squares through a Householder QR factorization.
///
/// A column whose component orthogonal to the preceding columns is
/// negligible relative to its own norm is reported as collinear.
pub fn least_squares(x: &DMatrix<f64>, y: &[f64], names: &[String]) -> Result<LeastSquares> {
    let (n, k) = x.shape();
    if y.len() != n || names.len() != k {
        return Err(Error::Shape(format!(
            "design is {n}x{k} with {} names, outcome has {} rows",
            names.len(),
            y.len()
        )));
    }
    if k == 0 {
        return Err(Error::Config("empty design matrix".into()));
    }
    if n < k {
        return Err(Error::Collinear {
            column: names[n.min(k - 1)].clone(),
            preceding: names[..n.min(k - 1)].to_vec(),
        });
    }

    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let norm = x.column(j).norm();
        let pivot = r[(j, j)].abs();
        if pivot.is_nan() || pivot <= 1e-10 * norm || norm == 0.0 {
            return Err(Error::Collinear {
                column: names[j].clone(),
                preceding: names[..j].to_vec(),
            });
        }
    }
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, k).into_owned();
    let coef = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::Fit("triangular solve failed".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Fit("triangular inverse failed".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();

    let fitted = x * &coef;
    let rss = numeric::sum(y.iter().zip(fitted.iter()).map(|(a, b)| (a - b) * (a - b)));
    Ok(LeastSquares {
        coef,
        xtx_inv,
        rss,
        n_obs: n,
    })
}

fn design(ds: &PanelDataset, regressors: &[String]) -> Result<Vec<Vec<f64>>> {
    regressors.iter().map(|c| ds.complete_column(c)).collect()
}

fn result_for(
    label: &str,
    fit: &LeastSquares,
    j: usize,
    df_resid: usize,
) -> Result<EstimateResult> {
    if df_resid == 0 {
        return Err(Error::Data(format!(
            "{label}: no residual degrees of freedom ({} observations)",
            fit.n_obs
        )));
    }
    let coef = fit.coef[j];
    let se = fit.stderr(j, df_resid as f64);
    let t_p = if se == 0.0 {
        Some(p_value(coef, se))
    } else {
        student_t_p_value(coef / se, df_resid as f64)
    };
    Ok(EstimateResult {
        estimator: label.to_string(),
        coef,
        se: Some(se),
        p_value: Some(p_value(coef, se)),
        diagnostics: Diagnostics {
            n_obs: fit.n_obs,
            t_p_value: t_p,
            ..Diagnostics::default()
        },
    })
}

/// Pooled OLS of the outcome on an intercept, the treatment, the controls and
/// the lagged proxies. Reports the treatment coefficient.
pub fn run_ols(ds: &PanelDataset, cols: &ModelColumns) -> Result<EstimateResult> {
    let regressors = cols.linear_regressors();
    require_columns(ds, regressors.iter().chain([&cols.outcome]))?;
    let y = ds.complete_column(&cols.outcome)?;
    let data = design(ds, &regressors)?;
    let n = y.len();
    let k = regressors.len() + 1;
    let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { data[j - 1][i] });
    let names: Vec<String> = std::iter::once("const".to_string())
        .chain(regressors.iter().cloned())
        .collect();
    let fit = least_squares(&x, &y, &names)?;
    result_for("OLS", &fit, 1, n.saturating_sub(k))
}

/// Entity-demeaned copy of `values`.
pub fn within_transform(ds: &PanelDataset, values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for range in ds.entity_ranges() {
        let m = numeric::mean(&values[range.clone()]);
        out[range].iter_mut().for_each(|v| *v -= m);
    }
    out
}

/// Within estimator: demeans outcome and regressors by entity, then fits OLS
/// without an intercept. Residual degrees of freedom subtract the absorbed
/// entity effects.
pub fn run_fixed_effects(ds: &PanelDataset, cols: &ModelColumns) -> Result<EstimateResult> {
    let regressors = cols.linear_regressors();
    require_columns(ds, regressors.iter().chain([&cols.outcome]))?;
    let ranges = ds.entity_ranges();
    if ranges.iter().all(|r| r.len() < 2) {
        return Err(Error::NoWithinVariation);
    }
    let y = within_transform(ds, &ds.complete_column(&cols.outcome)?);
    let data: Vec<Vec<f64>> = design(ds, &regressors)?
        .iter()
        .map(|c| within_transform(ds, c))
        .collect();
    let n = y.len();
    let k = regressors.len();
    let x = DMatrix::from_fn(n, k, |i, j| data[j][i]);
    let fit = least_squares(&x, &y, &regressors)?;
    let df = n.saturating_sub(k + ranges.len());
    result_for("Fixed Effects", &fit, 0, df)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("c{j}")).collect()
    }

    #[test]
    fn hand_solved_two_by_two() {
        // d = [0,1,2], y = [1,3,5] -> y = 1 + 2d.
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let fit = least_squares(&x, &[1.0, 3.0, 5.0], &names(2)).unwrap();
        assert!((fit.coef[0] - 1.0).abs() < 1e-12);
        assert!((fit.coef[1] - 2.0).abs() < 1e-12);
        assert!(fit.rss < 1e-24);
    }

    #[test]
    fn duplicated_column_is_collinear() {
        let x = DMatrix::from_row_slice(
            4,
            3,
            &[
                1.0, 0.3, 0.3, //
                1.0, 1.2, 1.2, //
                1.0, -0.4, -0.4, //
                1.0, 2.0, 2.0,
            ],
        );
        match least_squares(&x, &[1.0, 2.0, 3.0, 4.0], &names(3)) {
            Err(Error::Collinear { column, preceding }) => {
                assert_eq!(column, "c2");
                assert_eq!(preceding, ["c0", "c1"]);
            }
            other => panic!("expected collinearity, got {other:?}"),
        }
    }

    #[test]
    fn zero_column_is_collinear() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            least_squares(&x, &[1.0, 2.0, 3.0], &names(2)),
            Err(Error::Collinear { .. })
        ));
    }
}
