//! Nelder-Mead downhill simplex minimization.
//!
//! Follows the classical adaptive-free variant: reflect the worst vertex
//! through the centroid of the others, expand on improvement, contract
//! outside or inside otherwise, and shrink toward the best vertex when
//! contraction fails. The initial simplex perturbs each coordinate of `x0`
//! by 5% (or by 0.00025 where the coordinate is zero).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    /// Defaults to `200 * dim` when `None`.
    pub max_iterations: Option<usize>,
    /// Defaults to `200 * dim` when `None`.
    pub max_evaluations: Option<usize>,
    /// Largest coordinate distance from the best vertex at convergence.
    pub x_tolerance: f64,
    /// Largest objective gap to the best vertex at convergence.
    pub f_tolerance: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub initial_step_nonzero: f64,
    pub initial_step_zero: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            max_evaluations: None,
            x_tolerance: 1e-4,
            f_tolerance: 1e-4,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step_nonzero: 0.05,
            initial_step_zero: 0.00025,
        }
    }
}

impl SimplexOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("x_tolerance", self.x_tolerance),
            ("f_tolerance", self.f_tolerance),
            ("reflection", self.reflection),
            ("initial_step_nonzero", self.initial_step_nonzero),
            ("initial_step_zero", self.initial_step_zero),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.expansion > 1.0 && self.expansion > self.reflection) {
            return Err(Error::Config(
                "expansion must exceed 1 and the reflection coefficient".into(),
            ));
        }
        for (name, v) in [("contraction", self.contraction), ("shrink", self.shrink)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// False when the iteration or evaluation budget ran out first.
    pub converged: bool,
}

/// Minimizes `objective` starting from `x0`.
///
/// Non-finite objective values after initialization are treated as `+inf`,
/// so the search simply moves away from them.
pub fn nelder_mead<F>(mut objective: F, x0: &[f64], opts: &SimplexOptions) -> Result<SimplexResult>
where
    F: FnMut(&[f64]) -> f64,
{
    opts.validate()?;
    let dim = x0.len();
    if dim == 0 {
        return Err(Error::Config("cannot minimize over zero parameters".into()));
    }
    let max_iter = opts.max_iterations.unwrap_or(200 * dim);
    let max_eval = opts.max_evaluations.unwrap_or(200 * dim);

    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for k in 0..dim {
        let mut v = x0.to_vec();
        if v[k] != 0.0 {
            v[k] *= 1.0 + opts.initial_step_nonzero;
        } else {
            v[k] = opts.initial_step_zero;
        }
        simplex.push(v);
    }
    let mut values = Vec::with_capacity(dim + 1);
    for v in &simplex {
        let f = eval(v, &mut evaluations);
        if !f.is_finite() {
            return Err(Error::Optimizer(format!(
                "objective is not finite at initial vertex {v:?}"
            )));
        }
        values.push(f);
    }
    sort_simplex(&mut simplex, &mut values);

    let (rho, chi, psi, sigma) = (
        opts.reflection,
        opts.expansion,
        opts.contraction,
        opts.shrink,
    );
    let mut iterations = 0usize;
    let mut converged = false;
    while evaluations < max_eval && iterations < max_iter {
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let f_spread = values[1..]
            .iter()
            .map(|f| (f - values[0]).abs())
            .fold(0.0, f64::max);
        if x_spread <= opts.x_tolerance && f_spread <= opts.f_tolerance {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| (1.0 + coef) * c - coef * w)
                .collect()
        };

        let xr = along(rho);
        let fxr = eval(&xr, &mut evaluations);
        let mut shrink = false;
        if fxr < values[0] {
            let xe = along(rho * chi);
            let fxe = eval(&xe, &mut evaluations);
            if fxe < fxr {
                simplex[dim] = xe;
                values[dim] = fxe;
            } else {
                simplex[dim] = xr;
                values[dim] = fxr;
            }
        } else if fxr < values[dim - 1] {
            simplex[dim] = xr;
            values[dim] = fxr;
        } else if fxr < values[dim] {
            let xc = along(psi * rho);
            let fxc = eval(&xc, &mut evaluations);
            if fxc <= fxr {
                simplex[dim] = xc;
                values[dim] = fxc;
            } else {
                shrink = true;
            }
        } else {
            let xcc = along(-psi);
            let fxcc = eval(&xcc, &mut evaluations);
            if fxcc < values[dim] {
                simplex[dim] = xcc;
                values[dim] = fxcc;
            } else {
                shrink = true;
            }
        }
        if shrink {
            let best = simplex[0].clone();
            for j in 1..=dim {
                for (v, b) in simplex[j].iter_mut().zip(&best) {
                    *v = b + sigma * (*v - b);
                }
                values[j] = eval(&simplex[j], &mut evaluations);
            }
        }
        iterations += 1;
        sort_simplex(&mut simplex, &mut values);
    }

    Ok(SimplexResult {
        x: simplex.swap_remove(0),
        value: values[0],
        iterations,
        evaluations,
        converged,
    })
}

fn sort_simplex(simplex: &mut Vec<Vec<f64>>, values: &mut Vec<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    *simplex = order.iter().map(|&i| simplex[i].clone()).collect();
    *values = order.iter().map(|&i| values[i]).collect();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_objective_returns_start() {
        let x0 = [0.5, -1.0, 0.0];
        let r = nelder_mead(|_| 3.0, &x0, &SimplexOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.x, x0);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let r = nelder_mead(|_| f64::NAN, &[0.0], &SimplexOptions::default());
        assert!(matches!(r, Err(Error::Optimizer(_))));
    }

    #[test]
    fn budget_exhaustion_reports_nonconvergence() {
        let opts = SimplexOptions {
            max_iterations: Some(3),
            ..SimplexOptions::default()
        };
        let r = nelder_mead(|x| (x[0] - 100.0).powi(2), &[0.0], &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn one_dimensional_quadratic() {
        let r = nelder_mead(|x| (x[0] + 3.0).powi(2), &[1.0], &SimplexOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.x[0] + 3.0).abs() < 1e-3);
    }

    #[test]
    fn invalid_options() {
        let opts = SimplexOptions {
            contraction: 1.5,
            ..SimplexOptions::default()
        };
        assert!(nelder_mead(|x| x[0], &[0.0], &opts).is_err());
    }
}
