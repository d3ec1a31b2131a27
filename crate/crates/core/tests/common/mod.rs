//! Reference computations shared by the oracle and acceptance suites.

#![allow(dead_code)]

use nalgebra::DMatrix;
use pcredml::estimators::ModelColumns;
use pcredml::forest::SplitCriterion;
use pcredml::panel::PanelDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (v, p) in a[row].iter_mut().zip(&pivot_row).skip(col) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Normal-equation least squares returning coefficients and the
/// homoskedastic standard error of coefficient `j`.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64], j: usize, df: f64) -> (Vec<f64>, f64) {
    let k = x[0].len();
    let xtx: Vec<Vec<f64>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| x.iter().map(|r| r[a] * r[b]).sum())
                .collect()
        })
        .collect();
    let xty: Vec<f64> = (0..k)
        .map(|a| x.iter().zip(y).map(|(r, v)| r[a] * v).sum())
        .collect();
    let beta = gauss_solve(xtx.clone(), xty);
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(r, v)| {
            let fit: f64 = r.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (v - fit).powi(2)
        })
        .sum();
    let mut unit = vec![0.0; k];
    unit[j] = 1.0;
    let inv_col = gauss_solve(xtx, unit);
    (beta.clone(), (rss / df * inv_col[j]).sqrt())
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

pub struct SmallPanel {
    pub ds: PanelDataset,
    pub cols: ModelColumns,
}

/// Random unbalanced panel with `n_controls` controls and optionally one
/// proxy lag column.
pub fn small_panel(seed: u64) -> SmallPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_entities = rng.random_range(3..=5);
    let n_controls = rng.random_range(0..=1);
    let with_proxy = rng.random_bool(0.5);
    let controls: Vec<String> = (0..n_controls).map(|j| format!("c{j}")).collect();
    let proxies: Vec<String> = if with_proxy { vec!["z".into()] } else { vec![] };

    let mut entities = Vec::new();
    let mut times = Vec::new();
    for e in 0..n_entities {
        for t in 0..rng.random_range(2..=4) {
            entities.push(format!("e{e}"));
            times.push(t);
        }
    }
    let n = entities.len();
    let mut draw = |scale: f64| -> Vec<f64> { (0..n).map(|_| scale * normal(&mut rng)).collect() };
    let mut named = vec![("trust".to_string(), draw(1.0))];
    for c in &controls {
        named.push((c.clone(), draw(2.0)));
    }
    if with_proxy {
        named.push(("z_lag".into(), draw(1.0)));
    }
    let noise = draw(0.3);
    let y: Vec<f64> = (0..n)
        .map(|i| 1.0 + named.iter().map(|(_, v)| 0.7 * v[i]).sum::<f64>() + noise[i])
        .collect();
    named.push(("y".into(), y));
    let ds = PanelDataset::from_complete("id", "t", entities, times, named).unwrap();
    SmallPanel {
        ds,
        cols: ModelColumns {
            outcome: "y".into(),
            treatment: "trust".into(),
            controls,
            proxies,
        },
    }
}

pub fn design_rows(ds: &PanelDataset, names: &[String]) -> Vec<Vec<f64>> {
    let cols: Vec<Vec<f64>> = names
        .iter()
        .map(|c| ds.complete_column(c).unwrap())
        .collect();
    (0..ds.n_rows())
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect()
}

/// Direct two-pass loss of splitting `rows` on `x[., f] <= t`.
pub fn direct_loss(
    x: &DMatrix<f64>,
    y: &[f64],
    f: usize,
    t: f64,
    criterion: SplitCriterion,
) -> f64 {
    let (l, r): (Vec<f64>, Vec<f64>) = (0..y.len()).map(|i| (x[(i, f)], y[i])).fold(
        (vec![], vec![]),
        |(mut l, mut r), (xv, yv)| {
            if xv <= t {
                l.push(yv)
            } else {
                r.push(yv)
            }
            (l, r)
        },
    );
    let mse = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / v.len() as f64
    };
    let n = y.len() as f64;
    match criterion {
        SplitCriterion::ChildMseSum => mse(&l) + mse(&r),
        SplitCriterion::WeightedMse => (l.len() as f64 * mse(&l) + r.len() as f64 * mse(&r)) / n,
    }
}

pub fn exhaustive_minimum(x: &DMatrix<f64>, y: &[f64], criterion: SplitCriterion) -> Option<f64> {
    let mut best: Option<f64> = None;
    for f in 0..x.ncols() {
        let mut vals: Vec<f64> = x.column(f).iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let loss = direct_loss(x, y, f, 0.5 * (w[0] + w[1]), criterion);
            best = Some(best.map_or(loss, |b: f64| b.min(loss)));
        }
    }
    best
}
