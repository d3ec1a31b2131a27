//! Property-based checks of the invariants each module promises.

use nalgebra::DMatrix;
use pcredml::dml::{p_value, plr_estimate, plr_stderr, ResidualPair};
use pcredml::estimators::{run_fixed_effects, run_ols, ModelColumns};
use pcredml::forest::{ForestParams, RegressionForest, SplitFeatures};
use pcredml::montecarlo::{histogram, summarize};
use pcredml::panel::PanelDataset;
use proptest::prelude::*;

/// Rows of an unbalanced panel: per-entity lengths, times with gaps, and one
/// value column with optional missing cells.
fn panel_strategy() -> impl Strategy<Value = PanelDataset> {
    prop::collection::vec(1usize..7, 1..6)
        .prop_flat_map(|lengths| {
            let n: usize = lengths.iter().sum();
            (
                Just(lengths),
                prop::collection::vec(1i64..3, n),
                prop::collection::vec(prop::option::weighted(0.8, -100.0f64..100.0), n),
            )
        })
        .prop_filter_map("needs an observed value", |(lengths, gaps, values)| {
            if values.iter().all(Option::is_none) {
                return None;
            }
            let mut entities = Vec::new();
            let mut times = Vec::new();
            let mut k = 0;
            for (e, len) in lengths.iter().enumerate() {
                let mut t = 2000;
                for _ in 0..*len {
                    t += gaps[k];
                    k += 1;
                    entities.push(format!("ent{e}"));
                    times.push(t);
                }
            }
            PanelDataset::new("id", "year", entities, times, vec![("v".into(), values)]).ok()
        })
}

fn entity_lengths(ds: &PanelDataset) -> Vec<usize> {
    ds.entity_ranges().iter().map(|r| r.len()).collect()
}

fn assert_sorted_unique(ds: &PanelDataset) {
    let keys: Vec<(&String, i64)> = ds
        .entities()
        .iter()
        .zip(ds.times().iter().copied())
        .collect();
    for w in keys.windows(2) {
        assert!(w[0] < w[1], "rows out of order: {:?}", w);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn panel_operations_keep_rows_sorted(ds in panel_strategy(), k in 1usize..4) {
        assert_sorted_unique(&ds);
        let imputed = ds.impute(&["v"]).unwrap();
        assert_sorted_unique(&imputed);
        let lagged = imputed.add_lag("v", k, "v_lag").unwrap();
        assert_sorted_unique(&lagged);
        assert_sorted_unique(&lagged.drop_missing_rows(&["v_lag"]).unwrap());
        assert_sorted_unique(&imputed.add_entity_mean("v", "v_mean").unwrap());
    }

    #[test]
    fn impute_is_idempotent(ds in panel_strategy()) {
        let once = ds.impute(&["v"]).unwrap();
        let twice = once.impute(&["v"]).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn lag_then_drop_keeps_expected_row_count(ds in panel_strategy(), k in 1usize..5) {
        let full = ds.impute(&["v"]).unwrap();
        let kept = full.add_lag("v", k, "v_lag").unwrap().drop_missing_rows(&["v_lag"]).unwrap();
        let expected: usize = entity_lengths(&full).iter().map(|t| t.saturating_sub(k)).sum();
        prop_assert_eq!(kept.n_rows(), expected);
    }

    #[test]
    fn lag_composition(ds in panel_strategy()) {
        let full = ds.impute(&["v"]).unwrap();
        let once = full.add_lag("v", 1, "l1").unwrap();
        let twice = once.add_lag("l1", 1, "l11").unwrap().add_lag("v", 2, "l2").unwrap();
        let l11 = twice.column("l11").unwrap();
        let l2 = twice.column("l2").unwrap();
        for (a, b) in l11.iter().zip(l2) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn entity_mean_ignores_row_order(ds in panel_strategy(), rotate in 0usize..7) {
        let full = ds.impute(&["v"]).unwrap();
        let values = full.complete_column("v").unwrap();
        // Rotate the values inside every entity, keeping keys in place.
        let mut permuted = values.clone();
        for r in full.entity_ranges() {
            let mut block = values[r.clone()].to_vec();
            let len = block.len();
            block.rotate_left(rotate % len);
            permuted[r].copy_from_slice(&block);
        }
        let shuffled = PanelDataset::from_complete(
            "id",
            "year",
            full.entities().to_vec(),
            full.times().to_vec(),
            vec![("v".into(), permuted)],
        )
        .unwrap();
        let a = full.add_entity_mean("v", "m").unwrap().complete_column("m").unwrap();
        let b = shuffled.add_entity_mean("v", "m").unwrap().complete_column("m").unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}

fn forest_inputs() -> impl Strategy<Value = (DMatrix<f64>, Vec<f64>)> {
    (5usize..40, 1usize..4).prop_flat_map(|(n, p)| {
        (
            prop::collection::vec(-10.0f64..10.0, n * p)
                .prop_map(move |v| DMatrix::from_vec(n, p, v)),
            prop::collection::vec(-50.0f64..50.0, n),
        )
    })
}

fn small_forest(seed: u64) -> ForestParams {
    ForestParams {
        n_trees: 8,
        max_depth: 4,
        min_samples_split: 2,
        split_features: SplitFeatures::Sqrt,
        seed,
        ..ForestParams::compact()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forest_predictions_stay_in_training_range((x, y) in forest_inputs(), seed in any::<u64>()) {
        let forest = RegressionForest::fit(&x, &y, &small_forest(seed)).unwrap();
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let probe = DMatrix::from_fn(20, x.ncols(), |i, j| (i as f64 - 10.0) * 1.7 + j as f64);
        for v in forest.predict(&probe).unwrap().into_iter().chain(forest.predict(&x).unwrap()) {
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }
        for tree in forest.trees() {
            prop_assert!(tree.depth() <= 4);
            prop_assert!(tree.leaf_values().len() <= 1 << 4);
            for leaf in tree.leaf_values() {
                prop_assert!(leaf >= lo - 1e-9 && leaf <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn forest_is_deterministic((x, y) in forest_inputs(), seed in any::<u64>()) {
        let a = RegressionForest::fit(&x, &y, &small_forest(seed)).unwrap();
        let b = RegressionForest::fit(&x, &y, &small_forest(seed)).unwrap();
        prop_assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn forest_shifts_with_outcome((x, y) in forest_inputs(), c in -20i32..20, seed in any::<u64>()) {
        let c = c as f64;
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let a = RegressionForest::fit(&x, &y, &small_forest(seed)).unwrap();
        let b = RegressionForest::fit(&x, &shifted, &small_forest(seed)).unwrap();
        for (pa, pb) in a.predict(&x).unwrap().iter().zip(b.predict(&x).unwrap()) {
            prop_assert!((pa + c - pb).abs() <= 1e-9 * (1.0 + pb.abs()));
        }
    }

    #[test]
    fn plr_scale_equivariance(
        pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..60),
        c in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
    ) {
        let (y, d): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assume!(d.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let base = plr_estimate(&ResidualPair::unfolded(y.clone(), d.clone()).unwrap()).unwrap();
        let both = plr_estimate(&ResidualPair::unfolded(
            y.iter().map(|v| c * v).collect(),
            d.iter().map(|v| c * v).collect(),
        ).unwrap()).unwrap();
        let outcome_only = plr_estimate(&ResidualPair::unfolded(
            y.iter().map(|v| c * v).collect(),
            d.clone(),
        ).unwrap()).unwrap();
        prop_assert!((both - base).abs() <= 1e-9 * (1.0 + base.abs()));
        prop_assert!((outcome_only - c * base).abs() <= 1e-9 * (1.0 + (c * base).abs()));
    }

    #[test]
    fn p_value_range_and_symmetry(coef in -1e3f64..1e3, se in 0.0f64..1e3) {
        let p = p_value(coef, se);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(p, p_value(-coef, se));
    }

    #[test]
    fn stderr_shrinks_when_sample_is_duplicated(
        pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..40),
    ) {
        let (y, d): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assume!(d.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let r = ResidualPair::unfolded(y.clone(), d.clone()).unwrap();
        let theta = plr_estimate(&r).unwrap();
        let se = plr_stderr(&r, theta).unwrap();
        let doubled = ResidualPair::unfolded(
            y.iter().chain(&y).copied().collect(),
            d.iter().chain(&d).copied().collect(),
        ).unwrap();
        let se2 = plr_stderr(&doubled, theta).unwrap();
        prop_assert!((se2 * se2 * 2.0 - se * se).abs() <= 1e-9 * (1.0 + se * se));
    }

    #[test]
    fn mse_decomposes_into_bias_and_variance(
        draws in prop::collection::vec(-100.0f64..100.0, 1..200),
        theta in -10.0f64..10.0,
    ) {
        let s = summarize(&draws, theta).unwrap();
        let rhs = s.bias * s.bias + s.variance;
        prop_assert!((s.mse - rhs).abs() <= 1e-9 * s.mse.abs().max(1e-12));
        prop_assert!(s.variance >= 0.0);
    }

    #[test]
    fn histogram_conserves_draws(draws in prop::collection::vec(-100.0f64..100.0, 1..300)) {
        let bins = histogram(&draws, 20);
        prop_assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), draws.len());
        let lo = draws.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = draws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(bins[0].left, lo);
        prop_assert_eq!(bins[bins.len() - 1].right, hi);
        for w in bins.windows(2) {
            prop_assert!(w[0].left < w[1].left);
        }
    }
}

/// Three-entity panel with treatment, one control and outcome.
fn linear_panel(d: &[f64], c: &[f64], y: &[f64]) -> PanelDataset {
    let n = d.len();
    let entities = (0..n).map(|i| format!("e{}", i % 3)).collect();
    let times = (0..n as i64).map(|i| i / 3).collect();
    PanelDataset::from_complete(
        "id",
        "t",
        entities,
        times,
        vec![
            ("d".into(), d.to_vec()),
            ("c".into(), c.to_vec()),
            ("y".into(), y.to_vec()),
        ],
    )
    .unwrap()
}

fn linear_columns() -> ModelColumns {
    ModelColumns {
        outcome: "y".into(),
        treatment: "d".into(),
        controls: vec!["c".into()],
        proxies: vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn treatment_rescaling_rescales_coefficient(
        rows in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), 12..30),
        c in prop_oneof![-5.0f64..-0.2, 0.2f64..5.0],
    ) {
        let d: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let x: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let y: Vec<f64> = rows.iter().map(|r| 0.5 * r.0 - r.1 + r.2).collect();
        let scaled: Vec<f64> = d.iter().map(|v| c * v).collect();
        let cols = linear_columns();
        let base = linear_panel(&d, &x, &y);
        let rescaled = linear_panel(&scaled, &x, &y);
        for run in [run_ols, run_fixed_effects] {
            let (Ok(a), Ok(b)) = (run(&base, &cols), run(&rescaled, &cols)) else {
                continue;
            };
            prop_assert!((b.coef * c - a.coef).abs() <= 1e-8 * (1.0 + a.coef.abs()));
            prop_assert!((b.p_value.unwrap() - a.p_value.unwrap()).abs() <= 1e-8);
            prop_assert!((0.0..=1.0).contains(&a.p_value.unwrap()));
        }
    }

    #[test]
    fn fixed_effects_ignore_entity_constants(
        rows in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), 12..30),
        shifts in prop::collection::vec(-50.0f64..50.0, 3),
    ) {
        let d: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let x: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let y: Vec<f64> = rows.iter().map(|r| 0.5 * r.0 - r.1 + r.2).collect();
        let y_shifted: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + shifts[i % 3]).collect();
        let cols = linear_columns();
        let a = run_fixed_effects(&linear_panel(&d, &x, &y), &cols);
        let b = run_fixed_effects(&linear_panel(&d, &x, &y_shifted), &cols);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a.coef - b.coef).abs() <= 1e-8 * (1.0 + a.coef.abs()));
        }
    }
}
