use posl_core::ensemble::{
    combine_and_truncate, cumulative_weighted_loss, dsl_select, solve_nnls, Combination, LossKind, MetaDataset,
};
use posl_core::learners::{fit, fit_matrix, soft_threshold, Family, Hyperparams, LearnerSpec, Model, Scope};
use posl_core::linalg::Matrix;
use posl_core::paneldata::FeatureRow;
use proptest::prelude::*;

fn meta_strategy(max_rows: usize, max_cols: usize) -> impl Strategy<Value = MetaDataset> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(n, c)| {
        (
            prop::collection::vec(-5.0f64..30.0, n * c),
            prop::collection::vec(0.0f64..30.0, n),
            prop::collection::vec(0.05f64..1.0, n),
        )
            .prop_map(move |(p, y, w)| {
                MetaDataset::new(
                    Matrix::from_vec(n, c, p),
                    y,
                    w,
                    (1..=n).collect(),
                    (0..c).map(|j| format!("l{j}")).collect(),
                )
                .unwrap()
            })
    })
}

fn weighted_sse(meta: &MetaDataset, alpha: &[f64]) -> f64 {
    let fit = meta.predictions.mul_vec(alpha);
    cumulative_weighted_loss(&meta.observed, &fit, &meta.time_weights, LossKind::Squared).unwrap()
}

fn gradient(meta: &MetaDataset, alpha: &[f64]) -> Vec<f64> {
    let fit = meta.predictions.mul_vec(alpha);
    (0..meta.n_learners())
        .map(|j| {
            -2.0 * (0..meta.n_rows())
                .map(|r| meta.time_weights[r] * meta.predictions.get(r, j) * (meta.observed[r] - fit[r]))
                .sum::<f64>()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nnls_satisfies_kkt_and_beats_every_vertex(meta in meta_strategy(30, 4)) {
        let a = solve_nnls(&meta, false).unwrap();
        prop_assert!(a.alpha.iter().all(|&v| v >= 0.0));
        for (j, g) in gradient(&meta, &a.alpha).iter().enumerate() {
            prop_assert!(*g >= -1e-6, "g[{j}] = {g}");
            if a.alpha[j] > 1e-10 {
                prop_assert!(g.abs() <= 1e-6, "g[{j}] = {g} at alpha {}", a.alpha[j]);
            }
        }
        let best = weighted_sse(&meta, &a.alpha);
        for c in 0..meta.n_learners() {
            let mut e = vec![0.0; meta.n_learners()];
            e[c] = 1.0;
            prop_assert!(best <= weighted_sse(&meta, &e) + 1e-9);
        }
    }

    #[test]
    fn convexified_weights_are_the_rescaled_solution(meta in meta_strategy(20, 4)) {
        let raw = solve_nnls(&meta, false).unwrap();
        let cvx = solve_nnls(&meta, true).unwrap();
        prop_assert!(cvx.convexified);
        prop_assert!((cvx.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(cvx.alpha.iter().all(|&v| v >= 0.0));
        let total: f64 = raw.alpha.iter().sum();
        if total > 0.0 {
            for (r, c) in raw.alpha.iter().zip(&cvx.alpha) {
                prop_assert!((r / total - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weight_scale_changes_no_argmin(meta in meta_strategy(20, 4), scale in 0.01f64..100.0) {
        let mut scaled = meta.clone();
        scaled.time_weights.iter_mut().for_each(|w| *w *= scale);
        prop_assert_eq!(dsl_select(&meta, LossKind::Squared).unwrap(), dsl_select(&scaled, LossKind::Squared).unwrap());
        let a = solve_nnls(&meta, false).unwrap();
        let b = solve_nnls(&scaled, false).unwrap();
        for (x, y) in a.alpha.iter().zip(&b.alpha) {
            prop_assert!((x - y).abs() < 1e-8 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn dsl_is_the_exhaustive_argmin(meta in meta_strategy(25, 6)) {
        let losses: Vec<f64> = (0..meta.n_learners())
            .map(|c| cumulative_weighted_loss(&meta.observed, &meta.predictions.column(c), &meta.time_weights, LossKind::Squared).unwrap())
            .collect();
        let k = dsl_select(&meta, LossKind::Squared).unwrap();
        prop_assert!(losses.iter().all(|&l| losses[k] <= l));
        prop_assert!(losses[..k].iter().all(|&l| l > losses[k]));
    }

    #[test]
    fn truncation_is_idempotent(p in prop::collection::vec(-100.0f64..100.0, 1..5), lo in -10.0f64..10.0, width in 0.1f64..50.0) {
        let alpha = vec![1.0 / p.len() as f64; p.len()];
        let (v, _) = combine_and_truncate(&p, Combination::Weights(&alpha), (lo, lo + width)).unwrap();
        prop_assert_eq!(combine_and_truncate(&[v], Combination::Choice(0), (lo, lo + width)).unwrap(), (v, false));
    }
}

fn rows_from(x: &[Vec<f64>]) -> Vec<FeatureRow> {
    x.iter()
        .enumerate()
        .map(|(i, v)| FeatureRow {
            values: v.clone(),
            missing_indicators: vec![],
            session_index: i as u32 + 1,
        })
        .collect()
}

fn dataset_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (8usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
            .prop_map(|(x, e)| {
                let y = x.iter().zip(&e).map(|(r, e)| 1.0 + 2.0 * r[0] - r[1] + e).collect();
                (x, y)
            })
    })
}

fn slope_norm(model: &Model) -> f64 {
    match model {
        Model::Linear { coefficients, .. } => coefficients.iter().map(|c| c * c).sum::<f64>().sqrt(),
        _ => panic!("expected a linear model"),
    }
}

fn spec(family: Family, lambda: f64) -> LearnerSpec {
    LearnerSpec::new(family, Scope::Historical).with_hyper(Hyperparams {
        lambda,
        rounds: 15,
        ..Hyperparams::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ridge_shrinks_monotonically((x, y) in dataset_strategy(), l1 in 0.0f64..5.0, extra in 0.001f64..5.0) {
        let rows = rows_from(&x);
        let a = fit(&spec(Family::Ridge, l1), &rows, &y, None).unwrap();
        let b = fit(&spec(Family::Ridge, l1 + extra), &rows, &y, None).unwrap();
        prop_assert!(slope_norm(&a.model) >= slope_norm(&b.model) - 1e-12);
    }

    #[test]
    fn row_permutation_leaves_predictions_unchanged((x, y) in dataset_strategy(), w in prop::collection::vec(0.1f64..2.0, 40)) {
        let n = x.len();
        let w = &w[..n];
        let order: Vec<usize> = (0..n).rev().collect();
        let px: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
        let py: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let pw: Vec<f64> = order.iter().map(|&i| w[i]).collect();
        let rows = rows_from(&x);
        for family in [Family::Mean, Family::Linear, Family::Ridge, Family::Lasso, Family::HingeSpline] {
            let s = spec(family, 0.05);
            let a = fit(&s, &rows, &y, Some(w)).unwrap();
            let b = fit(&s, &rows_from(&px), &py, Some(&pw)).unwrap();
            for (p, q) in a.predict(&rows).unwrap().iter().zip(b.predict(&rows).unwrap()) {
                prop_assert!((p - q).abs() < 1e-8, "{:?}: {} vs {}", family, p, q);
            }
        }
        let s = spec(Family::Gbt, 0.0);
        let a = fit(&s, &rows, &y, Some(w)).unwrap();
        let b = fit(&s, &rows, &y, Some(w)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn screened_fit_ignores_unselected_columns((x, y) in dataset_strategy(), junk in -50.0f64..50.0) {
        let rows = rows_from(&x);
        let mut s = spec(Family::Linear, 0.0).screened(true);
        s.hyper.screen_k = 1;
        s.hyper.screen_trees = 20;
        let f = fit(&s, &rows, &y, None).unwrap();
        let selected = f.selected_features.clone().unwrap();
        prop_assert_eq!(selected.len(), 1);
        let mut changed = rows.clone();
        for r in &mut changed {
            for j in 0..3 {
                if !selected.contains(&j) {
                    r.values[j] = junk;
                }
            }
        }
        prop_assert_eq!(f.predict(&rows).unwrap(), f.predict(&changed).unwrap());
    }
}

#[test]
fn soft_threshold_values() {
    assert_eq!(soft_threshold(3.0, 1.0), 2.0);
    assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
    assert_eq!(soft_threshold(0.5, 1.0), 0.0);
}

#[test]
fn gbt_without_rounds_is_the_mean() {
    let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
    let f = fit_matrix(&spec(Family::Gbt, 0.0).with_hyper(Hyperparams { rounds: 0, ..Hyperparams::default() }), &x, &[1.0, 2.0, 3.0, 6.0], None, None)
        .unwrap();
    assert_eq!(f.predict_matrix(&x).unwrap(), vec![3.0; 4]);
}
