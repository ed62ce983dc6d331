//! Random-forest importance screening.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rows_to_matrix;
use super::tree::{grow, GrowParams};
use crate::linalg::Matrix;
use crate::paneldata::FeatureRow;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceKind {
    /// Total sum-of-squares reduction of the splits on each input.
    #[default]
    Impurity,
    /// Out-of-bag increase in squared error after permuting each input,
    /// floored at zero per tree.
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub importances: Vec<f64>,
    /// The `k` most important inputs, most important first; ties go to the
    /// lower index.
    pub selected: Vec<usize>,
}

/// Screens feature rows with impurity importance and leaf size 5.
pub fn rf_importance_screen(
    rows: &[FeatureRow],
    targets: &[f64],
    k: usize,
    n_trees: usize,
    seed: u64,
) -> Result<ScreeningReport> {
    let x = rows_to_matrix(rows)?;
    screen_matrix(&x, targets, k, n_trees, 5, ImportanceKind::Impurity, seed)
}

pub fn screen_matrix(
    x: &Matrix,
    y: &[f64],
    k: usize,
    n_trees: usize,
    min_leaf: usize,
    kind: ImportanceKind,
    seed: u64,
) -> Result<ScreeningReport> {
    let (n, p) = (x.rows(), x.cols());
    if n == 0 {
        return Err(Error::EmptyInput("screening rows"));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: y.len() });
    }
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(alloc::format!(
            "screening keeps {k} of {p} inputs"
        )));
    }
    if n_trees == 0 {
        return Err(Error::InvalidParameter("screening needs at least one tree".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = GrowParams {
        max_depth: None,
        min_leaf: min_leaf as f64,
        mtry: Some((p / 3).max(1)),
    };
    let mut importances = vec![0.0; p];
    let mut counts = vec![0.0; n];
    let mut g = vec![0.0; n];
    for _ in 0..n_trees {
        counts.iter_mut().for_each(|c| *c = 0.0);
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1.0;
        }
        for i in 0..n {
            g[i] = counts[i] * y[i];
        }
        let samples: Vec<usize> = (0..n).filter(|&i| counts[i] > 0.0).collect();
        match kind {
            ImportanceKind::Impurity => {
                grow(x, &g, &counts, &counts, samples, &params, Some(&mut rng), Some(&mut importances));
            }
            ImportanceKind::Permutation => {
                let tree = grow(x, &g, &counts, &counts, samples, &params, Some(&mut rng), None);
                let oob: Vec<usize> = (0..n).filter(|&i| counts[i] == 0.0).collect();
                if oob.is_empty() {
                    continue;
                }
                let mse = |rows: &[Vec<f64>]| -> f64 {
                    rows.iter().zip(&oob).map(|(r, &i)| { let e = y[i] - tree.predict(r); e * e }).sum::<f64>()
                        / oob.len() as f64
                };
                let mut rows: Vec<Vec<f64>> = oob.iter().map(|&i| x.row(i).to_vec()).collect();
                let base = mse(&rows);
                for j in 0..p {
                    let original: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                    let mut shuffled = original.clone();
                    shuffled.shuffle(&mut rng);
                    for (r, v) in rows.iter_mut().zip(&shuffled) {
                        r[j] = *v;
                    }
                    importances[j] += (mse(&rows) - base).max(0.0);
                    for (r, v) in rows.iter_mut().zip(&original) {
                        r[j] = *v;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(ScreeningReport {
        importances,
        selected: order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(n: usize) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..6).map(|_| rng.random::<f64>()).collect()).collect();
        let y = rows.iter().map(|r| r[3]).collect();
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn copied_feature_wins() {
        let (x, y) = fixture(200);
        for kind in [ImportanceKind::Impurity, ImportanceKind::Permutation] {
            let r = screen_matrix(&x, &y, 1, 30, 5, kind, 4).unwrap();
            assert_eq!(r.selected, vec![3]);
            assert!(r.importances.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn full_selection_orders_by_importance() {
        let (x, y) = fixture(100);
        let r = screen_matrix(&x, &y, 6, 10, 5, ImportanceKind::Impurity, 1).unwrap();
        let mut sorted = r.selected.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..6).collect::<Vec<_>>());
        for pair in r.selected.windows(2) {
            assert!(r.importances[pair[0]] >= r.importances[pair[1]]);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = fixture(80);
        let a = screen_matrix(&x, &y, 2, 15, 5, ImportanceKind::Impurity, 11).unwrap();
        let b = screen_matrix(&x, &y, 2, 15, 5, ImportanceKind::Impurity, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        // constant inputs never split: all importances zero
        let x = Matrix::from_rows(&vec![[1.0, 1.0, 1.0]; 20]);
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let r = screen_matrix(&x, &y, 2, 5, 2, ImportanceKind::Impurity, 0).unwrap();
        assert_eq!(r.selected, vec![0, 1]);
    }

    #[test]
    fn k_beyond_arity_is_an_error() {
        let (x, y) = fixture(20);
        assert!(screen_matrix(&x, &y, 7, 5, 5, ImportanceKind::Impurity, 0).is_err());
    }
}
