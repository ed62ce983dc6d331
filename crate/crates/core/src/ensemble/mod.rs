//! Meta-level learning: recency weights, cumulative losses, NNLS stacking,
//! discrete selection and bounded combination of candidate predictions.

mod nnls;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::math::{ln, powi};
use crate::{Error, Result};

pub use nnls::{nnls_colmajor, nnls_weighted};

/// Probabilities are clamped to `[NLL_CLAMP, 1 - NLL_CLAMP]` before logs.
pub const NLL_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaKind {
    Dsl,
    EslConvex,
    EslNonconvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Squared,
    NegativeLogLikelihood,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlConfig {
    /// Loss used by discrete selection.
    pub loss_kind: LossKind,
    /// Per-session decay of older meta rows.
    pub delta: f64,
    /// Rows at `t >= tau - recency_window` keep full weight.
    pub recency_window: usize,
    pub bounds: (f64, f64),
}

impl Default for SlConfig {
    fn default() -> Self {
        Self {
            loss_kind: LossKind::Squared,
            delta: 0.1,
            recency_window: 5,
            bounds: (0.0, 50.0),
        }
    }
}

impl SlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter("delta must lie in [0, 1)".into()));
        }
        if !(self.bounds.0 < self.bounds.1) {
            return Err(Error::InvalidParameter("bounds must satisfy lo < hi".into()));
        }
        Ok(())
    }
}

/// Out-of-fold candidate predictions with their outcomes and weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaDataset {
    /// Rows are validated sessions, columns are candidate learners.
    pub predictions: Matrix,
    pub observed: Vec<f64>,
    pub time_weights: Vec<f64>,
    pub session_indices: Vec<usize>,
    pub learner_ids: Vec<String>,
    /// Validation sessions dropped because a learner failed on them.
    pub dropped_folds: Vec<usize>,
}

impl MetaDataset {
    pub fn new(
        predictions: Matrix,
        observed: Vec<f64>,
        time_weights: Vec<f64>,
        session_indices: Vec<usize>,
        learner_ids: Vec<String>,
    ) -> Result<Self> {
        let rows = predictions.rows();
        for len in [observed.len(), time_weights.len(), session_indices.len()] {
            if len != rows {
                return Err(Error::LengthMismatch { expected: rows, found: len });
            }
        }
        if learner_ids.len() != predictions.cols() {
            return Err(Error::LengthMismatch {
                expected: predictions.cols(),
                found: learner_ids.len(),
            });
        }
        if (0..rows).any(|r| predictions.row(r).iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("meta-level predictions"));
        }
        if observed.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("meta-level outcomes"));
        }
        if time_weights.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("time weights must be finite and >= 0".into()));
        }
        Ok(Self {
            predictions,
            observed,
            time_weights,
            session_indices,
            learner_ids,
            dropped_folds: Vec::new(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.observed.len()
    }

    pub fn n_learners(&self) -> usize {
        self.predictions.cols()
    }

    fn check_non_empty(&self) -> Result<()> {
        if self.n_rows() == 0 {
            return Err(Error::EmptyInput("meta-level dataset"));
        }
        if self.n_learners() == 0 {
            return Err(Error::EmptyInput("meta-level learners"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaWeights {
    pub alpha: Vec<f64>,
    pub convexified: bool,
}

/// `1` for sessions within `recency_window` of `tau`, else
/// `(1 - delta)^(tau - t)`.
pub fn time_weights(tau: usize, sessions: &[usize], delta: f64, recency_window: usize) -> Vec<f64> {
    sessions
        .iter()
        .map(|&t| {
            if t + recency_window >= tau {
                1.0
            } else {
                powi(1.0 - delta, (tau - t) as i32)
            }
        })
        .collect()
}

pub fn cumulative_weighted_loss(observed: &[f64], predicted: &[f64], omega: &[f64], loss: LossKind) -> Result<f64> {
    let n = observed.len();
    for len in [predicted.len(), omega.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, found: len });
        }
    }
    let total = observed
        .iter()
        .zip(predicted)
        .zip(omega)
        .map(|((&y, &p), &w)| match loss {
            LossKind::Squared => w * (y - p) * (y - p),
            LossKind::NegativeLogLikelihood => {
                let p = p.clamp(NLL_CLAMP, 1.0 - NLL_CLAMP);
                -w * (y * ln(p) + (1.0 - y) * ln(1.0 - p))
            }
        })
        .sum();
    Ok(total)
}

/// Time-weighted NNLS stacking weights without intercept. With
/// `convexify` the solution is divided by its sum afterwards (uniform
/// weights if the solution is all zero).
pub fn solve_nnls(meta: &MetaDataset, convexify: bool) -> Result<AlphaWeights> {
    meta.check_non_empty()?;
    let mut alpha = nnls_weighted(&meta.predictions, &meta.observed, &meta.time_weights);
    if convexify {
        let total: f64 = alpha.iter().sum();
        if total > 0.0 {
            alpha.iter_mut().for_each(|a| *a /= total);
        } else {
            let c = alpha.len() as f64;
            alpha.iter_mut().for_each(|a| *a = 1.0 / c);
        }
    }
    Ok(AlphaWeights {
        alpha,
        convexified: convexify,
    })
}

/// Per-learner cumulative weighted loss over the meta rows.
pub fn learner_losses(meta: &MetaDataset, loss: LossKind) -> Result<Vec<f64>> {
    (0..meta.n_learners())
        .map(|c| cumulative_weighted_loss(&meta.observed, &meta.predictions.column(c), &meta.time_weights, loss))
        .collect()
}

/// Index of the learner with the smallest cumulative weighted loss; ties
/// go to the lowest index.
pub fn dsl_select(meta: &MetaDataset, loss: LossKind) -> Result<usize> {
    meta.check_non_empty()?;
    let losses = learner_losses(meta, loss)?;
    let mut best = 0;
    for (c, l) in losses.iter().enumerate().skip(1) {
        if *l < losses[best] {
            best = c;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy)]
pub enum Combination<'a> {
    Weights(&'a [f64]),
    Choice(usize),
}

/// Combines candidate predictions and clamps to `bounds`; the flag is set
/// when clamping changed the value.
pub fn combine_and_truncate(predictions: &[f64], how: Combination<'_>, bounds: (f64, f64)) -> Result<(f64, bool)> {
    if predictions.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("candidate predictions"));
    }
    let value = match how {
        Combination::Weights(alpha) => {
            if alpha.len() != predictions.len() {
                return Err(Error::LengthMismatch {
                    expected: predictions.len(),
                    found: alpha.len(),
                });
            }
            alpha.iter().zip(predictions).map(|(a, p)| a * p).sum::<f64>()
        }
        Combination::Choice(k) => *predictions.get(k).ok_or(Error::LengthMismatch {
            expected: predictions.len(),
            found: k + 1,
        })?,
    };
    if !value.is_finite() {
        return Err(Error::NonFinite("combined prediction"));
    }
    let clamped = value.clamp(bounds.0, bounds.1);
    Ok((clamped, clamped != value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn meta(cols: &[&[f64]], y: &[f64], w: &[f64]) -> MetaDataset {
        let n = y.len();
        let rows: Vec<Vec<f64>> = (0..n).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
        MetaDataset::new(
            Matrix::from_rows(&rows),
            y.to_vec(),
            w.to_vec(),
            (1..=n).collect(),
            (0..cols.len()).map(|c| c.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn time_weight_examples() {
        assert_eq!(time_weights(20, &[20], 0.1, 5), vec![1.0]);
        let w = time_weights(20, &[10], 0.1, 5)[0];
        assert!((w - 0.3486784401).abs() < 1e-12);
        assert!(time_weights(20, &[1, 5, 15, 20], 0.0, 5).iter().all(|&w| w == 1.0));
        assert_eq!(time_weights(20, &[15, 14], 0.1, 5)[0], 1.0);
        assert!((time_weights(20, &[14], 0.1, 5)[0] - 0.9f64.powi(6)).abs() < 1e-15);
    }

    #[test]
    fn loss_examples() {
        assert_eq!(cumulative_weighted_loss(&[1.0, 2.0], &[1.0, 2.0], &[3.0, 0.5], LossKind::Squared).unwrap(), 0.0);
        assert_eq!(cumulative_weighted_loss(&[0.0, 2.0], &[1.0, 0.0], &[1.0, 1.0], LossKind::Squared).unwrap(), 5.0);
        let nll = cumulative_weighted_loss(&[1.0], &[0.5], &[1.0], LossKind::NegativeLogLikelihood).unwrap();
        assert!((nll - core::f64::consts::LN_2).abs() < 1e-15);
        assert!(cumulative_weighted_loss(&[1.0], &[1.0, 2.0], &[1.0], LossKind::Squared).is_err());
        // clamped before the log
        let nll = cumulative_weighted_loss(&[1.0], &[0.0], &[1.0], LossKind::NegativeLogLikelihood).unwrap();
        assert!(nll.is_finite());
    }

    #[test]
    fn perfect_column_takes_all_weight() {
        let y = [3.0, 5.0, 4.0, 8.0];
        let m = meta(&[&y, &[1.0, -1.0, 1.0, -1.0]], &y, &[1.0; 4]);
        let a = solve_nnls(&m, false).unwrap();
        assert!((a.alpha[0] - 1.0).abs() < 1e-10);
        assert!(a.alpha[1].abs() < 1e-10);
    }

    #[test]
    fn two_constants_reach_zero_residual() {
        let m = meta(&[&[10.0; 5], &[30.0; 5]], &[20.0; 5], &[1.0; 5]);
        let a = solve_nnls(&m, false).unwrap();
        let fit = 10.0 * a.alpha[0] + 30.0 * a.alpha[1];
        assert!((fit - 20.0).abs() < 1e-9);
        assert!(a.alpha.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn anti_correlated_column_is_zeroed() {
        let y = [10.0, 12.0, 9.0, 14.0, 11.0];
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let m = meta(&[&neg, &[1.0; 5]], &y, &[1.0; 5]);
        let a = solve_nnls(&m, false).unwrap();
        assert_eq!(a.alpha[0], 0.0);
        assert!((a.alpha[1] - 11.2).abs() < 1e-10);
    }

    #[test]
    fn convexified_weights_sum_to_one() {
        let m = meta(&[&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]], &[2.0, 3.0, 4.5], &[1.0; 3]);
        let raw = solve_nnls(&m, false).unwrap();
        let cvx = solve_nnls(&m, true).unwrap();
        assert!((cvx.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let total: f64 = raw.alpha.iter().sum();
        for (r, c) in raw.alpha.iter().zip(&cvx.alpha) {
            assert!((r / total - c).abs() < 1e-15);
        }
        // all-zero solution falls back to uniform weights
        let m = meta(&[&[-1.0, -2.0], &[-3.0, -1.0]], &[1.0, 2.0], &[1.0; 2]);
        assert_eq!(solve_nnls(&m, true).unwrap().alpha, vec![0.5, 0.5]);
    }

    #[test]
    fn dsl_examples() {
        let y = [1.0, 2.0, 3.0];
        let m = meta(&[&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], &y], &y, &[1.0; 3]);
        assert_eq!(dsl_select(&m, LossKind::Squared).unwrap(), 2);
        let m = meta(&[&[0.0, 2.0, 3.0], &[0.0, 2.0, 3.0]], &y, &[1.0; 3]);
        assert_eq!(dsl_select(&m, LossKind::Squared).unwrap(), 0);
    }

    #[test]
    fn recency_weighting_flips_the_winner() {
        // hand-computed: A errs early (3, 3, 0, 0), B errs late (0, 0, 2, 2)
        let y = [10.0, 10.0, 10.0, 10.0];
        let a = [13.0, 13.0, 10.0, 10.0];
        let b = [10.0, 10.0, 12.0, 12.0];
        // unweighted: A = 18, B = 8 -> B wins
        let m = meta(&[&a, &b], &y, &[1.0; 4]);
        assert_eq!(dsl_select(&m, LossKind::Squared).unwrap(), 1);
        // weights (0.1, 0.1, 1, 1): A = 1.8, B = 8 -> A wins
        let m = meta(&[&a, &b], &y, &[0.1, 0.1, 1.0, 1.0]);
        assert_eq!(dsl_select(&m, LossKind::Squared).unwrap(), 0);
    }

    #[test]
    fn empty_meta_is_an_error() {
        let m = MetaDataset::new(Matrix::zeros(0, 2), vec![], vec![], vec![], vec!["a".into(), "b".into()]).unwrap();
        assert!(matches!(solve_nnls(&m, false), Err(Error::EmptyInput(_))));
        assert!(matches!(dsl_select(&m, LossKind::Squared), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine_and_truncate(&[5.0, 7.0], Combination::Weights(&[0.0, 1.0]), (0.0, 50.0)).unwrap(), (7.0, false));
        assert_eq!(combine_and_truncate(&[60.0], Combination::Choice(0), (0.0, 50.0)).unwrap(), (50.0, true));
        assert_eq!(combine_and_truncate(&[10.0, 30.0], Combination::Weights(&[0.5, 0.5]), (0.0, 50.0)).unwrap(), (20.0, false));
        assert!(combine_and_truncate(&[f64::NAN], Combination::Choice(0), (0.0, 1.0)).is_err());
        assert_eq!(combine_and_truncate(&[0.9, 0.8], Combination::Weights(&[1.0, 0.5]), (0.0, 1.0)).unwrap(), (1.0, true));
    }
}
