//! Gradient boosting of depth-limited regression trees (squared loss, or
//! log loss with Newton leaf values in binary mode).

use alloc::vec;
use alloc::vec::Vec;

use super::tree::{grow, GrowParams};
use super::{Hyperparams, Model};
use crate::linalg::Matrix;
use crate::math::{logit, sigmoid};

pub(super) fn fit_gbt(x: &Matrix, y: &[f64], w: &[f64], h: &Hyperparams, binary: bool) -> (Model, bool) {
    let (model, ok, _) = boost(x, y, w, h, binary, false);
    (model, ok)
}

/// Returns the model, a finiteness flag and optionally the weighted
/// training loss after every round (starting with the constant model).
fn boost(x: &Matrix, y: &[f64], w: &[f64], h: &Hyperparams, binary: bool, trace: bool) -> (Model, bool, Vec<f64>) {
    let n = x.rows();
    let wsum: f64 = w.iter().sum();
    let mean = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / wsum;
    let base = if binary { logit(mean.clamp(1e-6, 1.0 - 1e-6)) } else { mean };
    let mut f = vec![base; n];
    let params = GrowParams {
        max_depth: Some(h.max_depth),
        min_leaf: h.min_leaf as f64,
        mtry: None,
    };
    let ones = vec![1.0; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(h.rounds);
    let mut losses = Vec::new();
    let loss = |f: &[f64]| -> f64 {
        (0..n)
            .map(|i| {
                if binary {
                    let p = sigmoid(f[i]).clamp(1e-15, 1.0 - 1e-15);
                    -w[i] * (y[i] * crate::math::ln(p) + (1.0 - y[i]) * crate::math::ln(1.0 - p))
                } else {
                    w[i] * (y[i] - f[i]) * (y[i] - f[i])
                }
            })
            .sum()
    };
    if trace {
        losses.push(loss(&f));
    }
    for _ in 0..h.rounds {
        for i in 0..n {
            if binary {
                let p = sigmoid(f[i]);
                grad[i] = w[i] * (y[i] - p);
                hess[i] = w[i] * (p * (1.0 - p)).max(1e-12);
            } else {
                grad[i] = w[i] * (y[i] - f[i]);
                hess[i] = w[i];
            }
        }
        let tree = grow(x, &grad, &hess, &ones, (0..n).collect(), &params, None, None);
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += h.shrinkage * tree.predict(x.row(i));
        }
        trees.push(tree);
        if trace {
            losses.push(loss(&f));
        }
    }
    let ok = f.iter().all(|v| v.is_finite());
    (
        Model::Boosted {
            base,
            shrinkage: h.shrinkage,
            trees,
        },
        ok,
        losses,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Matrix, Vec<f64>, Vec<f64>) {
        let rows: Vec<[f64; 2]> = (0..60).map(|i| [(i % 13) as f64, ((i * 5) % 9) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| (r[0] - 6.0).abs() + 0.3 * r[1]).collect();
        let w: Vec<f64> = (0..60).map(|i| 1.0 + (i % 4) as f64 * 0.5).collect();
        (Matrix::from_rows(&rows), y, w)
    }

    #[test]
    fn zero_rounds_is_the_weighted_mean() {
        let (x, y, w) = fixture();
        let h = Hyperparams { rounds: 0, ..Default::default() };
        let (m, ok) = fit_gbt(&x, &y, &w, &h, false);
        assert!(ok);
        let mean = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>();
        assert_eq!(m, Model::Boosted { base: mean, shrinkage: h.shrinkage, trees: vec![] });
        let yb: Vec<f64> = (0..60).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect();
        let (m, _) = fit_gbt(&x, &yb, &vec![1.0; 60], &h, true);
        match m {
            Model::Boosted { base, .. } => assert!((sigmoid(base) - 0.25).abs() < 1e-12),
            _ => panic!(),
        }
    }

    #[test]
    fn training_loss_is_non_increasing() {
        let (x, y, w) = fixture();
        for shrinkage in [0.1, 0.5, 1.0] {
            let h = Hyperparams { rounds: 40, shrinkage, max_depth: 2, min_leaf: 3, ..Default::default() };
            let (_, _, losses) = boost(&x, &y, &w, &h, false, true);
            for pair in losses.windows(2) {
                assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{pair:?}");
            }
            assert!(losses.last().unwrap() < &losses[0]);
        }
    }
}
