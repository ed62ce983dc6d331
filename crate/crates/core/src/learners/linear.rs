//! Logistic counterparts of the linear family, fitted by iteratively
//! reweighted least squares with optional ridge or lasso penalties.

use alloc::vec::Vec;

use super::lasso::coordinate_descent;
use super::Model;
use crate::linalg::{dot, weighted_ridge, Matrix};
use crate::math::{abs, ln, logit, sigmoid};

const MIN_VARIANCE: f64 = 1e-10;

/// Minimises `-loglik / W + l2/2 ||beta||^2 + l1 ||beta||_1` (weights `w`,
/// `W = sum w`). Convergence follows the relative objective change test
/// `|f - f_old| / (|f| + 0.1) < 1e-8`.
pub(super) fn fit_logistic(
    x: &Matrix,
    y: &[f64],
    w: &[f64],
    l2: f64,
    l1: f64,
    max_iter: usize,
    tol: f64,
) -> (Model, bool) {
    let n = x.rows();
    let wsum: f64 = w.iter().sum();
    let prevalence = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / wsum;
    let mut b0 = logit(prevalence.clamp(1e-6, 1.0 - 1e-6));
    let mut beta = alloc::vec![0.0; x.cols()];
    let objective = |b0: f64, beta: &[f64]| -> f64 {
        let mut nll = 0.0;
        for i in 0..n {
            let p = sigmoid(b0 + dot(x.row(i), beta)).clamp(1e-300, 1.0 - 1e-16);
            nll -= w[i] * (y[i] * ln(p) + (1.0 - y[i]) * ln(1.0 - p));
        }
        nll / wsum
            + 0.5 * l2 * beta.iter().map(|b| b * b).sum::<f64>()
            + l1 * beta.iter().map(|b| abs(*b)).sum::<f64>()
    };
    let mut obj = objective(b0, &beta);
    for _ in 0..max_iter.max(1) {
        let mut z = Vec::with_capacity(n);
        let mut wi = Vec::with_capacity(n);
        for i in 0..n {
            let eta = b0 + dot(x.row(i), &beta);
            let p = sigmoid(eta);
            let v = (p * (1.0 - p)).max(MIN_VARIANCE);
            z.push(eta + (y[i] - p) / v);
            wi.push(w[i] * v);
        }
        let wi_sum: f64 = wi.iter().sum();
        let scale = wsum / wi_sum;
        if l1 > 0.0 {
            let fit = coordinate_descent(x, &z, &wi, l1 * scale, Some(&beta), 1000, tol, None);
            b0 = fit.intercept;
            beta = fit.beta;
        } else {
            let (i, b) = weighted_ridge(x, &z, &wi, l2 * scale);
            b0 = i;
            beta = b;
        }
        let new = objective(b0, &beta);
        if !new.is_finite() {
            break;
        }
        let done = abs(new - obj) / (abs(new) + 0.1) < 1e-8;
        obj = new;
        if done {
            return (Model::Linear { intercept: b0, coefficients: beta }, true);
        }
    }
    (Model::Linear { intercept: b0, coefficients: beta }, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_a_hand_built_fixture() {
        // 20 points, label 1 iff x0 + x1 > 1, with a margin around the boundary
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let a = (i % 5) as f64 * 0.25;
            let b = (i / 5) as f64 * 0.3;
            let s = a + b;
            let shift = if s > 1.0 { 0.2 } else { -0.2 };
            rows.push([a + shift, b]);
            y.push(if s > 1.0 { 1.0 } else { 0.0 });
        }
        let x = Matrix::from_rows(&rows);
        let w = alloc::vec![1.0; 20];
        let (model, _) = fit_logistic(&x, &y, &w, 0.0, 0.0, 100, 1e-7);
        if let Model::Linear { intercept, coefficients } = model {
            for (r, t) in rows.iter().zip(&y) {
                let p = sigmoid(intercept + dot(r, &coefficients));
                assert_eq!(p > 0.5, *t == 1.0);
            }
        } else {
            panic!()
        }
    }

    #[test]
    fn penalised_logistic_converges_on_overlapping_classes() {
        let rows: Vec<[f64; 1]> = (0..40).map(|i| [i as f64 / 10.0]).collect();
        let y: Vec<f64> = (0..40).map(|i| if (i * 7) % 10 < i / 4 { 1.0 } else { 0.0 }).collect();
        let x = Matrix::from_rows(&rows);
        let w = alloc::vec![1.0; 40];
        let (_, ok) = fit_logistic(&x, &y, &w, 0.1, 0.0, 100, 1e-7);
        assert!(ok);
        let (m, ok) = fit_logistic(&x, &y, &w, 0.0, 0.05, 100, 1e-7);
        assert!(ok);
        assert!(matches!(m, Model::Linear { .. }));
    }
}
