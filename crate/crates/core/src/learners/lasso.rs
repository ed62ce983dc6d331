//! Weighted lasso by cyclic coordinate descent on centred inputs.
//!
//! Objective: `sum w (y - b0 - x.beta)^2 / (2 W) + lambda * ||beta||_1`
//! with `W = sum w`; the intercept is not penalised.

use alloc::vec;
use alloc::vec::Vec;

use super::Model;
use crate::linalg::Matrix;
use crate::math::{abs, sqrt};

/// Soft-thresholding operator `sign(z) * max(|z| - gamma, 0)`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

pub(super) struct LassoFit {
    pub intercept: f64,
    pub beta: Vec<f64>,
    pub converged: bool,
}

pub(super) fn fit_lasso(x: &Matrix, y: &[f64], w: &[f64], lambda: f64, max_sweeps: usize, tol: f64) -> (Model, bool) {
    let fit = coordinate_descent(x, y, w, lambda, None, max_sweeps, tol, None);
    (
        Model::Linear {
            intercept: fit.intercept,
            coefficients: fit.beta,
        },
        fit.converged,
    )
}

#[allow(clippy::too_many_arguments)]
pub(super) fn coordinate_descent(
    x: &Matrix,
    y: &[f64],
    w: &[f64],
    lambda: f64,
    warm: Option<&[f64]>,
    max_sweeps: usize,
    tol: f64,
    mut trace: Option<&mut Vec<f64>>,
) -> LassoFit {
    let (n, p) = (x.rows(), x.cols());
    let wsum: f64 = w.iter().sum();
    let mut xm = vec![0.0; p];
    let mut ym = 0.0;
    for i in 0..n {
        for (j, v) in x.row(i).iter().enumerate() {
            xm[j] += w[i] * v;
        }
        ym += w[i] * y[i];
    }
    xm.iter_mut().for_each(|v| *v /= wsum);
    ym /= wsum;

    // centred columns, column-major
    let mut xc = vec![0.0; n * p];
    for i in 0..n {
        for j in 0..p {
            xc[j * n + i] = x.get(i, j) - xm[j];
        }
    }
    let curv: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| w[i] * xc[j * n + i] * xc[j * n + i]).sum::<f64>() / wsum)
        .collect();
    let mut beta: Vec<f64> = match warm {
        Some(b) => b.to_vec(),
        None => vec![0.0; p],
    };
    let mut r: Vec<f64> = (0..n).map(|i| y[i] - ym).collect();
    for j in 0..p {
        if beta[j] != 0.0 {
            for i in 0..n {
                r[i] -= xc[j * n + i] * beta[j];
            }
        }
    }
    let y_scale = sqrt((0..n).map(|i| w[i] * (y[i] - ym) * (y[i] - ym)).sum::<f64>() / wsum).max(1e-300);
    let objective = |r: &[f64], beta: &[f64]| -> f64 {
        (0..n).map(|i| w[i] * r[i] * r[i]).sum::<f64>() / (2.0 * wsum)
            + lambda * beta.iter().map(|b| abs(*b)).sum::<f64>()
    };
    if let Some(t) = trace.as_deref_mut() {
        t.push(objective(&r, &beta));
    }

    let mut converged = false;
    for _ in 0..max_sweeps.max(1) {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let col = &xc[j * n..(j + 1) * n];
            if curv[j] <= 0.0 {
                if beta[j] != 0.0 {
                    beta[j] = 0.0;
                }
                continue;
            }
            let rho: f64 = (0..n).map(|i| w[i] * col[i] * r[i]).sum::<f64>() / wsum + curv[j] * beta[j];
            let new = soft_threshold(rho, lambda) / curv[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                for i in 0..n {
                    r[i] -= col[i] * delta;
                }
                beta[j] = new;
                max_change = max_change.max(abs(delta) * sqrt(curv[j]));
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(objective(&r, &beta));
        }
        if max_change <= tol * y_scale {
            converged = true;
            break;
        }
    }
    let intercept = ym - xm.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
    LassoFit {
        intercept,
        beta,
        converged,
    }
}
