//! Lawson–Hanson active-set non-negative least squares.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{lstsq_colmajor, Matrix};
use crate::math::sqrt;

/// Minimises `sum_r w_r (b_r - A_r . x)^2` subject to `x >= 0`.
pub fn nnls_weighted(a: &Matrix, b: &[f64], w: &[f64]) -> Vec<f64> {
    let (m, n) = (a.rows(), a.cols());
    // column-major sqrt(w)-scaled copy
    let mut cols = vec![0.0; m * n];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        let s = sqrt(w[i]);
        for j in 0..n {
            cols[j * m + i] = s * a.get(i, j);
        }
        rhs[i] = s * b[i];
    }
    nnls_colmajor(&cols, m, &rhs)
}

fn dual(cols: &[f64], m: usize, b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut r = b.to_vec();
    for j in 0..n {
        if x[j] != 0.0 {
            for i in 0..m {
                r[i] -= cols[j * m + i] * x[j];
            }
        }
    }
    (0..n).map(|j| (0..m).map(|i| cols[j * m + i] * r[i]).sum()).collect()
}

fn solve_passive(cols: &[f64], m: usize, b: &[f64], passive: &[usize], n: usize) -> Vec<f64> {
    let mut a = Vec::with_capacity(m * passive.len());
    for &j in passive {
        a.extend_from_slice(&cols[j * m..(j + 1) * m]);
    }
    let sub = lstsq_colmajor(a, m, b.to_vec(), 1e-12);
    let mut z = vec![0.0; n];
    for (k, &j) in passive.iter().enumerate() {
        z[j] = sub[k];
    }
    z
}

/// Lawson–Hanson on a column-major `m x n` system.
pub fn nnls_colmajor(cols: &[f64], m: usize, b: &[f64]) -> Vec<f64> {
    let n = if m == 0 { 0 } else { cols.len() / m };
    let mut x = vec![0.0; n];
    if n == 0 {
        return x;
    }
    let col_norm = (0..n)
        .map(|j| sqrt(cols[j * m..(j + 1) * m].iter().map(|v| v * v).sum()))
        .fold(0.0_f64, f64::max);
    let b_norm = sqrt(b.iter().map(|v| v * v).sum());
    let tol = 1e-13 * (col_norm * b_norm).max(1e-300);
    let mut passive: Vec<usize> = Vec::new();
    let mut in_passive = vec![false; n];
    let mut blocked = vec![false; n];
    let max_outer = 3 * n + 30;

    for _ in 0..max_outer {
        let g = dual(cols, m, b, &x);
        let candidate = (0..n)
            .filter(|&j| !in_passive[j] && !blocked[j] && g[j] > tol)
            .max_by(|&p, &q| g[p].total_cmp(&g[q]).then(q.cmp(&p)));
        let Some(j) = candidate else { break };
        passive.push(j);
        in_passive[j] = true;
        let mut z = solve_passive(cols, m, b, &passive, n);
        if z[j] <= 0.0 {
            // numerically unable to enter; try the next candidate
            passive.pop();
            in_passive[j] = false;
            blocked[j] = true;
            continue;
        }
        let mut inner = 0;
        while passive.iter().any(|&k| z[k] <= 0.0) {
            inner += 1;
            if inner > 3 * n + 30 {
                break;
            }
            let step = passive
                .iter()
                .filter(|&&k| z[k] <= 0.0)
                .map(|&k| x[k] / (x[k] - z[k]))
                .fold(f64::INFINITY, f64::min);
            for &k in &passive {
                x[k] += step * (z[k] - x[k]);
            }
            let eps = 1e-15;
            passive.retain(|&k| {
                let keep = x[k] > eps;
                if !keep {
                    x[k] = 0.0;
                    in_passive[k] = false;
                }
                keep
            });
            z = solve_passive(cols, m, b, &passive, n);
        }
        for &k in &passive {
            x[k] = z[k];
        }
        blocked.iter_mut().for_each(|v| *v = false);
    }
    x
}
