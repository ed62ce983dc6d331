//! Dense row-major matrices and a rank-revealing symmetric solver.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from equally long rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Matrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for a symmetric positive semi-definite `A` (row-major,
/// `p x p`) with diagonally pivoted Cholesky. Directions whose Schur
/// complement pivot drops below `rel_tol * max(diag(A))` are treated as
/// dependent and get a zero coefficient, so the result is a basic solution
/// on rank-deficient systems.
pub fn solve_psd(a: &[f64], b: &[f64], rel_tol: f64) -> Vec<f64> {
    let p = b.len();
    debug_assert_eq!(a.len(), p * p);
    let mut x = vec![0.0; p];
    if p == 0 {
        return x;
    }
    let max_diag = (0..p).map(|i| a[i * p + i]).fold(0.0_f64, f64::max);
    if !(max_diag > 0.0) {
        return x;
    }
    let tol = rel_tol * max_diag;
    let mut perm: Vec<usize> = (0..p).collect();
    let mut diag: Vec<f64> = (0..p).map(|i| a[i * p + i]).collect();
    // l[i * p + k]: row i (permuted position), column k
    let mut l = vec![0.0; p * p];
    let mut rank = 0;
    for k in 0..p {
        let (best, &dmax) = diag[k..]
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, d)| (i + k, d))
            .unwrap();
        if !(dmax > tol) {
            break;
        }
        perm.swap(k, best);
        diag.swap(k, best);
        for m in 0..k {
            l.swap(k * p + m, best * p + m);
        }
        let lkk = sqrt(dmax);
        l[k * p + k] = lkk;
        for i in k + 1..p {
            let mut s = a[perm[i] * p + perm[k]];
            for m in 0..k {
                s -= l[i * p + m] * l[k * p + m];
            }
            let lik = s / lkk;
            l[i * p + k] = lik;
            diag[i] -= lik * lik;
        }
        rank = k + 1;
    }
    // forward: L y = b_perm
    let mut y = vec![0.0; rank];
    for i in 0..rank {
        let mut s = b[perm[i]];
        for m in 0..i {
            s -= l[i * p + m] * y[m];
        }
        y[i] = s / l[i * p + i];
    }
    // backward: L^T z = y
    let mut z = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = y[i];
        for m in i + 1..rank {
            s -= l[m * p + i] * z[m];
        }
        z[i] = s / l[i * p + i];
    }
    for i in 0..rank {
        x[perm[i]] = z[i];
    }
    x
}

/// Least squares `min ||A x - b||` by Householder QR with column pivoting.
/// `a` is column-major with `m` rows. Columns whose remaining norm falls
/// below `rel_tol` times the largest initial column norm are treated as
/// dependent and receive a zero coefficient.
pub fn lstsq_colmajor(mut a: Vec<f64>, m: usize, mut b: Vec<f64>, rel_tol: f64) -> Vec<f64> {
    let n = if m == 0 { 0 } else { a.len() / m };
    let mut x = vec![0.0; n];
    if m == 0 || n == 0 {
        return x;
    }
    let col_norm = |a: &[f64], j: usize, from: usize| -> f64 {
        sqrt(a[j * m + from..(j + 1) * m].iter().map(|v| v * v).sum())
    };
    let max_norm = (0..n).map(|j| col_norm(&a, j, 0)).fold(0.0_f64, f64::max);
    if !(max_norm > 0.0) {
        return x;
    }
    let tol = rel_tol * max_norm;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    for k in 0..m.min(n) {
        let (best, norm) = (k..n)
            .map(|j| (j, col_norm(&a, j, k)))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if !(norm > tol) {
            break;
        }
        if best != k {
            for i in 0..m {
                a.swap(k * m + i, best * m + i);
            }
            perm.swap(k, best);
        }
        let akk = a[k * m + k];
        let alpha = if akk >= 0.0 { -norm } else { norm };
        // v = a[k.., k] - alpha e_1, stored in place
        a[k * m + k] -= alpha;
        let vnorm2: f64 = a[k * m + k..(k + 1) * m].iter().map(|v| v * v).sum();
        if vnorm2 > 0.0 {
            for j in k + 1..n {
                let s: f64 = (k..m).map(|i| a[k * m + i] * a[j * m + i]).sum();
                let f = 2.0 * s / vnorm2;
                for i in k..m {
                    a[j * m + i] -= f * a[k * m + i];
                }
            }
            let s: f64 = (k..m).map(|i| a[k * m + i] * b[i]).sum();
            let f = 2.0 * s / vnorm2;
            for i in k..m {
                b[i] -= f * a[k * m + i];
            }
        }
        a[k * m + k] = alpha;
        rank = k + 1;
    }
    let mut z = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = b[i];
        for j in i + 1..rank {
            s -= a[j * m + i] * z[j];
        }
        z[i] = s / a[i * m + i];
    }
    for i in 0..rank {
        x[perm[i]] = z[i];
    }
    x
}

/// Weighted ridge regression with an unpenalised intercept:
/// minimises `sum w (y - b0 - x.beta)^2 / W + lambda * ||beta||^2` where
/// `W = sum w`. Returns `(b0, beta)`.
pub fn weighted_ridge(x: &Matrix, y: &[f64], w: &[f64], lambda: f64) -> (f64, Vec<f64>) {
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
    let extra = if lambda > 0.0 { p } else { 0 };
    let m = n + extra;
    let mut a = vec![0.0; m * p];
    let mut b = vec![0.0; m];
    for i in 0..n {
        let sw = sqrt(w[i]);
        for j in 0..p {
            a[j * m + i] = sw * (x.get(i, j) - xm[j]);
        }
        b[i] = sw * (y[i] - ym);
    }
    if extra > 0 {
        let s = sqrt(lambda * wsum);
        for j in 0..p {
            a[j * m + n + j] = s;
        }
    }
    let beta = lstsq_colmajor(a, m, b, 1e-10);
    let b0 = ym - dot(&xm, &beta);
    (b0, beta)
}

/// Weighted normal equations `X^T W X` and `X^T W y`, accumulated on
/// columns centred at their weighted means. Returns `(gram, xty, x_means,
/// y_mean, weight_total)`.
pub fn centered_normal_equations(
    x: &Matrix,
    y: &[f64],
    w: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64) {
    let (n, p) = (x.rows(), x.cols());
    let wsum: f64 = w.iter().sum();
    let mut xm = vec![0.0; p];
    let mut ym = 0.0;
    for i in 0..n {
        let row = x.row(i);
        for j in 0..p {
            xm[j] += w[i] * row[j];
        }
        ym += w[i] * y[i];
    }
    for v in xm.iter_mut() {
        *v /= wsum;
    }
    ym /= wsum;
    let mut gram = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    let mut centred = vec![0.0; p];
    for i in 0..n {
        let row = x.row(i);
        for j in 0..p {
            centred[j] = row[j] - xm[j];
        }
        let yc = y[i] - ym;
        for j in 0..p {
            let wj = w[i] * centred[j];
            xty[j] += wj * yc;
            for k in j..p {
                gram[j * p + k] += wj * centred[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            gram[j * p + k] = gram[k * p + j];
        }
    }
    (gram, xty, xm, ym, wsum)
}
