//! Additive hinge-basis regression: greedy forward selection of hinge
//! pairs `max(0, x - c)`, `max(0, c - x)` with knots at observed values,
//! then backward pruning by generalised cross-validation.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Hyperparams, Model};
use crate::linalg::{lstsq_colmajor, Matrix};
use crate::math::{sqrt, weighted_mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HingeDirection {
    /// `max(0, x - knot)`
    Above,
    /// `max(0, knot - x)`
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HingeTerm {
    pub feature: usize,
    pub knot: f64,
    pub direction: HingeDirection,
    pub coefficient: f64,
}

impl HingeTerm {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        hinge(x[self.feature], self.knot, self.direction)
    }
}

#[inline]
fn hinge(v: f64, knot: f64, dir: HingeDirection) -> f64 {
    match dir {
        HingeDirection::Above => (v - knot).max(0.0),
        HingeDirection::Below => (knot - v).max(0.0),
    }
}

type Basis = (usize, f64, HingeDirection);

pub(super) fn fit_hinge(x: &Matrix, y: &[f64], w: &[f64], h: &Hyperparams) -> (Model, bool) {
    let terms = forward(x, y, w, h);
    let kept = prune(x, y, w, &terms, h.gcv_penalty);
    if kept.is_empty() {
        return (
            Model::Hinge {
                intercept: weighted_mean(y, Some(w)),
                terms: Vec::new(),
            },
            true,
        );
    }
    let coef = weighted_fit(x, y, w, &kept);
    let terms = kept
        .iter()
        .zip(&coef[1..])
        .map(|(&(feature, knot, direction), &coefficient)| HingeTerm {
            feature,
            knot,
            direction,
            coefficient,
        })
        .collect();
    (
        Model::Hinge {
            intercept: coef[0],
            terms,
        },
        true,
    )
}

fn candidate_knots(x: &Matrix, w: &[f64], j: usize, min_span: usize, max_knots: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..x.rows()).filter(|&i| w[i] > 0.0).map(|i| x.get(i, j)).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    if v.len() <= 2 * min_span {
        return Vec::new();
    }
    let mut inner: Vec<f64> = v[min_span..v.len() - min_span].to_vec();
    inner.dedup();
    // a knot at the minimum observed value makes the pair collinear with
    // the intercept and a plain linear term
    inner.retain(|&c| c > v[0] && c < v[v.len() - 1]);
    if inner.len() > max_knots && max_knots > 0 {
        let step = inner.len() as f64 / max_knots as f64;
        inner = (0..max_knots).map(|k| inner[(k as f64 * step) as usize]).collect();
    } else if max_knots == 0 {
        inner.clear();
    }
    inner
}

/// Weighted inner product.
fn wdot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((a, b), w)| a * b * w).sum()
}

fn orthogonalise(v: &mut [f64], q: &[Vec<f64>], w: &[f64]) {
    for _ in 0..2 {
        for qk in q {
            let c = wdot(v, qk, w);
            for (vi, qi) in v.iter_mut().zip(qk) {
                *vi -= c * qi;
            }
        }
    }
}

fn forward(x: &Matrix, y: &[f64], w: &[f64], h: &Hyperparams) -> Vec<Basis> {
    let n = x.rows();
    let wsum: f64 = w.iter().sum();
    let mut q: Vec<Vec<f64>> = vec![vec![1.0 / sqrt(wsum); n]];
    let ybar = weighted_mean(y, Some(w));
    let mut r: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let rss0 = wdot(&r, &r, w);
    let mut terms: Vec<Basis> = Vec::new();
    if !(rss0 > 0.0) {
        return terms;
    }
    let knots: Vec<Vec<f64>> = (0..x.cols())
        .map(|j| candidate_knots(x, w, j, h.min_span, h.max_knots))
        .collect();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    while terms.len() < h.max_basis {
        // (reduction, feature, knot, use_above, use_below)
        let mut best: Option<(f64, usize, f64, bool, bool)> = None;
        for (j, ks) in knots.iter().enumerate() {
            for &c in ks {
                if terms.iter().any(|t| t.0 == j && t.1 == c) {
                    continue;
                }
                for i in 0..n {
                    a[i] = hinge(x.get(i, j), c, HingeDirection::Above);
                    b[i] = hinge(x.get(i, j), c, HingeDirection::Below);
                }
                let (na, nb) = (wdot(&a, &a, w), wdot(&b, &b, w));
                orthogonalise(&mut a, &q, w);
                orthogonalise(&mut b, &q, w);
                let (aa, bb, ab) = (wdot(&a, &a, w), wdot(&b, &b, w), wdot(&a, &b, w));
                let (ar, br) = (wdot(&a, &r, w), wdot(&b, &r, w));
                let a_ok = aa > 1e-10 * na.max(1e-300);
                let b_ok = bb > 1e-10 * nb.max(1e-300);
                let single_a = if a_ok { ar * ar / aa } else { 0.0 };
                let single_b = if b_ok { br * br / bb } else { 0.0 };
                let det = aa * bb - ab * ab;
                let room_for_pair = terms.len() + 2 <= h.max_basis;
                let cand = if a_ok && b_ok && room_for_pair && det > 1e-10 * aa * bb {
                    ((ar * bb - br * ab) * ar + (br * aa - ar * ab) * br) / det
                } else {
                    0.0
                };
                let options = [(cand, true, true), (single_a, true, false), (single_b, false, true)];
                for (red, ua, ub) in options {
                    // rounding-level differences do not count, so ties go
                    // to the first candidate whatever the row order
                    if red > 0.0 && best.is_none_or(|bst| red > bst.0 + 1e-9 * bst.0 + 1e-12 * rss0) {
                        best = Some((red, j, c, ua, ub));
                    }
                }
            }
        }
        let Some((red, j, c, ua, ub)) = best else { break };
        if red <= 1e-10 * rss0 {
            break;
        }
        for (dir, used) in [(HingeDirection::Above, ua), (HingeDirection::Below, ub)] {
            if !used {
                continue;
            }
            let mut v: Vec<f64> = (0..n).map(|i| hinge(x.get(i, j), c, dir)).collect();
            orthogonalise(&mut v, &q, w);
            let norm = sqrt(wdot(&v, &v, w));
            if !(norm > 0.0) {
                continue;
            }
            v.iter_mut().for_each(|e| *e /= norm);
            let coef = wdot(&v, &r, w);
            for (ri, vi) in r.iter_mut().zip(&v) {
                *ri -= coef * vi;
            }
            q.push(v);
            terms.push((j, c, dir));
        }
    }
    terms
}

/// Weighted least-squares coefficients on `[1, terms...]`.
fn weighted_fit(x: &Matrix, y: &[f64], w: &[f64], terms: &[Basis]) -> Vec<f64> {
    let n = x.rows();
    let m = terms.len() + 1;
    let mut a = vec![0.0; n * m];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let sw = sqrt(w[i]);
        a[i] = sw;
        for (k, &(j, c, d)) in terms.iter().enumerate() {
            a[(k + 1) * n + i] = sw * hinge(x.get(i, j), c, d);
        }
        rhs[i] = sw * y[i];
    }
    lstsq_colmajor(a, n, rhs, 1e-10)
}

fn weighted_rss(x: &Matrix, y: &[f64], w: &[f64], terms: &[Basis]) -> f64 {
    let coef = weighted_fit(x, y, w, terms);
    (0..x.rows())
        .map(|i| {
            let row = x.row(i);
            let fit = coef[0]
                + terms
                    .iter()
                    .zip(&coef[1..])
                    .map(|(&(j, c, d), b)| b * hinge(row[j], c, d))
                    .sum::<f64>();
            w[i] * (y[i] - fit) * (y[i] - fit)
        })
        .sum()
}

fn prune(x: &Matrix, y: &[f64], w: &[f64], terms: &[Basis], penalty: f64) -> Vec<Basis> {
    let n_eff = w.iter().filter(|v| **v > 0.0).count() as f64;
    let wsum: f64 = w.iter().sum();
    let gcv = |rss: f64, m: usize| -> f64 {
        let c = (m + 1) as f64 + penalty * m as f64 / 2.0;
        if c >= n_eff {
            f64::INFINITY
        } else {
            let d = 1.0 - c / n_eff;
            rss / wsum / (d * d)
        }
    };
    let mut current: Vec<Basis> = terms.to_vec();
    let ybar = weighted_mean(y, Some(w));
    let tss: f64 = y.iter().zip(w).map(|(v, w)| w * (v - ybar) * (v - ybar)).sum();
    let slack = |v: f64| 1e-9 * v.abs() + 1e-12 * tss;
    let mut best = (gcv(weighted_rss(x, y, w, &current), current.len()), current.clone());
    while !current.is_empty() {
        let rss: Vec<f64> = (0..current.len())
            .map(|k| {
                let mut sub = current.clone();
                sub.remove(k);
                weighted_rss(x, y, w, &sub)
            })
            .collect();
        let min = rss.iter().copied().fold(f64::INFINITY, f64::min);
        let drop = (0..rss.len()).find(|&k| rss[k] <= min + slack(min)).unwrap();
        current.remove(drop);
        let score = gcv(rss[drop], current.len());
        if score <= best.0 + slack(best.0) / wsum {
            best = (score, current.clone());
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn predict(m: &Model, x: &[f64]) -> f64 {
        match m {
            Model::Hinge { intercept, terms } => intercept + terms.iter().map(|t| t.coefficient * t.eval(x)).sum::<f64>(),
            _ => panic!(),
        }
    }

    #[test]
    fn recovers_a_single_kink() {
        let rows: Vec<[f64; 2]> = (0..80).map(|i| [i as f64 / 8.0, ((i * 7) % 13) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 1.0 + 2.0 * (r[0] - 4.0).max(0.0)).collect();
        let x = Matrix::from_rows(&rows);
        let w = vec![1.0; 80];
        let (m, ok) = fit_hinge(&x, &y, &w, &Hyperparams::default());
        assert!(ok);
        for (r, t) in rows.iter().zip(&y) {
            assert!((predict(&m, r) - t).abs() < 1e-8);
        }
        if let Model::Hinge { terms, .. } = &m {
            assert!(terms.iter().all(|t| t.feature == 0));
        }
    }

    #[test]
    fn no_basis_is_the_mean_learner() {
        let rows: Vec<[f64; 1]> = (0..30).map(|i| [i as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| ((i * 17) % 7) as f64).collect();
        let w: Vec<f64> = (0..30).map(|i| 1.0 + (i % 2) as f64).collect();
        let x = Matrix::from_rows(&rows);
        let h = Hyperparams { max_basis: 0, ..Default::default() };
        let (m, _) = fit_hinge(&x, &y, &w, &h);
        assert_eq!(
            m,
            Model::Hinge { intercept: weighted_mean(&y, Some(&w)), terms: vec![] }
        );
        // a constant input offers no knots, so pruning also ends at the mean
        let flat = Matrix::from_rows(&vec![[2.0]; 30]);
        let (m, _) = fit_hinge(&flat, &y, &w, &Hyperparams::default());
        assert_eq!(
            m,
            Model::Hinge { intercept: weighted_mean(&y, Some(&w)), terms: vec![] }
        );
    }
}
