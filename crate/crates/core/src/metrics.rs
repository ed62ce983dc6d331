//! Accuracy, calibration, discrimination and net-benefit measures, per
//! individual, pooled and per session.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::PredictionRecord;
use crate::math::{abs, median, sqrt};
use crate::{Error, Result};

/// Tricube span used when none is given.
pub const DEFAULT_SPAN: f64 = 0.3;

const Z_975: f64 = 1.959_963_984_540_054;

fn check_pair(observed: &[f64], predicted: &[f64]) -> Result<()> {
    if observed.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: observed.len(),
            found: predicted.len(),
        });
    }
    if observed.is_empty() {
        return Err(Error::EmptyInput("observed values"));
    }
    Ok(())
}

/// Median absolute error and mean squared error.
pub fn accuracy_stats(observed: &[f64], predicted: &[f64]) -> Result<(f64, f64)> {
    check_pair(observed, predicted)?;
    let abs_err: Vec<f64> = observed.iter().zip(predicted).map(|(y, p)| abs(y - p)).collect();
    let mse = abs_err.iter().map(|e| e * e).sum::<f64>() / abs_err.len() as f64;
    Ok((median(&abs_err), mse))
}

/// Calibration-in-the-large (mean residual) and the OLS slope of observed
/// on predicted; the slope is `None` when the predictions are constant.
pub fn calibration_stats(observed: &[f64], predicted: &[f64]) -> Result<(f64, Option<f64>)> {
    check_pair(observed, predicted)?;
    if observed.len() < 2 {
        return Err(Error::EmptyInput("calibration needs at least two points"));
    }
    let n = observed.len() as f64;
    let intercept = observed.iter().zip(predicted).map(|(y, p)| y - p).sum::<f64>() / n;
    Ok((intercept, ols_slope(predicted, observed)))
}

fn ols_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx > 0.0 && sxx.is_finite() {
        Some(sxy / sxx)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMethod {
    #[default]
    Binned,
    LocalLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    /// (predicted, smoothed observed), sorted by predicted.
    pub points: Vec<(f64, f64)>,
    pub method: CurveMethod,
}

/// Binned: `resolution` equal-count bins of the sorted predictions.
/// Local linear: tricube local regression with [`DEFAULT_SPAN`] on
/// `resolution` evenly spaced predicted values.
pub fn calibration_curve(observed: &[f64], predicted: &[f64], method: CurveMethod, resolution: usize) -> Result<CalibrationCurve> {
    check_pair(observed, predicted)?;
    let n = observed.len();
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be at least 1".into()));
    }
    let points = match method {
        CurveMethod::Binned => {
            if n < 2 * resolution {
                return Err(Error::EmptyInput("calibration bins need at least two points each"));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| predicted[a].total_cmp(&predicted[b]).then(a.cmp(&b)));
            (0..resolution)
                .map(|b| {
                    let bin = &order[b * n / resolution..(b + 1) * n / resolution];
                    let k = bin.len() as f64;
                    (
                        bin.iter().map(|&i| predicted[i]).sum::<f64>() / k,
                        bin.iter().map(|&i| observed[i]).sum::<f64>() / k,
                    )
                })
                .collect()
        }
        CurveMethod::LocalLinear => {
            if n < 10 {
                return Err(Error::EmptyInput("local-linear calibration needs at least ten points"));
            }
            let lo = predicted.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = predicted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let grid: Vec<f64> = if resolution == 1 {
                alloc::vec![(lo + hi) / 2.0]
            } else {
                (0..resolution)
                    .map(|k| lo + (hi - lo) * k as f64 / (resolution - 1) as f64)
                    .collect()
            };
            let fitted = local_linear(predicted, observed, &grid, DEFAULT_SPAN)?;
            grid.into_iter().zip(fitted).collect()
        }
    };
    Ok(CalibrationCurve { points, method })
}

/// Tricube-weighted local linear regression of `y` on `x` evaluated at
/// `at`; each fit uses the nearest `ceil(span * n)` points (at least 2).
pub fn local_linear(x: &[f64], y: &[f64], at: &[f64], span: f64) -> Result<Vec<f64>> {
    check_pair(x, y)?;
    if !(span > 0.0) {
        return Err(Error::InvalidParameter("span must be positive".into()));
    }
    let n = x.len();
    let q = ((span * n as f64).ceil() as usize).clamp(2.min(n), n);
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    at.iter()
        .map(|&x0| {
            dist.clear();
            dist.extend(x.iter().enumerate().map(|(i, &xi)| (abs(xi - x0), i)));
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let h = dist[q - 1].0 * 1.000_001;
            let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(d, i) in &dist[..q] {
                let w = if h > 0.0 {
                    let u = d / h;
                    let c = 1.0 - u * u * u;
                    c * c * c
                } else {
                    1.0
                };
                let dx = x[i] - x0;
                sw += w;
                sx += w * dx;
                sy += w * y[i];
                sxx += w * dx * dx;
                sxy += w * dx * y[i];
            }
            let det = sw * sxx - sx * sx;
            if det > 1e-12 * sw * sxx.max(f64::MIN_POSITIVE) {
                Ok((sxx * sy - sx * sxy) / det)
            } else {
                Ok(sy / sw)
            }
        })
        .collect()
}

fn check_labels(labels: &[f64]) -> Result<(usize, usize)> {
    if labels.iter().any(|&l| l != 0.0 && l != 1.0) {
        return Err(Error::NonBinaryTarget);
    }
    let pos = labels.iter().filter(|&&l| l == 1.0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined("only one outcome class present"));
    }
    Ok((pos, neg))
}

/// Area under the ROC curve by midranks, with an optional 95% interval
/// from the Hanley–McNeil variance.
pub fn auroc(labels: &[f64], scores: &[f64], ci: bool) -> Result<(f64, Option<(f64, f64)>)> {
    check_pair(labels, scores)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    let (n1, n0) = check_labels(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] == 1.0 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let (p, q) = (n1 as f64, n0 as f64);
    let auc = (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q);
    let interval = ci.then(|| {
        let q1 = auc / (2.0 - auc);
        let q2 = 2.0 * auc * auc / (1.0 + auc);
        let var = (auc * (1.0 - auc) + (p - 1.0) * (q1 - auc * auc) + (q - 1.0) * (q2 - auc * auc)) / (p * q);
        let half = Z_975 * sqrt(var.max(0.0));
        ((auc - half).max(0.0), (auc + half).min(1.0))
    });
    Ok((auc, interval))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetBenefitWeight {
    /// `p / (1 - p)` with `p` the outcome prevalence.
    #[default]
    PrevalenceOdds,
    /// `t / (1 - t)` at each threshold `t`.
    ThresholdOdds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionCurve {
    pub thresholds: Vec<f64>,
    pub net_benefit: Vec<f64>,
    pub prevalence: f64,
}

/// Net benefit `TP/n - FP/n * w` where scores at or above a threshold are
/// called positive.
pub fn decision_curve(labels: &[f64], scores: &[f64], thresholds: &[f64], weight: NetBenefitWeight) -> Result<DecisionCurve> {
    check_pair(labels, scores)?;
    let (n1, _) = check_labels(labels)?;
    let n = labels.len() as f64;
    let prevalence = n1 as f64 / n;
    let net_benefit = thresholds
        .iter()
        .map(|&t| {
            let w = match weight {
                NetBenefitWeight::PrevalenceOdds => prevalence / (1.0 - prevalence),
                NetBenefitWeight::ThresholdOdds => {
                    if !(0.0..1.0).contains(&t) {
                        return Err(Error::Undefined("threshold odds need thresholds in [0, 1)"));
                    }
                    t / (1.0 - t)
                }
            };
            let (mut tp, mut fp) = (0usize, 0usize);
            for (&l, &s) in labels.iter().zip(scores) {
                if s >= t {
                    if l == 1.0 {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            Ok(tp as f64 / n - fp as f64 / n * w)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DecisionCurve {
        thresholds: thresholds.to_vec(),
        net_benefit,
        prevalence,
    })
}

/// Which prediction of a record is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    Dsl,
    EslConvex,
    EslNonconvex,
    Candidate(usize),
}

impl Predictor {
    pub fn value(&self, r: &PredictionRecord) -> f64 {
        match *self {
            Predictor::Dsl => r.dsl.value,
            Predictor::EslConvex => r.esl_convex.value,
            Predictor::EslNonconvex => r.esl_nonconvex.value,
            Predictor::Candidate(j) => r.candidate_predictions.get(j).copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMetric {
    Mdae,
    CalibIntercept,
    CalibSlope,
}

/// Per-session aggregate across individuals: the median absolute error,
/// the median residual, or the OLS calibration slope over the
/// individuals' records at that session. With `smoothing_span > 0` the
/// series is smoothed by tricube local-linear regression.
pub fn time_profiles(records: &[PredictionRecord], predictor: Predictor, metric: ProfileMetric, smoothing_span: f64) -> Result<Vec<(u32, f64)>> {
    let mut by_session: BTreeMap<u32, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let (Some(y), p) = (r.observed, predictor.value(r)) else { continue };
        if p.is_finite() {
            let e = by_session.entry(r.session_index).or_default();
            e.0.push(y);
            e.1.push(p);
        }
    }
    let mut series = Vec::new();
    for (s, (y, p)) in &by_session {
        let v = match metric {
            ProfileMetric::Mdae => Some(median(&y.iter().zip(p).map(|(a, b)| abs(a - b)).collect::<Vec<_>>())),
            ProfileMetric::CalibIntercept => Some(median(&y.iter().zip(p).map(|(a, b)| a - b).collect::<Vec<_>>())),
            ProfileMetric::CalibSlope => ols_slope(p, y),
        };
        if let Some(v) = v {
            series.push((*s, v));
        }
    }
    if smoothing_span > 0.0 && series.len() >= 3 {
        let xs: Vec<f64> = series.iter().map(|(s, _)| *s as f64).collect();
        let ys: Vec<f64> = series.iter().map(|(_, v)| *v).collect();
        let smooth = local_linear(&xs, &ys, &xs, smoothing_span)?;
        for (pt, v) in series.iter_mut().zip(smooth) {
            pt.1 = v;
        }
    }
    Ok(series)
}

/// Summary of one set of paired outcomes and predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub n: usize,
    pub mdae: f64,
    pub mse: f64,
    pub calib_intercept: Option<f64>,
    pub calib_slope: Option<f64>,
    pub auroc: Option<f64>,
    pub auroc_ci: Option<(f64, f64)>,
    /// Why a metric is missing, when one is.
    pub notes: Vec<String>,
}

/// Labels for discrimination: `observed >= threshold`, or `observed`
/// itself when it is already binary (`threshold = None`).
pub fn summarize(observed: &[f64], predicted: &[f64], threshold: Option<f64>, ci: bool) -> Result<MetricSummary> {
    let (mdae, mse) = accuracy_stats(observed, predicted)?;
    let mut notes = Vec::new();
    let (calib_intercept, calib_slope) = match calibration_stats(observed, predicted) {
        Ok((i, s)) => {
            if s.is_none() {
                notes.push("calib_slope: constant predictions".into());
            }
            (Some(i), s)
        }
        Err(e) => {
            notes.push(alloc::format!("calibration: {e}"));
            (None, None)
        }
    };
    let labels: Vec<f64> = match threshold {
        Some(t) => observed.iter().map(|&y| if y >= t { 1.0 } else { 0.0 }).collect(),
        None => observed.to_vec(),
    };
    let (auroc, auroc_ci) = match auroc(&labels, predicted, ci) {
        Ok((a, c)) => (Some(a), c),
        Err(e) => {
            notes.push(alloc::format!("auroc: {e}"));
            (None, None)
        }
    };
    Ok(MetricSummary {
        n: observed.len(),
        mdae,
        mse,
        calib_intercept,
        calib_slope,
        auroc,
        auroc_ci,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualMetrics {
    pub individual_id: String,
    #[serde(flatten)]
    pub summary: MetricSummary,
}

/// Metrics per individual over records with an observed outcome and a
/// finite prediction, in individual order.
pub fn individual_metrics(records: &[PredictionRecord], predictor: Predictor, threshold: Option<f64>) -> Result<Vec<IndividualMetrics>> {
    let mut groups: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let p = predictor.value(r);
        if let (Some(y), true) = (r.observed, p.is_finite()) {
            let g = groups.entry(r.individual_id.as_str()).or_default();
            g.0.push(y);
            g.1.push(p);
        }
    }
    groups
        .into_iter()
        .map(|(id, (y, p))| {
            Ok(IndividualMetrics {
                individual_id: id.into(),
                summary: summarize(&y, &p, threshold, false)?,
            })
        })
        .collect()
}
