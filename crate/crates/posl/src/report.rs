//! Metrics and plot-ready curves computed from prediction records.

use posl_core::engine::PredictionRecord;
use posl_core::learners::OutcomeMode;
use posl_core::metrics::{
    calibration_curve, decision_curve, individual_metrics, summarize, time_profiles, IndividualMetrics, MetricSummary,
    Predictor, ProfileMetric,
};
use serde::Serialize;

use crate::config::ReportConfig;
use crate::error::CliResult;
use crate::output::{fmt_f64, Provenance};
use crate::panel_csv::format_err;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictorMetrics {
    pub predictor: String,
    pub pooled: Option<MetricSummary>,
    pub individuals: Vec<IndividualMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub provenance: Provenance,
    pub mode: OutcomeMode,
    /// Continuous mode: an outcome at or above this counts as a positive
    /// label for AUROC and decision curves.
    pub label_threshold: Option<f64>,
    pub predictors: Vec<PredictorMetrics>,
    /// Curves or metrics that could not be computed, with the reason.
    pub notes: Vec<String>,
}

/// Rendered report files.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub metrics: MetricsReport,
    pub calibration_curve: String,
    pub decision_curve: String,
    pub time_profiles: String,
}

pub struct ReportInput<'a> {
    pub records: &'a [PredictionRecord],
    pub learner_ids: &'a [String],
    pub mode: OutcomeMode,
    pub threshold: f64,
    pub config: &'a ReportConfig,
    pub provenance: &'a Provenance,
}

/// The three super learners followed by every candidate, with names.
pub fn predictors(learner_ids: &[String]) -> Vec<(String, Predictor)> {
    let mut out = vec![
        ("dsl".to_string(), Predictor::Dsl),
        ("esl_convex".to_string(), Predictor::EslConvex),
        ("esl_nonconvex".to_string(), Predictor::EslNonconvex),
    ];
    out.extend(learner_ids.iter().enumerate().map(|(j, id)| (id.clone(), Predictor::Candidate(j))));
    out
}

fn paired(records: &[PredictionRecord], p: Predictor) -> (Vec<f64>, Vec<f64>) {
    records
        .iter()
        .filter_map(|r| {
            let v = p.value(r);
            r.observed.filter(|_| v.is_finite()).map(|y| (y, v))
        })
        .unzip()
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn render(w: csv::Writer<Vec<u8>>, prov: &Provenance) -> CliResult<String> {
    let body = w.into_inner().map_err(|e| crate::error::CliError::Format(e.to_string()))?;
    Ok(format!("{}{}", prov.header(), String::from_utf8_lossy(&body)))
}

pub fn build_report(input: &ReportInput<'_>) -> CliResult<ReportFiles> {
    let label_threshold = match input.mode {
        OutcomeMode::Continuous => Some(input.threshold),
        OutcomeMode::Binary => None,
    };
    let labels_of = |y: &[f64]| -> Vec<f64> {
        match label_threshold {
            Some(t) => y.iter().map(|&v| if v >= t { 1.0 } else { 0.0 }).collect(),
            None => y.to_vec(),
        }
    };
    let cfg = input.config;
    let mut notes = Vec::new();
    let mut metrics = Vec::new();
    let mut calib = writer();
    calib
        .write_record(["predictor", "method", "point", "predicted", "observed"])
        .map_err(format_err)?;
    let mut dca = writer();
    dca.write_record(["predictor", "threshold", "net_benefit", "prevalence"]).map_err(format_err)?;
    let mut profiles = writer();
    profiles
        .write_record(["predictor", "metric", "session_index", "value"])
        .map_err(format_err)?;
    let thresholds = cfg.thresholds(input.mode);
    let method = match cfg.calibration_method {
        posl_core::metrics::CurveMethod::Binned => "binned",
        posl_core::metrics::CurveMethod::LocalLinear => "local_linear",
    };

    let (all_y, _) = paired(input.records, Predictor::Dsl);
    let all_labels = labels_of(&all_y);
    // Reference strategies: everybody or nobody called positive.
    for (name, score) in [("treat_all", f64::INFINITY), ("treat_none", f64::NEG_INFINITY)] {
        let scores = vec![score; all_labels.len()];
        match decision_curve(&all_labels, &scores, &thresholds, cfg.net_benefit_weight) {
            Ok(c) => {
                for (t, nb) in c.thresholds.iter().zip(&c.net_benefit) {
                    dca.write_record([name.into(), fmt_f64(*t), fmt_f64(*nb), fmt_f64(c.prevalence)])
                        .map_err(format_err)?;
                }
            }
            Err(e) => notes.push(format!("decision curve {name}: {e}")),
        }
    }

    for (name, p) in predictors(input.learner_ids) {
        let (y, pred) = paired(input.records, p);
        let pooled = if y.is_empty() {
            notes.push(format!("{name}: no scored records"));
            None
        } else {
            Some(summarize(&y, &pred, label_threshold, cfg.auroc_ci)?)
        };
        metrics.push(PredictorMetrics {
            predictor: name.clone(),
            pooled,
            individuals: individual_metrics(input.records, p, label_threshold)?,
        });

        match calibration_curve(&y, &pred, cfg.calibration_method, cfg.calibration_resolution) {
            Ok(c) => {
                for (k, (px, oy)) in c.points.iter().enumerate() {
                    calib
                        .write_record([name.clone(), method.into(), (k + 1).to_string(), fmt_f64(*px), fmt_f64(*oy)])
                        .map_err(format_err)?;
                }
            }
            Err(e) => notes.push(format!("calibration curve {name}: {e}")),
        }
        match decision_curve(&labels_of(&y), &pred, &thresholds, cfg.net_benefit_weight) {
            Ok(c) => {
                for (t, nb) in c.thresholds.iter().zip(&c.net_benefit) {
                    dca.write_record([name.clone(), fmt_f64(*t), fmt_f64(*nb), fmt_f64(c.prevalence)])
                        .map_err(format_err)?;
                }
            }
            Err(e) => notes.push(format!("decision curve {name}: {e}")),
        }
        for (metric, label) in [
            (ProfileMetric::Mdae, "mdae"),
            (ProfileMetric::CalibIntercept, "calib_intercept"),
            (ProfileMetric::CalibSlope, "calib_slope"),
        ] {
            for (s, v) in time_profiles(input.records, p, metric, cfg.smoothing_span)? {
                profiles
                    .write_record([name.clone(), label.into(), s.to_string(), fmt_f64(v)])
                    .map_err(format_err)?;
            }
        }
    }

    Ok(ReportFiles {
        metrics: MetricsReport {
            provenance: input.provenance.clone(),
            mode: input.mode,
            label_threshold,
            predictors: metrics,
            notes,
        },
        calibration_curve: render(calib, input.provenance)?,
        decision_curve: render(dca, input.provenance)?,
        time_profiles: render(profiles, input.provenance)?,
    })
}
