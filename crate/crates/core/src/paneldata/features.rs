//! Temporally safe feature rows.
//!
//! The row for position `t` (1-based) reads covariates from position
//! `t - covariate_lag` and history summaries from positions strictly before
//! `t`. With the default lag of one, nothing recorded at or after `t`
//! enters the row.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ColumnKind, ColumnSpec, IndividualSeries, PanelDataset, Schema};
use crate::math::{median, mode};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Rolling means of past outcomes, one feature per window (in sessions).
    pub outcome_windows: Vec<usize>,
    /// Window of the rolling means over auxiliary covariates.
    pub aux_window: usize,
    /// Session columns (by position among session columns) summarised over
    /// `aux_window`; `None` selects every continuous session column.
    pub aux_columns: Option<Vec<usize>>,
    /// Distance between the predicted session and the session whose
    /// covariates are used. Zero means covariates recorded at the predicted
    /// session are known in advance.
    pub covariate_lag: usize,
    pub include_session_index: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            outcome_windows: alloc::vec![36],
            aux_window: 3,
            aux_columns: None,
            covariate_lag: 1,
            include_session_index: true,
        }
    }
}

/// Column-wise cold-start values taken from the historical pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolFallbacks {
    pub baseline: Vec<f64>,
    pub session: Vec<f64>,
    pub outcome: f64,
}

impl PoolFallbacks {
    /// Median (continuous) or mode (binary, categorical) of every column
    /// over all person-times of `pool`. Columns with no observed value
    /// fall back to zero.
    pub fn from_pool(pool: &PanelDataset) -> Self {
        let summarise = |spec: &ColumnSpec, values: &[f64]| -> f64 {
            if values.is_empty() {
                0.0
            } else if spec.kind == ColumnKind::Continuous {
                median(values)
            } else {
                mode(values)
            }
        };
        let baseline = pool
            .schema
            .baseline()
            .enumerate()
            .map(|(j, spec)| {
                let v: Vec<f64> = pool.individuals.iter().filter_map(|i| i.baseline[j]).collect();
                summarise(spec, &v)
            })
            .collect();
        let session = pool
            .schema
            .session()
            .enumerate()
            .map(|(j, spec)| {
                let v: Vec<f64> = pool
                    .individuals
                    .iter()
                    .flat_map(|i| i.sessions.iter().filter_map(move |s| s.covariates[j]))
                    .collect();
                summarise(spec, &v)
            })
            .collect();
        let outcomes: Vec<f64> = pool
            .individuals
            .iter()
            .flat_map(|i| i.sessions.iter().filter_map(|s| s.outcome))
            .collect();
        Self {
            baseline,
            session,
            outcome: if outcomes.is_empty() { 0.0 } else { median(&outcomes) },
        }
    }
}

/// Numeric predictors for one person-session. `missing_indicators` has one
/// entry per baseline and session source column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub values: Vec<f64>,
    pub missing_indicators: Vec<bool>,
    pub session_index: u32,
}

impl FeatureRow {
    /// Number of learner inputs (values followed by indicators).
    pub fn arity(&self) -> usize {
        self.values.len() + self.missing_indicators.len()
    }

    /// Learner input vector: values then indicators as 0/1.
    pub fn input(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.extend(self.missing_indicators.iter().map(|&m| if m { 1.0 } else { 0.0 }));
        v
    }
}

#[derive(Debug, Clone)]
pub struct FeatureBuilder {
    schema: Schema,
    config: FeatureConfig,
    fallbacks: PoolFallbacks,
    aux: Vec<usize>,
}

impl FeatureBuilder {
    pub fn new(schema: &Schema, config: &FeatureConfig, fallbacks: &PoolFallbacks) -> Result<Self> {
        let n_sess = schema.n_session();
        if fallbacks.baseline.len() != schema.n_baseline() || fallbacks.session.len() != n_sess {
            return Err(Error::LengthMismatch {
                expected: schema.n_baseline() + n_sess,
                found: fallbacks.baseline.len() + fallbacks.session.len(),
            });
        }
        let aux = match &config.aux_columns {
            Some(cols) => {
                if let Some(&bad) = cols.iter().find(|&&c| c >= n_sess) {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "auxiliary column {bad} out of range"
                    )));
                }
                cols.clone()
            }
            None => schema
                .session()
                .enumerate()
                .filter(|(_, c)| c.kind == ColumnKind::Continuous)
                .map(|(j, _)| j)
                .collect(),
        };
        Ok(Self {
            schema: schema.clone(),
            config: config.clone(),
            fallbacks: fallbacks.clone(),
            aux,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    /// Names of the learner inputs, aligned with [`FeatureRow::input`].
    pub fn input_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        let push_encoded = |names: &mut Vec<String>, spec: &ColumnSpec| match spec.kind {
            ColumnKind::Categorical => {
                for level in spec.levels.iter().skip(1) {
                    names.push(alloc::format!("{}={}", spec.name, level));
                }
            }
            _ => names.push(spec.name.clone()),
        };
        for spec in self.schema.baseline() {
            push_encoded(&mut names, spec);
        }
        for spec in self.schema.session() {
            push_encoded(&mut names, spec);
        }
        for w in &self.config.outcome_windows {
            names.push(alloc::format!("outcome_mean_{w}"));
        }
        let session_specs: Vec<&ColumnSpec> = self.schema.session().collect();
        for &j in &self.aux {
            names.push(alloc::format!("{}_mean_{}", session_specs[j].name, self.config.aux_window));
        }
        if self.config.include_session_index {
            names.push(String::from("session_index"));
        }
        for spec in self.schema.baseline().chain(self.schema.session()) {
            names.push(alloc::format!("{}_missing", spec.name));
        }
        names
    }

    pub fn arity(&self) -> usize {
        self.input_names().len()
    }

    /// Feature row for 1-based position `t` of `series`.
    pub fn build(&self, series: &IndividualSeries, t: usize) -> Result<FeatureRow> {
        let len = series.len();
        if t < 1 || t > len {
            return Err(Error::InvalidParameter(alloc::format!(
                "session position {t} outside 1..={len}"
            )));
        }
        let mut values = Vec::with_capacity(self.arity());
        let mut indicators = Vec::new();

        for (j, spec) in self.schema.baseline().enumerate() {
            let (v, missing) = match series.baseline[j] {
                Some(v) => (v, false),
                None => (self.fallbacks.baseline[j], true),
            };
            encode(spec, v, &mut values);
            indicators.push(missing);
        }

        let source = t.checked_sub(self.config.covariate_lag).filter(|&u| u >= 1);
        for (j, spec) in self.schema.session().enumerate() {
            let (v, missing) = match source {
                None => (self.fallbacks.session[j], true),
                Some(u) => match series.sessions[u - 1].covariates[j] {
                    Some(v) => (v, false),
                    None => {
                        let prior: Vec<f64> = series.sessions[..u - 1]
                            .iter()
                            .filter_map(|s| s.covariates[j])
                            .collect();
                        let v = if prior.is_empty() {
                            self.fallbacks.session[j]
                        } else if spec.kind == ColumnKind::Continuous {
                            median(&prior)
                        } else {
                            mode(&prior)
                        };
                        (v, true)
                    }
                },
            };
            encode(spec, v, &mut values);
            indicators.push(missing);
        }

        let past = &series.sessions[..t - 1];
        for &w in &self.config.outcome_windows {
            let window = &past[past.len().saturating_sub(w)..];
            values.push(window_mean(window.iter().map(|s| s.outcome), self.fallbacks.outcome));
        }
        for &j in &self.aux {
            let window = &past[past.len().saturating_sub(self.config.aux_window)..];
            values.push(window_mean(
                window.iter().map(|s| s.covariates[j]),
                self.fallbacks.session[j],
            ));
        }
        if self.config.include_session_index {
            values.push(series.sessions[t - 1].session_index as f64);
        }

        Ok(FeatureRow {
            values,
            missing_indicators: indicators,
            session_index: series.sessions[t - 1].session_index,
        })
    }

    /// Rows for every position of `series`.
    pub fn build_all(&self, series: &IndividualSeries) -> Result<Vec<FeatureRow>> {
        (1..=series.len()).map(|t| self.build(series, t)).collect()
    }
}

/// Convenience wrapper over [`FeatureBuilder`] for a single row.
pub fn build_features(
    schema: &Schema,
    series: &IndividualSeries,
    t: usize,
    fallbacks: &PoolFallbacks,
    config: &FeatureConfig,
) -> Result<FeatureRow> {
    FeatureBuilder::new(schema, config, fallbacks)?.build(series, t)
}

fn encode(spec: &ColumnSpec, v: f64, out: &mut Vec<f64>) {
    match spec.kind {
        ColumnKind::Categorical => {
            let code = v as usize;
            for level in 1..spec.levels.len() {
                out.push(if code == level { 1.0 } else { 0.0 });
            }
        }
        _ => out.push(v),
    }
}

fn window_mean(values: impl Iterator<Item = Option<f64>>, fallback: f64) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.flatten() {
        sum += v;
        n += 1;
    }
    if n == 0 {
        fallback
    } else {
        sum / n as f64
    }
}
