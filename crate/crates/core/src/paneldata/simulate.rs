//! Synthetic panel generator standing in for clinical session data.
//!
//! Each individual gets two baseline covariates, `n_predictors` AR(1)
//! session covariates around individual-specific means, and an outcome
//!
//! ```text
//! y[t] = intercept + u_i + b_i . gamma + x[t-1] . beta + drift * t + e[t]
//! ```
//!
//! where `x[0]` is an unrecorded run-in draw. Outcomes are clipped to
//! `outcome_bounds`; covariates, outcomes and baselines are then blanked
//! completely at random with probability `missing_rate`.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ColumnKind, ColumnRole, ColumnSpec, IndividualSeries, PanelDataset, Schema, SessionRecord};
use crate::math::sqrt;
use crate::{Error, Result};

/// Autocorrelation of the session covariates.
const AR_COEF: f64 = 0.6;
/// Spread of the individual-specific covariate means.
const COVARIATE_MEAN_SD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub n_individuals: usize,
    /// Inclusive range of series lengths.
    pub sessions_per_individual: (usize, usize),
    pub n_predictors: usize,
    pub intercept: f64,
    pub individual_effect_sd: f64,
    pub drift_slope: f64,
    pub noise_sd: f64,
    pub missing_rate: f64,
    pub outcome_bounds: (f64, f64),
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_individuals: 40,
            sessions_per_individual: (200, 300),
            n_predictors: 3,
            intercept: 27.0,
            individual_effect_sd: 3.0,
            drift_slope: 0.0,
            noise_sd: 3.0,
            missing_rate: 0.01,
            outcome_bounds: (0.0, 50.0),
            seed: 1,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("simulation: {msg}")));
        if self.n_individuals == 0 {
            return bad("n_individuals must be at least 1");
        }
        let (lo, hi) = self.sessions_per_individual;
        if lo == 0 || lo > hi {
            return bad("sessions_per_individual must satisfy 1 <= min <= max");
        }
        if !(self.individual_effect_sd >= 0.0 && self.noise_sd >= 0.0) {
            return bad("standard deviations must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.missing_rate) {
            return bad("missing_rate must lie in [0, 1]");
        }
        if !(self.outcome_bounds.0 < self.outcome_bounds.1) {
            return bad("outcome_bounds must satisfy lo < hi");
        }
        if !(self.intercept.is_finite() && self.drift_slope.is_finite()) {
            return bad("intercept and drift_slope must be finite");
        }
        Ok(())
    }

    /// Coefficients of the lagged session covariates.
    pub fn covariate_coefficients(&self) -> Vec<f64> {
        (0..self.n_predictors)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * 2.0 / (1.0 + 0.5 * j as f64)
            })
            .collect()
    }

    /// Coefficients of the baseline covariates (continuous, binary).
    pub fn baseline_coefficients(&self) -> [f64; 2] {
        [1.0, 0.5]
    }

    pub fn schema(&self) -> Schema {
        let mut columns = alloc::vec![
            ColumnSpec::new("base_cont", ColumnKind::Continuous, ColumnRole::Baseline),
            ColumnSpec::new("base_bin", ColumnKind::Binary, ColumnRole::Baseline),
        ];
        for j in 0..self.n_predictors {
            columns.push(ColumnSpec::new(
                &format!("x{}", j + 1),
                ColumnKind::Continuous,
                ColumnRole::Session,
            ));
        }
        Schema { columns }
    }
}

pub fn simulate_panel(config: &SimulationConfig) -> Result<PanelDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let beta = config.covariate_coefficients();
    let gamma = config.baseline_coefficients();
    let p = config.n_predictors;
    let innovation_sd = sqrt(1.0 - AR_COEF * AR_COEF);
    let width = id_width(config.n_individuals);
    let mut individuals = Vec::with_capacity(config.n_individuals);

    for i in 0..config.n_individuals {
        let (lo, hi) = config.sessions_per_individual;
        let len = rng.random_range(lo..=hi);
        let effect = config.individual_effect_sd * normal(&mut rng);
        let base_cont = normal(&mut rng);
        let base_bin = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let centres: Vec<f64> = (0..p).map(|_| COVARIATE_MEAN_SD * normal(&mut rng)).collect();
        let mut x: Vec<f64> = centres.iter().map(|c| c + normal(&mut rng)).collect();
        let level = config.intercept + effect + gamma[0] * base_cont + gamma[1] * base_bin;

        let mut sessions = Vec::with_capacity(len);
        for t in 1..=len {
            let lagged: f64 = x.iter().zip(&beta).map(|(x, b)| x * b).sum();
            let noise = config.noise_sd * normal(&mut rng);
            let y = (level + lagged + config.drift_slope * t as f64 + noise)
                .clamp(config.outcome_bounds.0, config.outcome_bounds.1);
            for (xj, c) in x.iter_mut().zip(&centres) {
                *xj = c + AR_COEF * (*xj - c) + innovation_sd * normal(&mut rng);
            }
            let covariates = x.iter().map(|&v| blank(&mut rng, config.missing_rate, v)).collect();
            let outcome = blank(&mut rng, config.missing_rate, y);
            sessions.push(SessionRecord {
                session_index: t as u32,
                outcome,
                covariates,
            });
        }
        let baseline = alloc::vec![
            blank(&mut rng, config.missing_rate, base_cont),
            blank(&mut rng, config.missing_rate, base_bin),
        ];
        individuals.push(IndividualSeries {
            id: format!("sim{:0width$}", i, width = width),
            baseline,
            sessions,
        });
    }
    PanelDataset::new(config.schema(), individuals)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// The draw is always consumed so missingness does not shift later values.
fn blank(rng: &mut ChaCha8Rng, rate: f64, v: f64) -> Option<f64> {
    let u: f64 = rng.random();
    if u < rate {
        None
    } else {
        Some(v)
    }
}

/// Zero-padded id width so lexical order matches generation order.
fn id_width(n: usize) -> usize {
    let mut w = 1;
    let mut m = n.saturating_sub(1);
    while m >= 10 {
        m /= 10;
        w += 1;
    }
    w.max(3)
}
