//! Candidate learners behind one fit/predict contract.
//!
//! Families: weighted mean, linear (logistic in binary mode), ridge, lasso,
//! additive hinge-basis regression with GCV pruning, and gradient-boosted
//! regression trees. Any family can be preceded by random-forest
//! importance screening that keeps the top `screen_k` inputs.

mod forest;
mod gbt;
mod hinge;
mod lasso;
mod linear;
mod tree;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, Matrix};
use crate::math::{sigmoid, weighted_mean};
use crate::paneldata::FeatureRow;
use crate::{Error, Result};

pub use forest::{rf_importance_screen, screen_matrix, ImportanceKind, ScreeningReport};
pub use hinge::{HingeDirection, HingeTerm};
pub use lasso::soft_threshold;
pub use tree::{Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Mean,
    Linear,
    Ridge,
    Lasso,
    HingeSpline,
    Gbt,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Mean,
        Family::Linear,
        Family::Ridge,
        Family::Lasso,
        Family::HingeSpline,
        Family::Gbt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Mean => "mean",
            Family::Linear => "linear",
            Family::Ridge => "ridge",
            Family::Lasso => "lasso",
            Family::HingeSpline => "hinge_spline",
            Family::Gbt => "gbt",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Individual,
    Historical,
}

/// Inner cross-validation scheme of an individual learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvScheme {
    Rocv,
    Rwcv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeMode {
    #[default]
    Continuous,
    Binary,
}

/// Family-specific settings; each family reads only its own fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Ridge / lasso penalty.
    pub lambda: f64,
    /// Hinge spline: maximum number of hinge functions (excluding the intercept).
    pub max_basis: usize,
    /// Hinge spline: observations kept between a knot and either extreme.
    pub min_span: usize,
    /// Hinge spline: candidate knots per input (quantiles of observed values).
    pub max_knots: usize,
    /// Hinge spline: GCV cost per hinge function.
    pub gcv_penalty: f64,
    pub rounds: usize,
    pub max_depth: usize,
    pub shrinkage: f64,
    pub min_leaf: usize,
    pub screen_k: usize,
    pub screen_trees: usize,
    pub screen_min_leaf: usize,
    pub screen_importance: ImportanceKind,
    /// Iteration cap of iterative solvers (lasso sweeps, logistic IRLS steps).
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            max_basis: 10,
            min_span: 3,
            max_knots: 20,
            gcv_penalty: 2.0,
            rounds: 100,
            max_depth: 3,
            shrinkage: 0.1,
            min_leaf: 5,
            screen_k: 5,
            screen_trees: 200,
            screen_min_leaf: 5,
            screen_importance: ImportanceKind::Impurity,
            max_iter: 10_000,
            tol: 1e-7,
            seed: 0,
        }
    }
}

impl Hyperparams {
    /// Names accepted by [`Hyperparams::set`].
    pub const NUMERIC: [&'static str; 11] = [
        "lambda",
        "max_basis",
        "min_span",
        "max_knots",
        "gcv_penalty",
        "rounds",
        "max_depth",
        "shrinkage",
        "min_leaf",
        "screen_k",
        "screen_trees",
    ];

    /// Sets a numeric field by name. Integer fields reject fractional or
    /// negative values.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v < 1e12 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidParameter(format!("{name} must be a non-negative integer")))
            }
        };
        match name {
            "lambda" => self.lambda = value,
            "gcv_penalty" => self.gcv_penalty = value,
            "shrinkage" => self.shrinkage = value,
            "max_basis" => self.max_basis = as_count(value)?,
            "min_span" => self.min_span = as_count(value)?,
            "max_knots" => self.max_knots = as_count(value)?,
            "rounds" => self.rounds = as_count(value)?,
            "max_depth" => self.max_depth = as_count(value)?,
            "min_leaf" => self.min_leaf = as_count(value)?,
            "screen_k" => self.screen_k = as_count(value)?,
            "screen_trees" => self.screen_trees = as_count(value)?,
            _ => return Err(Error::InvalidParameter(format!("unknown hyperparameter {name}"))),
        }
        Ok(())
    }

    /// Ordering key where smaller means simpler: larger penalty first, then
    /// fewer rounds, basis functions and depth.
    pub fn complexity(&self) -> (f64, usize, usize, usize) {
        (-self.lambda, self.rounds, self.max_basis, self.max_depth)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub family: Family,
    #[serde(default)]
    pub hyper: Hyperparams,
    #[serde(default)]
    pub screened: bool,
    pub scope: Scope,
    /// Set for individual learners only.
    #[serde(default)]
    pub cv_scheme: Option<CvScheme>,
    #[serde(default)]
    pub outcome_mode: OutcomeMode,
}

impl LearnerSpec {
    pub fn new(family: Family, scope: Scope) -> Self {
        Self {
            family,
            hyper: Hyperparams::default(),
            screened: false,
            scope,
            cv_scheme: None,
            outcome_mode: OutcomeMode::Continuous,
        }
    }

    pub fn screened(mut self, screened: bool) -> Self {
        self.screened = screened;
        self
    }

    pub fn with_scheme(mut self, scheme: CvScheme) -> Self {
        self.cv_scheme = Some(scheme);
        self
    }

    pub fn with_mode(mut self, mode: OutcomeMode) -> Self {
        self.outcome_mode = mode;
        self
    }

    pub fn with_hyper(mut self, hyper: Hyperparams) -> Self {
        self.hyper = hyper;
        self
    }

    /// Stable identifier such as `ind_rocv_rf_ridge` or `hist_gbt`.
    pub fn id(&self) -> String {
        let scope = match self.scope {
            Scope::Individual => "ind",
            Scope::Historical => "hist",
        };
        let scheme = match self.cv_scheme {
            Some(CvScheme::Rocv) => "_rocv",
            Some(CvScheme::Rwcv) => "_rwcv",
            None => "",
        };
        let rf = if self.screened { "_rf" } else { "" };
        format!("{scope}{scheme}{rf}_{}", self.family.name())
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.hyper;
        let bad = |m: &str| Err(Error::InvalidParameter(format!("{}: {m}", self.id())));
        if !(h.lambda >= 0.0 && h.lambda.is_finite()) {
            return bad("lambda must be finite and >= 0");
        }
        if self.screened && (h.screen_k < 1 || h.screen_trees < 1) {
            return bad("screening needs screen_k >= 1 and screen_trees >= 1");
        }
        if !(h.shrinkage > 0.0 && h.shrinkage <= 1.0) {
            return bad("shrinkage must lie in (0, 1]");
        }
        if h.min_leaf < 1 || h.screen_min_leaf < 1 {
            return bad("leaf sizes must be >= 1");
        }
        if !(h.tol > 0.0) {
            return bad("tol must be > 0");
        }
        if self.scope == Scope::Historical && self.cv_scheme.is_some() {
            return bad("historical learners take no cv scheme");
        }
        Ok(())
    }
}

/// Learned parameters, tagged by family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Constant { value: f64 },
    Linear { intercept: f64, coefficients: Vec<f64> },
    Hinge { intercept: f64, terms: Vec<HingeTerm> },
    Boosted { base: f64, shrinkage: f64, trees: Vec<Tree> },
}

impl Model {
    fn is_finite(&self) -> bool {
        match self {
            Model::Constant { value } => value.is_finite(),
            Model::Linear { intercept, coefficients } => {
                intercept.is_finite() && coefficients.iter().all(|c| c.is_finite())
            }
            Model::Hinge { intercept, terms } => {
                intercept.is_finite() && terms.iter().all(|t| t.coefficient.is_finite() && t.knot.is_finite())
            }
            Model::Boosted { base, trees, .. } => {
                base.is_finite() && trees.iter().all(|t| t.nodes.iter().all(|n| n.value.is_finite()))
            }
        }
    }

    /// Raw score: the prediction in continuous mode, the link-scale value
    /// for logistic and boosted models in binary mode.
    fn score(&self, x: &[f64]) -> f64 {
        match self {
            Model::Constant { value } => *value,
            Model::Linear { intercept, coefficients } => intercept + dot(coefficients, x),
            Model::Hinge { intercept, terms } => {
                intercept + terms.iter().map(|t| t.coefficient * t.eval(x)).sum::<f64>()
            }
            Model::Boosted { base, shrinkage, trees } => {
                base + shrinkage * trees.iter().map(|t| t.predict(x)).sum::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLearner {
    pub spec: LearnerSpec,
    /// Input arity seen at fit time (before screening).
    pub n_inputs: usize,
    pub selected_features: Option<Vec<usize>>,
    pub model: Model,
    pub converged: bool,
}

impl FittedLearner {
    pub fn predict(&self, rows: &[FeatureRow]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_one(&r.input())).collect()
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Result<Vec<f64>> {
        (0..x.rows()).map(|i| self.predict_one(x.row(i))).collect()
    }

    /// Prediction for one input vector: unbounded in continuous mode, a
    /// probability in binary mode.
    pub fn predict_one(&self, input: &[f64]) -> Result<f64> {
        if !self.converged {
            return Err(Error::NotConverged);
        }
        if input.len() != self.n_inputs {
            return Err(Error::LengthMismatch {
                expected: self.n_inputs,
                found: input.len(),
            });
        }
        let score = match &self.selected_features {
            Some(cols) => {
                let sub: Vec<f64> = cols.iter().map(|&c| input[c]).collect();
                self.model.score(&sub)
            }
            None => self.model.score(input),
        };
        Ok(match self.spec.outcome_mode {
            OutcomeMode::Continuous => score,
            OutcomeMode::Binary => match self.model {
                Model::Linear { .. } | Model::Boosted { .. } => sigmoid(score),
                Model::Constant { .. } | Model::Hinge { .. } => score.clamp(0.0, 1.0),
            },
        })
    }
}

pub fn rows_to_matrix(rows: &[FeatureRow]) -> Result<Matrix> {
    let first = rows.first().ok_or(Error::EmptyInput("feature rows"))?;
    let p = first.arity();
    let mut data = Vec::with_capacity(rows.len() * p);
    for r in rows {
        if r.arity() != p {
            return Err(Error::LengthMismatch { expected: p, found: r.arity() });
        }
        data.extend(r.input());
    }
    Ok(Matrix::from_vec(rows.len(), p, data))
}

/// Fits `spec` on feature rows. `weights` default to one.
pub fn fit(
    spec: &LearnerSpec,
    rows: &[FeatureRow],
    targets: &[f64],
    weights: Option<&[f64]>,
) -> Result<FittedLearner> {
    let x = rows_to_matrix(rows)?;
    fit_matrix(spec, &x, targets, weights, None)
}

/// Fits `spec` on a design matrix. A precomputed screening report may be
/// passed for screened specs; it must come from the same rows, targets
/// and screening settings.
pub fn fit_matrix(
    spec: &LearnerSpec,
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    screen: Option<&ScreeningReport>,
) -> Result<FittedLearner> {
    spec.validate()?;
    let n = x.rows();
    if n == 0 {
        return Err(Error::EmptyInput("training rows"));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("targets"));
    }
    if spec.outcome_mode == OutcomeMode::Binary && y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::NonBinaryTarget);
    }
    let unit;
    let w = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::LengthMismatch { expected: n, found: w.len() });
            }
            if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || !(w.iter().sum::<f64>() > 0.0) {
                return Err(Error::InvalidParameter("weights must be non-negative with a positive sum".into()));
            }
            w
        }
        None => {
            unit = alloc::vec![1.0; n];
            &unit[..]
        }
    };

    let (selected, design) = if spec.screened {
        let report = match screen {
            Some(r) => r.clone(),
            None => screen_matrix(
                x,
                y,
                spec.hyper.screen_k,
                spec.hyper.screen_trees,
                spec.hyper.screen_min_leaf,
                spec.hyper.screen_importance,
                spec.hyper.seed,
            )?,
        };
        let sub = x.select_columns(&report.selected);
        (Some(report.selected), sub)
    } else {
        (None, x.clone())
    };

    let binary = spec.outcome_mode == OutcomeMode::Binary;
    let h = &spec.hyper;
    let (model, converged) = match spec.family {
        Family::Mean => (Model::Constant { value: weighted_mean(y, Some(w)) }, true),
        Family::Linear | Family::Ridge => {
            let lambda = if spec.family == Family::Linear { 0.0 } else { h.lambda };
            if binary {
                linear::fit_logistic(&design, y, w, lambda, 0.0, h.max_iter.min(100), h.tol)
            } else {
                let (b0, beta) = crate::linalg::weighted_ridge(&design, y, w, lambda);
                (Model::Linear { intercept: b0, coefficients: beta }, true)
            }
        }
        Family::Lasso => {
            if binary {
                linear::fit_logistic(&design, y, w, 0.0, h.lambda, h.max_iter.min(100), h.tol)
            } else {
                lasso::fit_lasso(&design, y, w, h.lambda, h.max_iter, h.tol)
            }
        }
        Family::HingeSpline => hinge::fit_hinge(&design, y, w, h),
        Family::Gbt => gbt::fit_gbt(&design, y, w, h, binary),
    };
    let converged = converged && model.is_finite();
    Ok(FittedLearner {
        spec: spec.clone(),
        n_inputs: x.cols(),
        selected_features: selected,
        model,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rows(xs: &[&[f64]]) -> Vec<FeatureRow> {
        xs.iter()
            .enumerate()
            .map(|(i, x)| FeatureRow {
                values: x.to_vec(),
                missing_indicators: vec![],
                session_index: i as u32 + 1,
            })
            .collect()
    }

    #[test]
    fn mean_learner_predicts_the_mean() {
        let spec = LearnerSpec::new(Family::Mean, Scope::Individual);
        let r = rows(&[&[0.0], &[5.0], &[9.0]]);
        let f = fit(&spec, &r, &[1.0, 2.0, 3.0], None).unwrap();
        assert_eq!(f.predict(&r).unwrap(), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn linear_interpolates_noiseless_data() {
        let spec = LearnerSpec::new(Family::Linear, Scope::Historical);
        let xs: Vec<[f64; 1]> = (0..10).map(|i| [i as f64 * 0.7 - 2.0]).collect();
        let r = rows(&xs.iter().map(|x| &x[..]).collect::<Vec<_>>());
        let y: Vec<f64> = xs.iter().map(|x| 3.0 + 2.0 * x[0]).collect();
        let f = fit(&spec, &r, &y, None).unwrap();
        for (p, t) in f.predict(&r).unwrap().iter().zip(&y) {
            assert!((p - t).abs() < 1e-8);
        }
    }

    #[test]
    fn ridge_at_zero_penalty_matches_linear() {
        let xs: Vec<[f64; 2]> = (0..12).map(|i| [i as f64, ((i * 7) % 5) as f64]).collect();
        let r = rows(&xs.iter().map(|x| &x[..]).collect::<Vec<_>>());
        let y: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x[0] - 0.5 * x[1] + (i % 3) as f64).collect();
        let lin = fit(&LearnerSpec::new(Family::Linear, Scope::Individual), &r, &y, None).unwrap();
        let ridge = fit(&LearnerSpec::new(Family::Ridge, Scope::Individual), &r, &y, None).unwrap();
        match (&lin.model, &ridge.model) {
            (
                Model::Linear { intercept: a, coefficients: ca },
                Model::Linear { intercept: b, coefficients: cb },
            ) => {
                assert!((a - b).abs() < 1e-8);
                for (x, y) in ca.iter().zip(cb) {
                    assert!((x - y).abs() < 1e-8);
                }
            }
            _ => panic!("expected linear models"),
        }
    }

    #[test]
    fn ids_are_descriptive() {
        let s = LearnerSpec::new(Family::Ridge, Scope::Individual)
            .with_scheme(CvScheme::Rwcv)
            .screened(true);
        assert_eq!(s.id(), "ind_rwcv_rf_ridge");
        assert_eq!(LearnerSpec::new(Family::Gbt, Scope::Historical).id(), "hist_gbt");
    }

    #[test]
    fn input_errors() {
        let spec = LearnerSpec::new(Family::Mean, Scope::Individual);
        assert!(matches!(fit(&spec, &[], &[], None), Err(Error::EmptyInput(_))));
        let r = rows(&[&[0.0], &[1.0]]);
        let bin = spec.clone().with_mode(OutcomeMode::Binary);
        assert!(matches!(fit(&bin, &r, &[0.0, 2.0], None), Err(Error::NonBinaryTarget)));
        let f = fit(&spec, &r, &[1.0, 2.0], None).unwrap();
        assert!(matches!(f.predict_one(&[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
        let mut nc = f.clone();
        nc.converged = false;
        assert!(matches!(nc.predict_one(&[1.0]), Err(Error::NotConverged)));
    }

    #[test]
    fn binary_mean_is_prevalence() {
        let spec = LearnerSpec::new(Family::Mean, Scope::Individual).with_mode(OutcomeMode::Binary);
        let r = rows(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
        let f = fit(&spec, &r, &[1.0, 0.0, 1.0, 1.0], None).unwrap();
        assert_eq!(f.predict_one(&[7.0]).unwrap(), 0.75);
    }
}
