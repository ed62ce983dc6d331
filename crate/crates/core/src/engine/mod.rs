//! POSL orchestration: historical learners on a pool, the per-individual
//! online loop with nested rolling cross-validation, leave-one-out forward
//! validation over a working sample, and hyperparameter tuning.

mod tune;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use tune::{tune_hyperparameters, FamilyTune, GridScore, TuneGrid, TuneResult};

use crate::cv::{make_forward_plan, make_rocv, make_rwcv_warm};
use crate::ensemble::{
    combine_and_truncate, dsl_select, solve_nnls, time_weights, AlphaWeights, Combination, LossKind, MetaDataset,
    SlConfig,
};
use crate::learners::{
    fit_matrix, rows_to_matrix, screen_matrix, CvScheme, FittedLearner, ImportanceKind, LearnerSpec, Model,
    OutcomeMode, ScreeningReport, Scope,
};
use crate::linalg::Matrix;
use crate::paneldata::{prepare_targets, FeatureBuilder, FeatureConfig, IndividualSeries, PanelDataset, PoolFallbacks, Schema};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoslSettings {
    pub outcome_mode: OutcomeMode,
    /// Binary mode: an outcome at or above the threshold counts as success.
    pub threshold: f64,
    pub sl: SlConfig,
    pub inner_initial_size: usize,
    pub rwcv_window: usize,
    pub first_prediction: usize,
    pub features: FeatureConfig,
    /// Train historical learners once on the whole working sample instead
    /// of once per left-out individual.
    pub shared_pool: bool,
}

impl Default for PoslSettings {
    fn default() -> Self {
        Self {
            outcome_mode: OutcomeMode::Continuous,
            threshold: 24.0,
            sl: SlConfig::default(),
            inner_initial_size: 5,
            rwcv_window: 10,
            first_prediction: 12,
            features: FeatureConfig::default(),
            shared_pool: false,
        }
    }
}

impl PoslSettings {
    /// Binary outcome mode with NLL selection and probability bounds.
    pub fn binary(threshold: f64) -> Self {
        let mut s = Self {
            outcome_mode: OutcomeMode::Binary,
            threshold,
            ..Self::default()
        };
        s.sl.loss_kind = LossKind::NegativeLogLikelihood;
        s.sl.bounds = (0.0, 1.0);
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.sl.validate()?;
        if self.inner_initial_size < 1 || self.rwcv_window < 1 {
            return Err(Error::InvalidParameter("inner initial size and window must be >= 1".into()));
        }
        if self.first_prediction < self.inner_initial_size + 2 {
            return Err(Error::InvalidParameter(format!(
                "first prediction must be at least inner initial size + 2 = {}",
                self.inner_initial_size + 2
            )));
        }
        if !self.threshold.is_finite() {
            return Err(Error::NonFinite("threshold"));
        }
        Ok(())
    }

    pub fn binary_threshold(&self) -> Option<f64> {
        match self.outcome_mode {
            OutcomeMode::Continuous => None,
            OutcomeMode::Binary => Some(self.threshold),
        }
    }

    /// Positions before this one have no lagged covariates and are not used
    /// as training rows.
    pub fn first_training_position(&self) -> usize {
        self.features.covariate_lag + 1
    }

    fn sessions_in_training_window(&self, scheme: CvScheme, v: usize) -> Vec<usize> {
        let start = match scheme {
            CvScheme::Rocv => 1,
            CvScheme::Rwcv => v.saturating_sub(self.rwcv_window).max(1),
        };
        (start..v).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalPrediction {
    pub value: f64,
    pub pre_truncation: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub individual_id: String,
    /// Session index of the predicted session (`tau + 1`).
    pub session_index: u32,
    /// 1-based position of the predicted session in the filtered series.
    pub position: usize,
    /// One entry per candidate; NaN where the final refit failed.
    pub candidate_predictions: Vec<f64>,
    pub alpha_convex: AlphaWeights,
    pub alpha_nonconvex: AlphaWeights,
    pub dsl_choice: usize,
    pub dsl_id: String,
    pub dsl: FinalPrediction,
    pub esl_convex: FinalPrediction,
    pub esl_nonconvex: FinalPrediction,
    pub observed: Option<f64>,
    pub n_meta_rows: usize,
    pub dropped_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkipEntry {
    pub individual_id: String,
    pub session_index: Option<u32>,
    pub reason: String,
}

/// Records, skips and warnings of one or more individuals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkingRun {
    pub records: Vec<PredictionRecord>,
    pub skips: Vec<SkipEntry>,
    pub warnings: Vec<String>,
}

impl WorkingRun {
    /// Concatenates runs and sorts by (individual, session).
    pub fn merge(runs: impl IntoIterator<Item = WorkingRun>) -> WorkingRun {
        let mut out = WorkingRun::default();
        for r in runs {
            out.records.extend(r.records);
            out.skips.extend(r.skips);
            out.warnings.extend(r.warnings);
        }
        out.records
            .sort_by(|a, b| a.individual_id.cmp(&b.individual_id).then(a.session_index.cmp(&b.session_index)));
        out.skips.sort();
        out
    }
}

/// Historical learners fitted on one pool, in spec order. A spec whose
/// fit failed is kept as a non-converged constant placeholder.
#[derive(Debug, Clone)]
pub struct HistoricalFit {
    pub learners: Vec<FittedLearner>,
    pub fallbacks: PoolFallbacks,
    pub pool_ids: Vec<String>,
    pub warnings: Vec<String>,
}

/// Design matrix and targets over every usable person-time of `pool`.
pub fn pool_design(builder: &FeatureBuilder, settings: &PoslSettings, pool: &PanelDataset) -> Result<(Matrix, Vec<f64>)> {
    let first = settings.first_training_position();
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for series in &pool.individuals {
        let (s, y) = prepare_targets(series, settings.binary_threshold());
        for t in first..=s.len() {
            rows.push(builder.build(&s, t)?);
            targets.push(y[t - 1]);
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("pool person-times"));
    }
    Ok((rows_to_matrix(&rows)?, targets))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ScreenKey {
    k: usize,
    trees: usize,
    min_leaf: usize,
    kind: ImportanceKind,
    seed: u64,
}

impl ScreenKey {
    fn of(spec: &LearnerSpec) -> Self {
        let h = &spec.hyper;
        Self {
            k: h.screen_k,
            trees: h.screen_trees,
            min_leaf: h.screen_min_leaf,
            kind: h.screen_importance,
            seed: h.seed,
        }
    }

    fn screen(&self, x: &Matrix, y: &[f64]) -> Result<ScreeningReport> {
        screen_matrix(x, y, self.k, self.trees, self.min_leaf, self.kind, self.seed)
    }
}

/// Screening reports shared by screened specs with equal settings on the
/// same training rows.
#[derive(Default)]
struct ScreenCache(Vec<(ScreenKey, Option<ScreeningReport>)>);

impl ScreenCache {
    fn get(&mut self, key: ScreenKey, x: &Matrix, y: &[f64]) -> Option<ScreeningReport> {
        if let Some((_, r)) = self.0.iter().find(|(k, _)| *k == key) {
            return r.clone();
        }
        let r = key.screen(x, y).ok();
        self.0.push((key, r.clone()));
        r
    }
}

fn fit_cached(spec: &LearnerSpec, x: &Matrix, y: &[f64], cache: &mut ScreenCache) -> Option<FittedLearner> {
    let report = if spec.screened {
        Some(cache.get(ScreenKey::of(spec), x, y)?)
    } else {
        None
    };
    fit_matrix(spec, x, y, None, report.as_ref()).ok().filter(|f| f.converged)
}

/// Fits every historical spec once on all usable person-times of `pool`.
/// Non-converged learners are left out with a warning.
pub fn fit_historical(pool: &PanelDataset, specs: &[LearnerSpec], settings: &PoslSettings, seed: u64) -> Result<HistoricalFit> {
    if pool.is_empty() {
        return Err(Error::EmptyInput("historical pool"));
    }
    let fallbacks = PoolFallbacks::from_pool(pool);
    let pool_ids = pool.individuals.iter().map(|i| i.id.clone()).collect();
    if specs.is_empty() {
        return Ok(HistoricalFit {
            learners: Vec::new(),
            fallbacks,
            pool_ids,
            warnings: Vec::new(),
        });
    }
    let builder = FeatureBuilder::new(&pool.schema, &settings.features, &fallbacks)?;
    let (x, y) = pool_design(&builder, settings, pool)?;
    let mut cache = ScreenCache::default();
    let mut learners = Vec::new();
    let mut warnings = Vec::new();
    for spec in specs {
        let spec = historical_spec(spec, settings.outcome_mode, seed);
        match fit_cached(&spec, &x, &y, &mut cache) {
            Some(f) => learners.push(f),
            None => {
                warnings.push(format!("historical learner {} did not converge and was excluded", spec.id()));
                learners.push(FittedLearner {
                    spec,
                    n_inputs: builder.arity(),
                    selected_features: None,
                    model: Model::Constant { value: 0.0 },
                    converged: false,
                });
            }
        }
    }
    if !learners.iter().any(|l| l.converged) {
        return Err(Error::NotConverged);
    }
    Ok(HistoricalFit {
        learners,
        fallbacks,
        pool_ids,
        warnings,
    })
}

fn historical_spec(spec: &LearnerSpec, mode: OutcomeMode, seed: u64) -> LearnerSpec {
    let mut s = spec.clone();
    s.scope = Scope::Historical;
    s.cv_scheme = None;
    s.outcome_mode = mode;
    s.hyper.seed = seed;
    s
}

/// Doubles each individual spec over both inner CV schemes, spec-major.
pub fn expand_library(specs: &[LearnerSpec], mode: OutcomeMode, seed: u64) -> Vec<LearnerSpec> {
    let mut out = Vec::with_capacity(2 * specs.len());
    for spec in specs {
        for scheme in [CvScheme::Rocv, CvScheme::Rwcv] {
            let mut s = spec.clone();
            s.scope = Scope::Individual;
            s.cv_scheme = Some(scheme);
            s.outcome_mode = mode;
            s.hyper.seed = seed;
            out.push(s);
        }
    }
    out
}

/// A personalised online super learner ready to predict for individuals
/// outside its historical pool.
#[derive(Debug, Clone)]
pub struct PoslModel {
    pub settings: PoslSettings,
    /// Individual candidates, one per (spec, scheme).
    pub library: Vec<LearnerSpec>,
    pub historical: Vec<FittedLearner>,
    pub pool_ids: Vec<String>,
    builder: FeatureBuilder,
}

struct Prepared {
    sessions: Vec<u32>,
    x: Matrix,
    y: Vec<f64>,
}

impl PoslModel {
    /// `library` must already carry CV schemes (see [`expand_library`]).
    /// Historical learners that did not converge keep their candidate slot
    /// but never contribute: their predictions are missing and their
    /// weights zero, so every record has the same columns.
    pub fn new(
        settings: PoslSettings,
        schema: &Schema,
        fallbacks: &PoolFallbacks,
        library: Vec<LearnerSpec>,
        historical: Vec<FittedLearner>,
        pool_ids: Vec<String>,
    ) -> Result<(Self, Vec<String>)> {
        settings.validate()?;
        for spec in &library {
            spec.validate()?;
            if spec.scope != Scope::Individual || spec.cv_scheme.is_none() {
                return Err(Error::InvalidParameter(format!("{} is not an individual learner with a CV scheme", spec.id())));
            }
        }
        if library.is_empty() && !historical.iter().any(|h| h.converged) {
            return Err(Error::EmptyInput("candidate learners"));
        }
        let builder = FeatureBuilder::new(schema, &settings.features, fallbacks)?;
        if let Some(h) = historical.iter().find(|h| h.converged && h.n_inputs != builder.arity()) {
            return Err(Error::LengthMismatch {
                expected: builder.arity(),
                found: h.n_inputs,
            });
        }
        Ok((
            Self {
                settings,
                library,
                historical,
                pool_ids,
                builder,
            },
            Vec::new(),
        ))
    }

    pub fn builder(&self) -> &FeatureBuilder {
        &self.builder
    }

    pub fn n_candidates(&self) -> usize {
        self.library.len() + self.historical.len()
    }

    /// Candidate ids: individual learners first, then historical ones.
    pub fn learner_ids(&self) -> Vec<String> {
        self.library
            .iter()
            .map(LearnerSpec::id)
            .chain(self.historical.iter().map(|h| h.spec.id()))
            .collect()
    }

    fn prepare(&self, series: &IndividualSeries, limit: Option<usize>) -> Result<Prepared> {
        let (mut s, mut y) = prepare_targets(series, self.settings.binary_threshold());
        if let Some(l) = limit {
            s.sessions.truncate(l);
            y.truncate(l);
        }
        if s.is_empty() {
            return Err(Error::SeriesTooShort { length: 0, required: 1 });
        }
        let rows = self.builder.build_all(&s)?;
        Ok(Prepared {
            sessions: s.sessions.iter().map(|r| r.session_index).collect(),
            x: rows_to_matrix(&rows)?,
            y,
        })
    }

    /// Every candidate's prediction for position `v`, with individual
    /// learners trained on the given positions. `None` marks a failure.
    fn candidate_step(&self, prep: &Prepared, v: usize, rocv: &[usize], rwcv: &[usize]) -> Vec<Option<f64>> {
        let first = self.settings.first_training_position();
        let target = prep.x.row(v - 1);
        let mut designs: [Option<(Matrix, Vec<f64>, ScreenCache)>; 2] = [None, None];
        let mut out = Vec::with_capacity(self.n_candidates());
        for spec in &self.library {
            let (slot, positions) = match spec.cv_scheme {
                Some(CvScheme::Rwcv) => (1, rwcv),
                _ => (0, rocv),
            };
            let design = designs[slot].get_or_insert_with(|| {
                let idx: Vec<usize> = positions.iter().filter(|&&p| p >= first).map(|p| p - 1).collect();
                let y = idx.iter().map(|&i| prep.y[i]).collect();
                (prep.x.select_rows(&idx), y, ScreenCache::default())
            });
            let (x, y, cache) = design;
            let pred = if y.is_empty() {
                None
            } else {
                fit_cached(spec, x, y, cache)
                    .and_then(|f| f.predict_one(target).ok())
                    .filter(|p| p.is_finite())
            };
            out.push(pred);
        }
        for h in &self.historical {
            out.push(
                h.converged
                    .then(|| h.predict_one(target).ok())
                    .flatten()
                    .filter(|p| p.is_finite()),
            );
        }
        out
    }

    fn assemble(
        &self,
        individual_id: &str,
        prep: &Prepared,
        tau: usize,
        steps: &[Vec<Option<f64>>],
        last: &[Option<f64>],
    ) -> Result<PredictionRecord> {
        let v0 = self.settings.inner_initial_size + 1;
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        let n_ind = self.library.len();
        let active = |j: usize| j < n_ind || self.historical[j - n_ind].converged;
        for (k, step) in steps.iter().enumerate() {
            if (0..step.len()).all(|j| !active(j) || step[j].is_some()) {
                kept.push(k);
            } else {
                dropped.push(v0 + k);
            }
        }
        let usable: Vec<usize> = (0..last.len()).filter(|&j| active(j) && last[j].is_some()).collect();
        if kept.is_empty() || usable.is_empty() {
            return Err(Error::InsufficientFolds);
        }
        let ids = self.learner_ids();
        let rows: Vec<Vec<f64>> = kept
            .iter()
            .map(|&k| usable.iter().map(|&j| steps[k][j].unwrap()).collect())
            .collect();
        let sessions: Vec<usize> = kept.iter().map(|&k| v0 + k).collect();
        let sl = &self.settings.sl;
        let mut meta = MetaDataset::new(
            Matrix::from_rows(&rows),
            sessions.iter().map(|&v| prep.y[v - 1]).collect(),
            time_weights(tau, &sessions, sl.delta, sl.recency_window),
            sessions,
            usable.iter().map(|&j| ids[j].clone()).collect(),
        )?;
        meta.dropped_folds = dropped;

        let choice = dsl_select(&meta, sl.loss_kind)?;
        let convex = solve_nnls(&meta, true)?;
        let nonconvex = solve_nnls(&meta, false)?;
        let preds: Vec<f64> = usable.iter().map(|&j| last[j].unwrap()).collect();

        let finalise = |how: Combination<'_>| -> Result<FinalPrediction> {
            let raw = match how {
                Combination::Choice(k) => preds[k],
                Combination::Weights(a) => a.iter().zip(&preds).map(|(a, p)| a * p).sum(),
            };
            let (value, truncated) = combine_and_truncate(&preds, how, sl.bounds)?;
            Ok(FinalPrediction {
                value,
                pre_truncation: raw,
                truncated,
            })
        };
        let dsl = finalise(Combination::Choice(choice))?;
        let esl_convex = finalise(Combination::Weights(&convex.alpha))?;
        let esl_nonconvex = finalise(Combination::Weights(&nonconvex.alpha))?;

        let c = last.len();
        let spread = |a: &AlphaWeights| {
            let mut full = vec![0.0; c];
            for (k, &j) in usable.iter().enumerate() {
                full[j] = a.alpha[k];
            }
            AlphaWeights {
                alpha: full,
                convexified: a.convexified,
            }
        };
        Ok(PredictionRecord {
            individual_id: individual_id.to_string(),
            session_index: prep.sessions[tau],
            position: tau + 1,
            candidate_predictions: last.iter().map(|p| p.unwrap_or(f64::NAN)).collect(),
            alpha_convex: spread(&convex),
            alpha_nonconvex: spread(&nonconvex),
            dsl_choice: usable[choice],
            dsl_id: ids[usable[choice]].clone(),
            dsl,
            esl_convex,
            esl_nonconvex,
            observed: prep.y.get(tau).copied(),
            n_meta_rows: meta.n_rows(),
            dropped_folds: meta.dropped_folds.len(),
        })
    }

    /// Predicts position `tau + 1` of `series` (after outcome filtering)
    /// from positions `1..=tau`, recomputing every inner fold.
    pub fn posl_predict_next(&self, series: &IndividualSeries, tau: usize) -> Result<PredictionRecord> {
        let initial = self.settings.inner_initial_size;
        if tau < initial + 1 {
            return Err(Error::SeriesTooShort {
                length: tau,
                required: initial + 1,
            });
        }
        let prep = self.prepare(series, Some(tau + 1))?;
        if prep.y.len() < tau + 1 {
            return Err(Error::SeriesTooShort {
                length: prep.y.len(),
                required: tau + 1,
            });
        }
        let rocv = make_rocv(tau, initial, 1)?;
        let rwcv = make_rwcv_warm(tau, self.settings.rwcv_window, initial)?;
        let steps: Vec<Vec<Option<f64>>> = rocv
            .folds
            .iter()
            .zip(&rwcv.folds)
            .map(|(a, b)| self.candidate_step(&prep, a.validate[0], &a.train, &b.train))
            .collect();
        let full: Vec<usize> = (1..=tau).collect();
        let window: Vec<usize> = ((tau + 1).saturating_sub(self.settings.rwcv_window).max(1)..=tau).collect();
        let last = self.candidate_step(&prep, tau + 1, &full, &window);
        self.assemble(&series.id, &prep, tau, &steps, &last)
    }

    /// Forward validation over one individual: a record for every position
    /// from `first_prediction` on. Each position's one-step-ahead candidate
    /// predictions are computed once and reused by all later meta datasets.
    pub fn run_individual(&self, series: &IndividualSeries) -> WorkingRun {
        let mut run = WorkingRun::default();
        let skip = |reason: String, session: Option<u32>| SkipEntry {
            individual_id: series.id.clone(),
            session_index: session,
            reason,
        };
        let prep = match self.prepare(series, None) {
            Ok(p) => p,
            Err(e) => {
                run.skips.push(skip(e.to_string(), None));
                return run;
            }
        };
        let plan = match make_forward_plan(prep.y.len(), self.settings.first_prediction) {
            Ok(p) => p,
            Err(e) => {
                run.skips.push(skip(e.to_string(), None));
                return run;
            }
        };
        let v0 = self.settings.inner_initial_size + 1;
        let mut cache: Vec<Vec<Option<f64>>> = Vec::new();
        for fold in &plan.folds {
            let tau = fold.train.len();
            while v0 + cache.len() <= tau + 1 {
                let v = v0 + cache.len();
                let rocv = self.settings.sessions_in_training_window(CvScheme::Rocv, v);
                let rwcv = self.settings.sessions_in_training_window(CvScheme::Rwcv, v);
                cache.push(self.candidate_step(&prep, v, &rocv, &rwcv));
            }
            let (steps, rest) = cache.split_at(tau + 1 - v0);
            match self.assemble(&series.id, &prep, tau, steps, &rest[0]) {
                Ok(r) => run.records.push(r),
                Err(e) => run.skips.push(skip(e.to_string(), Some(prep.sessions[tau]))),
            }
        }
        run
    }
}

/// Everything needed to build a [`PoslModel`] from any pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoslPipeline {
    pub settings: PoslSettings,
    pub individual_specs: Vec<LearnerSpec>,
    pub historical_specs: Vec<LearnerSpec>,
}

impl PoslPipeline {
    pub fn build_model(&self, pool: &PanelDataset, seed: u64) -> Result<(PoslModel, Vec<String>)> {
        self.settings.validate()?;
        let fit = fit_historical(pool, &self.historical_specs, &self.settings, seed)?;
        let library = expand_library(&self.individual_specs, self.settings.outcome_mode, seed);
        let (model, mut warnings) = PoslModel::new(
            self.settings.clone(),
            &pool.schema,
            &fit.fallbacks,
            library,
            fit.learners,
            fit.pool_ids,
        )?;
        warnings.splice(0..0, fit.warnings);
        Ok((model, warnings))
    }

    /// Forward validation of working individual `index`. Without a shared
    /// model the historical pool is every other working individual.
    pub fn run_one_out(&self, working: &PanelDataset, index: usize, seed: u64, shared: Option<&PoslModel>) -> WorkingRun {
        let series = &working.individuals[index];
        let mut run = WorkingRun::default();
        let built;
        let model = match shared {
            Some(m) => m,
            None => {
                let pool = working.filter(|i| i.id != series.id);
                match self.build_model(&pool, seed) {
                    Ok((m, w)) => {
                        run.warnings.extend(w.into_iter().map(|w| format!("{}: {w}", series.id)));
                        built = m;
                        &built
                    }
                    Err(e) => {
                        run.skips.push(SkipEntry {
                            individual_id: series.id.clone(),
                            session_index: None,
                            reason: format!("historical pool: {e}"),
                        });
                        return run;
                    }
                }
            }
        };
        debug_assert!(shared.is_some() || !model.pool_ids.contains(&series.id));
        let r = model.run_individual(series);
        run.records = r.records;
        run.skips = r.skips;
        run
    }

    /// Model shared by every individual when `settings.shared_pool` is set.
    pub fn shared_model(&self, working: &PanelDataset, seed: u64) -> Result<Option<(PoslModel, Vec<String>)>> {
        if self.settings.shared_pool {
            self.build_model(working, seed).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// Leave-one-individual-out forward validation over `working`, sorted by
/// (individual, session).
pub fn run_working_sample(pipeline: &PoslPipeline, working: &PanelDataset, seed: u64) -> Result<WorkingRun> {
    if working.len() < 2 {
        return Err(Error::InvalidParameter("working sample needs at least 2 individuals".into()));
    }
    let shared = pipeline.shared_model(working, seed)?;
    let mut runs = Vec::with_capacity(working.len() + 1);
    let shared_model = shared.as_ref().map(|(m, w)| {
        runs.push(WorkingRun {
            warnings: w.clone(),
            ..WorkingRun::default()
        });
        m
    });
    for i in 0..working.len() {
        runs.push(pipeline.run_one_out(working, i, seed, shared_model));
    }
    Ok(WorkingRun::merge(runs))
}
