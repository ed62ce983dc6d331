//! Grid search of learner hyperparameters by K-fold CV over individuals.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{pool_design, PoslSettings};
use crate::ensemble::{cumulative_weighted_loss, LossKind};
use crate::learners::{fit_matrix, Family, Hyperparams, LearnerSpec, OutcomeMode, Scope};
use crate::paneldata::{FeatureBuilder, PanelDataset, PoolFallbacks};
use crate::{Error, Result};

const MAX_FOLDS: usize = 10;

/// Family name to hyperparameter name to candidate values; each family's
/// grid is the Cartesian product of its lists.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TuneGrid(pub BTreeMap<String, BTreeMap<String, Vec<f64>>>);

impl TuneGrid {
    fn points(&self, base: &Hyperparams) -> Result<Vec<(Family, Vec<(BTreeMap<String, f64>, Hyperparams)>)>> {
        if self.0.is_empty() {
            return Err(Error::EmptyInput("tuning grid"));
        }
        let mut out = Vec::new();
        for (name, params) in &self.0 {
            let family = Family::from_name(name)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown learner family {name}")))?;
            let mut points = alloc::vec![(BTreeMap::new(), base.clone())];
            for (param, values) in params {
                if values.is_empty() {
                    return Err(Error::EmptyInput("tuning grid values"));
                }
                let mut next = Vec::with_capacity(points.len() * values.len());
                for (assigned, hyper) in &points {
                    for &v in values {
                        let mut a: BTreeMap<String, f64> = assigned.clone();
                        let mut h: Hyperparams = hyper.clone();
                        h.set(param, v)?;
                        a.insert(param.clone(), v);
                        next.push((a, h));
                    }
                }
                points = next;
            }
            out.push((family, points));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub params: BTreeMap<String, f64>,
    /// Mean held-out loss; infinite when a fit failed in some fold.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyTune {
    pub params: BTreeMap<String, f64>,
    pub loss: f64,
    pub grid: Vec<GridScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub families: BTreeMap<String, FamilyTune>,
    pub n_folds: usize,
    pub loss_kind: LossKind,
    pub warnings: Vec<String>,
}

impl TuneResult {
    /// Writes the winning values into `spec` when its family was tuned.
    pub fn apply(&self, spec: &mut LearnerSpec) -> Result<()> {
        if let Some(t) = self.families.get(spec.family.name()) {
            for (name, &v) in &t.params {
                spec.hyper.set(name, v)?;
            }
        }
        Ok(())
    }
}

fn fold_assignment(tuning: &PanelDataset, k: usize, seed: u64) -> BTreeMap<String, usize> {
    let mut ids: Vec<&str> = tuning.individuals.iter().map(|i| i.id.as_str()).collect();
    ids.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    ids.into_iter().enumerate().map(|(n, id)| (id.to_string(), n % k)).collect()
}

/// Picks, per family, the grid point with the smallest mean held-out loss
/// over person-times; near-ties go to the simpler point.
pub fn tune_hyperparameters(
    tuning: &PanelDataset,
    grid: &TuneGrid,
    base: &Hyperparams,
    settings: &PoslSettings,
    seed: u64,
) -> Result<TuneResult> {
    let points = grid.points(base)?;
    let h = tuning.len();
    if h < 2 {
        return Err(Error::InsufficientFolds);
    }
    let mut warnings = Vec::new();
    let k = MAX_FOLDS.min(h);
    if k < MAX_FOLDS {
        warnings.push(format!("{h} tuning individuals: using {k}-fold CV"));
    }
    let loss_kind = match settings.outcome_mode {
        OutcomeMode::Continuous => LossKind::Squared,
        OutcomeMode::Binary => LossKind::NegativeLogLikelihood,
    };
    let folds = fold_assignment(tuning, k, seed);

    let mut sums: Vec<Vec<f64>> = points.iter().map(|(_, p)| alloc::vec![0.0; p.len()]).collect();
    let mut count = 0usize;
    for fold in 0..k {
        let train = tuning.filter(|i| folds[&i.id] != fold);
        let valid = tuning.filter(|i| folds[&i.id] == fold);
        let fallbacks = PoolFallbacks::from_pool(&train);
        let builder = FeatureBuilder::new(&train.schema, &settings.features, &fallbacks)?;
        let (x, y) = pool_design(&builder, settings, &train)?;
        let (vx, vy) = match pool_design(&builder, settings, &valid) {
            Ok(d) => d,
            Err(Error::EmptyInput(_)) => continue,
            Err(e) => return Err(e),
        };
        count += vy.len();
        let ones = alloc::vec![1.0; vy.len()];
        for (f, (family, grid_points)) in points.iter().enumerate() {
            for (g, (_, hyper)) in grid_points.iter().enumerate() {
                let mut hyper = hyper.clone();
                hyper.seed = seed;
                let spec = LearnerSpec::new(*family, Scope::Historical)
                    .with_mode(settings.outcome_mode)
                    .with_hyper(hyper);
                let loss = fit_matrix(&spec, &x, &y, None, None)
                    .ok()
                    .filter(|m| m.converged)
                    .and_then(|m| m.predict_matrix(&vx).ok())
                    .and_then(|p| cumulative_weighted_loss(&vy, &p, &ones, loss_kind).ok())
                    .filter(|l| l.is_finite())
                    .unwrap_or(f64::INFINITY);
                sums[f][g] += loss;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyInput("tuning person-times"));
    }

    let mut families = BTreeMap::new();
    for ((family, grid_points), sums) in points.iter().zip(&sums) {
        let scores: Vec<GridScore> = grid_points
            .iter()
            .zip(sums)
            .map(|((params, _), s)| GridScore {
                params: params.clone(),
                loss: s / count as f64,
            })
            .collect();
        let best_loss = scores.iter().map(|s| s.loss).fold(f64::INFINITY, f64::min);
        let tolerance = 1e-12 * best_loss.abs().max(1e-300);
        let best = (0..scores.len())
            .filter(|&g| scores[g].loss - best_loss <= tolerance)
            .min_by(|&a, &b| simpler(&grid_points[a].1, &grid_points[b].1).then(a.cmp(&b)))
            .unwrap_or(0);
        families.insert(
            family.name().to_string(),
            FamilyTune {
                params: scores[best].params.clone(),
                loss: scores[best].loss,
                grid: scores,
            },
        );
    }
    Ok(TuneResult {
        families,
        n_folds: k,
        loss_kind,
        warnings,
    })
}

fn simpler(a: &Hyperparams, b: &Hyperparams) -> Ordering {
    let (ka, kb) = (a.complexity(), b.complexity());
    ka.0.total_cmp(&kb.0)
        .then(ka.1.cmp(&kb.1))
        .then(ka.2.cmp(&kb.2))
        .then(ka.3.cmp(&kb.3))
}
