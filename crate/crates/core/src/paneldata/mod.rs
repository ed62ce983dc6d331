//! Panel data model: individuals observed over ordered sessions.

mod features;
mod simulate;

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::math::round;
use crate::{Error, Result};

pub use features::{build_features, FeatureBuilder, FeatureConfig, FeatureRow, PoolFallbacks};
pub use simulate::{simulate_panel, SimulationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Binary,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Baseline,
    Session,
    Outcome,
}

/// One declared predictor column. Categorical values are stored as the
/// index of their label in `levels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub role: ColumnRole,
    #[serde(default)]
    pub levels: Vec<String>,
}

impl ColumnSpec {
    pub fn new(name: &str, kind: ColumnKind, role: ColumnRole) -> Self {
        Self {
            name: name.to_string(),
            kind,
            role,
            levels: Vec::new(),
        }
    }

    /// Number of numeric feature columns this source column expands to.
    pub fn encoded_width(&self) -> usize {
        match self.kind {
            ColumnKind::Categorical => self.levels.len().saturating_sub(1),
            _ => 1,
        }
    }
}

/// Baseline and session columns in file order; the outcome is implicit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn baseline(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(|c| c.role == ColumnRole::Baseline)
    }

    pub fn session(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(|c| c.role == ColumnRole::Session)
    }

    pub fn n_baseline(&self) -> usize {
        self.baseline().count()
    }

    pub fn n_session(&self) -> usize {
        self.session().count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    /// 1-based, strictly increasing within an individual.
    pub session_index: u32,
    pub outcome: Option<f64>,
    pub covariates: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualSeries {
    pub id: String,
    pub baseline: Vec<Option<f64>>,
    pub sessions: Vec<SessionRecord>,
}

impl IndividualSeries {
    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    fn validate(&self, schema: &Schema) -> Result<()> {
        if self.sessions.is_empty() {
            return Err(Error::EmptyInput("individual without sessions"));
        }
        let n_base = schema.n_baseline();
        if self.baseline.len() != n_base {
            return Err(Error::ArityMismatch {
                individual: self.id.clone(),
                session: self.sessions[0].session_index,
                expected: n_base,
                found: self.baseline.len(),
            });
        }
        let n_sess = schema.n_session();
        let mut prev = 0u32;
        for s in &self.sessions {
            if s.session_index < 1 {
                return Err(Error::InvalidParameter(alloc::format!(
                    "session index must be >= 1 (individual {})",
                    self.id
                )));
            }
            if s.session_index == prev {
                return Err(Error::DuplicateSession {
                    individual: self.id.clone(),
                    session: s.session_index,
                });
            }
            if s.session_index < prev {
                return Err(Error::NonMonotoneSession {
                    individual: self.id.clone(),
                    session: s.session_index,
                });
            }
            if s.covariates.len() != n_sess {
                return Err(Error::ArityMismatch {
                    individual: self.id.clone(),
                    session: s.session_index,
                    expected: n_sess,
                    found: s.covariates.len(),
                });
            }
            prev = s.session_index;
        }
        Ok(())
    }
}

/// One person-session row as read from a wide file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub individual_id: String,
    pub session_index: u32,
    pub outcome: Option<f64>,
    pub baseline: Vec<Option<f64>>,
    pub covariates: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelDataset {
    pub schema: Schema,
    pub individuals: Vec<IndividualSeries>,
}

impl PanelDataset {
    /// Validates ids, session ordering and arity.
    pub fn new(schema: Schema, individuals: Vec<IndividualSeries>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for ind in &individuals {
            if !seen.insert(ind.id.as_str()) {
                return Err(Error::DuplicateIndividual(ind.id.clone()));
            }
            ind.validate(&schema)?;
        }
        Ok(Self {
            schema,
            individuals,
        })
    }

    /// Groups rows by individual (first-appearance order). Sessions must
    /// appear in increasing order within each individual; the first
    /// non-missing baseline value per column is kept.
    pub fn from_rows(schema: Schema, rows: Vec<RawRow>) -> Result<Self> {
        let n_base = schema.n_baseline();
        let n_sess = schema.n_session();
        let mut individuals: Vec<IndividualSeries> = Vec::new();
        let mut index = alloc::collections::BTreeMap::<String, usize>::new();
        for row in rows {
            if row.baseline.len() != n_base || row.covariates.len() != n_sess {
                return Err(Error::ArityMismatch {
                    individual: row.individual_id,
                    session: row.session_index,
                    expected: n_base + n_sess,
                    found: row.baseline.len() + row.covariates.len(),
                });
            }
            let slot = match index.get(&row.individual_id) {
                Some(&i) => i,
                None => {
                    index.insert(row.individual_id.clone(), individuals.len());
                    individuals.push(IndividualSeries {
                        id: row.individual_id.clone(),
                        baseline: row.baseline.clone(),
                        sessions: Vec::new(),
                    });
                    individuals.len() - 1
                }
            };
            let ind = &mut individuals[slot];
            if let Some(last) = ind.sessions.last() {
                if row.session_index == last.session_index {
                    return Err(Error::DuplicateSession {
                        individual: row.individual_id,
                        session: row.session_index,
                    });
                }
                if row.session_index < last.session_index {
                    return Err(Error::NonMonotoneSession {
                        individual: row.individual_id,
                        session: row.session_index,
                    });
                }
            }
            for (b, v) in ind.baseline.iter_mut().zip(&row.baseline) {
                if b.is_none() {
                    *b = *v;
                }
            }
            ind.sessions.push(SessionRecord {
                session_index: row.session_index,
                outcome: row.outcome,
                covariates: row.covariates,
            });
        }
        Self::new(schema, individuals)
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn n_sessions(&self) -> usize {
        self.individuals.iter().map(|i| i.len()).sum()
    }

    pub fn get(&self, id: &str) -> Option<&IndividualSeries> {
        self.individuals.iter().find(|i| i.id == id)
    }

    /// Dataset restricted to the individuals accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&IndividualSeries) -> bool) -> PanelDataset {
        PanelDataset {
            schema: self.schema.clone(),
            individuals: self.individuals.iter().filter(|i| keep(i)).cloned().collect(),
        }
    }
}

/// Splits whole individuals into a tuning part holding `fraction` of them
/// (rounded) and a working part. Membership depends only on the sorted set
/// of ids and the seed.
pub fn split_tuning_working(
    dataset: &PanelDataset,
    fraction: f64,
    seed: u64,
) -> Result<(PanelDataset, PanelDataset)> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "tuning fraction {fraction} outside (0, 1)"
        )));
    }
    let h = dataset.len();
    let n_tuning = round(fraction * h as f64) as usize;
    if n_tuning == 0 || n_tuning >= h {
        return Err(Error::EmptyPartition(fraction));
    }
    let mut ids: Vec<&str> = dataset.individuals.iter().map(|i| i.id.as_str()).collect();
    ids.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let tuning_ids: BTreeSet<&str> = ids[..n_tuning].iter().copied().collect();
    let tuning = dataset.filter(|i| tuning_ids.contains(i.id.as_str()));
    let working = dataset.filter(|i| !tuning_ids.contains(i.id.as_str()));
    Ok((tuning, working))
}

/// Series and per-session targets after applying the outcome-mode rules:
/// continuous drops sessions with a missing outcome, binary keeps them as
/// unsuccessful (`0`) and dichotomises the rest at `threshold`.
pub fn prepare_targets(
    series: &IndividualSeries,
    binary_threshold: Option<f64>,
) -> (IndividualSeries, Vec<f64>) {
    match binary_threshold {
        None => {
            let sessions: Vec<SessionRecord> = series
                .sessions
                .iter()
                .filter(|s| s.outcome.is_some())
                .cloned()
                .collect();
            let targets = sessions.iter().map(|s| s.outcome.unwrap()).collect();
            (
                IndividualSeries {
                    id: series.id.clone(),
                    baseline: series.baseline.clone(),
                    sessions,
                },
                targets,
            )
        }
        Some(threshold) => {
            let targets = series
                .sessions
                .iter()
                .map(|s| match s.outcome {
                    Some(y) if y >= threshold => 1.0,
                    _ => 0.0,
                })
                .collect();
            (series.clone(), targets)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn schema() -> Schema {
        Schema {
            columns: vec![
                ColumnSpec::new("age", ColumnKind::Continuous, ColumnRole::Baseline),
                ColumnSpec::new("albumin", ColumnKind::Continuous, ColumnRole::Session),
            ],
        }
    }

    fn row(id: &str, s: u32, y: Option<f64>, alb: Option<f64>) -> RawRow {
        RawRow {
            individual_id: id.to_string(),
            session_index: s,
            outcome: y,
            baseline: vec![Some(60.0)],
            covariates: vec![alb],
        }
    }

    fn toy(n: usize) -> PanelDataset {
        let mut rows = Vec::new();
        for i in 0..n {
            for s in 1..=3 {
                rows.push(row(&alloc::format!("p{i:02}"), s, Some(20.0), Some(1.0)));
            }
        }
        PanelDataset::from_rows(schema(), rows).unwrap()
    }

    #[test]
    fn groups_rows_by_individual() {
        let rows = vec![
            row("A", 1, Some(20.0), Some(40.0)),
            row("B", 1, Some(21.0), Some(41.0)),
            row("A", 2, Some(22.0), None),
            row("B", 2, Some(23.0), Some(42.0)),
            row("A", 3, Some(24.0), Some(43.0)),
            row("B", 3, Some(25.0), Some(44.0)),
        ];
        let ds = PanelDataset::from_rows(schema(), rows).unwrap();
        assert_eq!(ds.len(), 2);
        assert!(ds.individuals.iter().all(|i| i.len() == 3));
        assert_eq!(ds.get("A").unwrap().sessions[1].covariates[0], None);
    }

    #[test]
    fn rejects_non_monotone_and_duplicates() {
        let rows = vec![row("A", 1, None, None), row("A", 3, None, None), row("A", 2, None, None)];
        assert!(matches!(
            PanelDataset::from_rows(schema(), rows),
            Err(Error::NonMonotoneSession { session: 2, .. })
        ));
        let rows = vec![row("A", 1, None, None), row("A", 1, None, None)];
        assert!(matches!(
            PanelDataset::from_rows(schema(), rows),
            Err(Error::DuplicateSession { session: 1, .. })
        ));
        let mut bad = row("A", 1, None, None);
        bad.covariates.push(Some(1.0));
        assert!(matches!(
            PanelDataset::from_rows(schema(), vec![bad]),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn split_is_a_deterministic_partition() {
        let ds = toy(10);
        let (t, w) = split_tuning_working(&ds, 0.6, 7).unwrap();
        assert_eq!((t.len(), w.len()), (6, 4));
        let mut all: Vec<_> = t.individuals.iter().chain(&w.individuals).map(|i| i.id.clone()).collect();
        all.sort();
        let mut orig: Vec<_> = ds.individuals.iter().map(|i| i.id.clone()).collect();
        orig.sort();
        assert_eq!(all, orig);
        let (t2, w2) = split_tuning_working(&ds, 0.6, 7).unwrap();
        assert_eq!((t, w), (t2, w2));
    }

    #[test]
    fn split_ignores_row_order() {
        let ds = toy(10);
        let mut shuffled = ds.clone();
        shuffled.individuals.reverse();
        let (t1, _) = split_tuning_working(&ds, 0.3, 3).unwrap();
        let (t2, _) = split_tuning_working(&shuffled, 0.3, 3).unwrap();
        let ids = |d: &PanelDataset| {
            let mut v: Vec<_> = d.individuals.iter().map(|i| i.id.clone()).collect();
            v.sort();
            v
        };
        assert_eq!(ids(&t1), ids(&t2));
    }

    #[test]
    fn split_rejects_empty_partition() {
        assert!(matches!(
            split_tuning_working(&toy(1), 0.5, 1),
            Err(Error::EmptyPartition(_))
        ));
    }

    #[test]
    fn outcome_mode_rules() {
        let series = IndividualSeries {
            id: "A".into(),
            baseline: vec![None],
            sessions: vec![
                SessionRecord { session_index: 1, outcome: Some(25.0), covariates: vec![None] },
                SessionRecord { session_index: 2, outcome: None, covariates: vec![None] },
                SessionRecord { session_index: 3, outcome: Some(20.0), covariates: vec![None] },
            ],
        };
        let (s, y) = prepare_targets(&series, None);
        assert_eq!(s.len(), 2);
        assert_eq!(y, vec![25.0, 20.0]);
        let (s, y) = prepare_targets(&series, Some(24.0));
        assert_eq!(s.len(), 3);
        assert_eq!(y, vec![1.0, 0.0, 0.0]);
    }
}
