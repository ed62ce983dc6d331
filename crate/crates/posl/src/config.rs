//! Run configuration (TOML).
//!
//! Mandatory keys: `paths.{input, schema, output_dir}`, `mode`, `threshold`,
//! `bounds`, `delta`, `recency_window`, `inner_initial_size`, `rwcv_window`,
//! `first_prediction`, `tuning_fraction`, `seeds.{simulation, split, learner}`
//! and `library.{individual, historical}`. The `features`, `simulation`,
//! `tuning` and `report` tables are optional. Relative paths resolve against
//! the directory holding the config file.
//!
//! `bounds` applies to continuous mode; binary mode always bounds to (0, 1).
//! `seeds.simulation` replaces `simulation.seed`.

use std::path::{Path, PathBuf};

use posl_core::engine::{PoslPipeline, PoslSettings, TuneGrid, TuneResult};
use posl_core::learners::{Family, Hyperparams, LearnerSpec, OutcomeMode, Scope};
use posl_core::metrics::{CurveMethod, NetBenefitWeight, DEFAULT_SPAN};
use posl_core::paneldata::{FeatureConfig, SimulationConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub input: PathBuf,
    pub schema: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub simulation: u64,
    /// Tuning/working split and tuning folds.
    pub split: u64,
    /// Randomised learners (forests, boosting subsampling).
    pub learner: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerDescriptor {
    pub family: Family,
    #[serde(default)]
    pub screened: bool,
    #[serde(default)]
    pub hyper: Hyperparams,
}

impl LearnerDescriptor {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            screened: false,
            hyper: Hyperparams::default(),
        }
    }

    fn spec(&self, scope: Scope, mode: OutcomeMode) -> LearnerSpec {
        LearnerSpec::new(self.family, scope)
            .screened(self.screened)
            .with_mode(mode)
            .with_hyper(self.hyper.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Library {
    /// Each entry becomes two candidates, one per inner CV scheme.
    pub individual: Vec<LearnerDescriptor>,
    pub historical: Vec<LearnerDescriptor>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub grid: TuneGrid,
    /// Values for every hyperparameter not on the grid.
    pub base: Hyperparams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub calibration_method: CurveMethod,
    pub calibration_resolution: usize,
    /// Defaults to 20..=28 by 0.5 (continuous) or 0.05..=0.95 by 0.05 (binary).
    pub decision_thresholds: Option<Vec<f64>>,
    pub net_benefit_weight: NetBenefitWeight,
    /// Local-linear span for time profiles; 0 reports raw per-session values.
    pub smoothing_span: f64,
    pub auroc_ci: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            calibration_method: CurveMethod::Binned,
            calibration_resolution: 10,
            decision_thresholds: None,
            net_benefit_weight: NetBenefitWeight::PrevalenceOdds,
            smoothing_span: DEFAULT_SPAN,
            auroc_ci: true,
        }
    }
}

impl ReportConfig {
    pub fn thresholds(&self, mode: OutcomeMode) -> Vec<f64> {
        if let Some(t) = &self.decision_thresholds {
            return t.clone();
        }
        match mode {
            OutcomeMode::Continuous => (0..=16).map(|k| 20.0 + 0.5 * k as f64).collect(),
            OutcomeMode::Binary => (1..=19).map(|k| k as f64 / 20.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: OutcomeMode,
    pub threshold: f64,
    pub bounds: (f64, f64),
    pub delta: f64,
    pub recency_window: usize,
    pub inner_initial_size: usize,
    pub rwcv_window: usize,
    pub first_prediction: usize,
    pub tuning_fraction: f64,
    /// Train historical learners once on the whole working sample.
    #[serde(default)]
    pub shared_pool: bool,
    pub paths: Paths,
    pub seeds: Seeds,
    pub library: Library,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub tuning: TuningConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    /// Replaces all three named seeds.
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub mode: Option<OutcomeMode>,
}

/// A parsed config with overrides applied and its location.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let mut c: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().trim().to_string()))?;
        c.simulation.seed = c.seeds.simulation;
        Ok(c)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Format(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seeds = Seeds {
                simulation: s,
                split: s,
                learner: s,
            };
            self.simulation.seed = s;
        }
        if let Some(out) = &o.out {
            self.paths.output_dir = out.clone();
        }
        if let Some(m) = o.mode {
            self.mode = m;
        }
    }

    pub fn settings(&self) -> PoslSettings {
        let mut s = match self.mode {
            OutcomeMode::Continuous => {
                let mut s = PoslSettings::default();
                s.sl.bounds = self.bounds;
                s
            }
            OutcomeMode::Binary => PoslSettings::binary(self.threshold),
        };
        s.threshold = self.threshold;
        s.sl.delta = self.delta;
        s.sl.recency_window = self.recency_window;
        s.inner_initial_size = self.inner_initial_size;
        s.rwcv_window = self.rwcv_window;
        s.first_prediction = self.first_prediction;
        s.features = self.features.clone();
        s.shared_pool = self.shared_pool;
        s
    }

    /// Learner specs with tuned values written in when a result is given.
    pub fn pipeline(&self, tuned: Option<&TuneResult>) -> CliResult<PoslPipeline> {
        let build = |list: &[LearnerDescriptor], scope| -> CliResult<Vec<LearnerSpec>> {
            list.iter()
                .map(|d| {
                    let mut spec = d.spec(scope, self.mode);
                    if let Some(t) = tuned {
                        t.apply(&mut spec)?;
                    }
                    Ok(spec)
                })
                .collect()
        };
        Ok(PoslPipeline {
            settings: self.settings(),
            individual_specs: build(&self.library.individual, Scope::Individual)?,
            historical_specs: build(&self.library.historical, Scope::Historical)?,
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.tuning_fraction > 0.0 && self.tuning_fraction < 1.0) {
            return bad(format!("tuning_fraction {} must lie in (0, 1)", self.tuning_fraction));
        }
        if self.mode == OutcomeMode::Continuous && !(self.bounds.0 < self.bounds.1) {
            return bad("bounds must satisfy lo < hi".into());
        }
        if self.library.individual.is_empty() && self.library.historical.is_empty() {
            return bad("library is empty".into());
        }
        self.settings().validate().map_err(|e| CliError::Config(e.to_string()))?;
        let p = self.pipeline(None)?;
        for spec in p.individual_specs.iter().chain(&p.historical_specs) {
            spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// SHA-256 of the effective config. The output directory is left out so
    /// that the same run written elsewhere carries the same hash.
    pub fn sha256(&self) -> CliResult<String> {
        let mut c = self.clone();
        c.paths.output_dir = PathBuf::new();
        Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
    }

    pub fn seeds_label(&self) -> String {
        format!(
            "simulation:{},split:{},learner:{}",
            self.seeds.simulation, self.seeds.split, self.seeds.learner
        )
    }
}

impl LoadedConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = RunConfig::from_toml(&text)?;
        config.apply(overrides);
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base_dir })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn input(&self) -> PathBuf {
        self.resolve(&self.config.paths.input)
    }

    pub fn schema(&self) -> PathBuf {
        self.resolve(&self.config.paths.schema)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.paths.output_dir)
    }
}

/// A complete config with the documented defaults, used by `posl` tests and
/// as a starting point for new projects.
pub fn example_config() -> RunConfig {
    let lasso = LearnerDescriptor {
        hyper: Hyperparams {
            lambda: 0.1,
            ..Hyperparams::default()
        },
        ..LearnerDescriptor::new(Family::Lasso)
    };
    RunConfig {
        mode: OutcomeMode::Continuous,
        threshold: 24.0,
        bounds: (0.0, 50.0),
        delta: 0.1,
        recency_window: 5,
        inner_initial_size: 5,
        rwcv_window: 10,
        first_prediction: 12,
        tuning_fraction: 0.25,
        shared_pool: false,
        paths: Paths {
            input: "panel.csv".into(),
            schema: "panel.schema.toml".into(),
            output_dir: "out".into(),
        },
        seeds: Seeds {
            simulation: 1,
            split: 2,
            learner: 3,
        },
        library: Library {
            individual: vec![LearnerDescriptor::new(Family::Mean), LearnerDescriptor::new(Family::Ridge)],
            historical: vec![LearnerDescriptor::new(Family::Mean), lasso],
        },
        features: FeatureConfig::default(),
        simulation: SimulationConfig::default(),
        tuning: TuningConfig::default(),
        report: ReportConfig::default(),
    }
}
