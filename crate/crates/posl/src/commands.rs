//! The four pipeline commands. Each returns a one-line summary for stdout.

use std::path::{Path, PathBuf};

use log::{info, warn};
use posl_core::engine::{expand_library, tune_hyperparameters, PoslPipeline, TuneResult, WorkingRun};
use posl_core::paneldata::{simulate_panel, split_tuning_working, PanelDataset};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{LoadedConfig, Overrides};
use crate::error::{CliError, CliResult};
use crate::output::{
    predictions_csv, save_learners, skips_log, to_json, weights_csv, write_atomic, LearnerBundle, Provenance,
};
use crate::panel_csv::{load_panel_csv, panel_to_csv};
use crate::report::{build_report, ReportInput};
use crate::schema::SchemaSidecar;

pub const TUNE_FILE: &str = "tune_result.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const SKIPS_FILE: &str = "skips.log";
pub const CONFIG_ECHO_FILE: &str = "config.toml";
pub const LEARNERS_FILE: &str = "historical_learners.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const CALIBRATION_FILE: &str = "calibration_curve.csv";
pub const DECISION_FILE: &str = "decision_curve.csv";
pub const PROFILES_FILE: &str = "time_profiles.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneFile {
    pub provenance: Provenance,
    pub result: TuneResult,
}

fn provenance(cfg: &LoadedConfig) -> CliResult<Provenance> {
    Ok(Provenance {
        config_sha256: cfg.config.sha256()?,
        seeds: cfg.config.seeds_label(),
    })
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

fn output_dir(cfg: &LoadedConfig) -> CliResult<PathBuf> {
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn load_working_split(cfg: &LoadedConfig) -> CliResult<(PanelDataset, PanelDataset)> {
    let panel = load_panel_csv(&cfg.input(), &cfg.schema())?;
    Ok(split_tuning_working(&panel, cfg.config.tuning_fraction, cfg.config.seeds.split)?)
}

/// Writes the simulated panel and its schema sidecar to the configured
/// input and schema paths.
pub fn simulate_cmd(config_path: &Path, overrides: &Overrides) -> CliResult<String> {
    let cfg = LoadedConfig::load(config_path, overrides)?;
    cfg.config
        .simulation
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let prov = provenance(&cfg)?;
    let panel = simulate_panel(&cfg.config.simulation)?;
    let (csv_path, schema_path) = (cfg.input(), cfg.schema());
    let csv = panel_to_csv(&panel, &prov.header())?;
    let sidecar = format!("{}{}", prov.header(), SchemaSidecar::from_schema(&panel.schema).to_toml()?);
    ensure_parent(&csv_path)?;
    ensure_parent(&schema_path)?;
    write_atomic(&csv_path, csv.as_bytes())?;
    write_atomic(&schema_path, sidecar.as_bytes())?;
    Ok(format!(
        "simulated {} rows for {} individuals -> {}",
        panel.n_sessions(),
        panel.len(),
        csv_path.display()
    ))
}

/// Grid search on the tuning sample; writes `tune_result.json`.
pub fn tune_cmd(config_path: &Path, overrides: &Overrides) -> CliResult<String> {
    let cfg = LoadedConfig::load(config_path, overrides)?;
    cfg.config.validate()?;
    let prov = provenance(&cfg)?;
    let (tuning, _) = load_working_split(&cfg)?;
    let c = &cfg.config;
    let result = tune_hyperparameters(&tuning, &c.tuning.grid, &c.tuning.base, &c.settings(), c.seeds.split)?;
    for w in &result.warnings {
        warn!("{w}");
    }
    let path = output_dir(&cfg)?.join(TUNE_FILE);
    let winners: Vec<String> = result
        .families
        .iter()
        .map(|(f, t)| {
            let params: Vec<String> = t.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{f}[{}]", params.join(","))
        })
        .collect();
    write_atomic(&path, to_json(&TuneFile { provenance: prov, result })?.as_bytes())?;
    Ok(format!("tuned {} on {} individuals -> {}", winners.join(" "), tuning.len(), path.display()))
}

/// Leave-one-out forward validation of every working individual, one
/// rayon task per individual, merged by (individual, session).
pub fn run_parallel(pipeline: &PoslPipeline, working: &PanelDataset, seed: u64) -> CliResult<WorkingRun> {
    if working.len() < 2 {
        return Err(CliError::Config(format!(
            "working sample has {} individual(s); at least 2 are needed",
            working.len()
        )));
    }
    let shared = pipeline.shared_model(working, seed)?;
    let shared_model = shared.as_ref().map(|(m, _)| m);
    let mut runs: Vec<WorkingRun> = (0..working.len())
        .into_par_iter()
        .map(|i| pipeline.run_one_out(working, i, seed, shared_model))
        .collect();
    if let Some((_, w)) = &shared {
        runs.push(WorkingRun {
            warnings: w.clone(),
            ..WorkingRun::default()
        });
    }
    Ok(WorkingRun::merge(runs))
}

fn load_tune(path: &Path, prov: &Provenance) -> CliResult<Option<TuneResult>> {
    if !path.exists() {
        warn!("{} not found; using the configured hyperparameters", path.display());
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: TuneFile = serde_json::from_str(&text).map_err(|e| CliError::data(path, e.to_string()))?;
    if file.provenance.config_sha256 != prov.config_sha256 {
        warn!("{} was produced under a different config", path.display());
    }
    Ok(Some(file.result))
}

/// Forward validation over the working sample; writes predictions,
/// weights, the skip log and an echo of the effective config.
pub fn run_cmd(config_path: &Path, overrides: &Overrides) -> CliResult<String> {
    let cfg = LoadedConfig::load(config_path, overrides)?;
    cfg.config.validate()?;
    let prov = provenance(&cfg)?;
    let (_, working) = load_working_split(&cfg)?;
    let dir = output_dir(&cfg)?;
    let tuned = load_tune(&dir.join(TUNE_FILE), &prov)?;
    let pipeline = cfg.config.pipeline(tuned.as_ref())?;
    let seed = cfg.config.seeds.learner;
    info!("forward validation of {} working individuals", working.len());
    let run = run_parallel(&pipeline, &working, seed)?;

    let ids = match pipeline.shared_model(&working, seed)? {
        Some((model, _)) => {
            let bundle = LearnerBundle {
                provenance: prov.clone(),
                pool_ids: model.pool_ids.clone(),
                learners: model.historical.clone(),
            };
            save_learners(&dir.join(LEARNERS_FILE), &bundle)?;
            model.learner_ids()
        }
        None => candidate_ids(&pipeline),
    };
    write_atomic(&dir.join(PREDICTIONS_FILE), predictions_csv(&run.records, &ids, &prov)?.as_bytes())?;
    write_atomic(&dir.join(WEIGHTS_FILE), weights_csv(&run.records, &ids, &prov)?.as_bytes())?;
    write_atomic(&dir.join(SKIPS_FILE), skips_log(&run, &prov).as_bytes())?;
    let echo = format!("{}{}", prov.header(), cfg.config.to_toml()?);
    write_atomic(&dir.join(CONFIG_ECHO_FILE), echo.as_bytes())?;
    for w in &run.warnings {
        warn!("{w}");
    }
    Ok(format!(
        "{} predictions for {} individuals, {} skipped -> {}",
        run.records.len(),
        working.len(),
        run.skips.len(),
        dir.display()
    ))
}

/// Candidate ids in record order: individual specs over both schemes,
/// then historical specs.
fn candidate_ids(pipeline: &PoslPipeline) -> Vec<String> {
    let mut ids: Vec<String> = expand_library(&pipeline.individual_specs, pipeline.settings.outcome_mode, 0)
        .iter()
        .map(|s| s.id())
        .collect();
    ids.extend(pipeline.historical_specs.iter().map(|s| s.id()));
    ids
}

/// Metrics and curves from `predictions` (default: the run output).
pub fn report_cmd(config_path: &Path, predictions: Option<&Path>, overrides: &Overrides) -> CliResult<String> {
    let cfg = LoadedConfig::load(config_path, overrides)?;
    let prov = provenance(&cfg)?;
    let dir = output_dir(&cfg)?;
    let path = predictions.map(Path::to_path_buf).unwrap_or_else(|| dir.join(PREDICTIONS_FILE));
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let (ids, records) = crate::output::parse_predictions(&text)?;
    let files = build_report(&ReportInput {
        records: &records,
        learner_ids: &ids,
        mode: cfg.config.mode,
        threshold: cfg.config.threshold,
        config: &cfg.config.report,
        provenance: &prov,
    })?;
    for n in &files.metrics.notes {
        warn!("{n}");
    }
    write_atomic(&dir.join(METRICS_FILE), to_json(&files.metrics)?.as_bytes())?;
    write_atomic(&dir.join(CALIBRATION_FILE), files.calibration_curve.as_bytes())?;
    write_atomic(&dir.join(DECISION_FILE), files.decision_curve.as_bytes())?;
    write_atomic(&dir.join(PROFILES_FILE), files.time_profiles.as_bytes())?;
    Ok(format!(
        "report over {} records and {} predictors -> {}",
        records.len(),
        files.metrics.predictors.len(),
        dir.display()
    ))
}
