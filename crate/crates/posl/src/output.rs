//! Output files: atomic writes, provenance headers and the run formats.

use std::io::Write;
use std::path::Path;

use posl_core::cv::FoldPlan;
use posl_core::engine::{FinalPrediction, PredictionRecord, SkipEntry, WorkingRun};
use posl_core::ensemble::AlphaWeights;
use posl_core::learners::FittedLearner;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::panel_csv::format_err;

/// Shortest text that parses back to the same `f64`, with an exponent for
/// very small or large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Config hash and seeds stamped on every output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seeds: String,
}

impl Provenance {
    pub fn header(&self) -> String {
        format!("# posl config_sha256={} seeds={}\n", self.config_sha256, self.seeds)
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn finish(w: csv::Writer<Vec<u8>>, header: &str) -> CliResult<String> {
    let body = w.into_inner().map_err(|e| CliError::Format(e.to_string()))?;
    let body = String::from_utf8(body).map_err(|e| CliError::Format(e.to_string()))?;
    Ok(format!("{header}{body}"))
}

const FIXED: [&str; 16] = [
    "individual_id",
    "session_index",
    "position",
    "observed",
    "n_meta_rows",
    "dropped_folds",
    "dsl_choice",
    "dsl_id",
    "dsl",
    "dsl_pre_truncation",
    "dsl_truncated",
    "esl_convex",
    "esl_convex_pre_truncation",
    "esl_convex_truncated",
    "esl_nonconvex",
    "esl_nonconvex_pre_truncation",
];
const LAST_FIXED: &str = "esl_nonconvex_truncated";
pub const N_FIXED_COLUMNS: usize = FIXED.len() + 1;

/// Header of predictions.csv: the fixed columns, then `pred_<id>`,
/// `alpha_convex_<id>` and `alpha_nonconvex_<id>` per candidate.
pub fn predictions_header(learner_ids: &[String]) -> Vec<String> {
    let mut h: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    h.push(LAST_FIXED.into());
    for prefix in ["pred_", "alpha_convex_", "alpha_nonconvex_"] {
        h.extend(learner_ids.iter().map(|id| format!("{prefix}{id}")));
    }
    h
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}

pub fn predictions_csv(records: &[PredictionRecord], learner_ids: &[String], prov: &Provenance) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(predictions_header(learner_ids)).map_err(format_err)?;
    for r in records {
        if r.candidate_predictions.len() != learner_ids.len() {
            return Err(CliError::Format(format!(
                "record {} session {} has {} candidates, header has {}",
                r.individual_id,
                r.session_index,
                r.candidate_predictions.len(),
                learner_ids.len()
            )));
        }
        let mut row = vec![
            r.individual_id.clone(),
            r.session_index.to_string(),
            r.position.to_string(),
            r.observed.map(fmt_f64).unwrap_or_default(),
            r.n_meta_rows.to_string(),
            r.dropped_folds.to_string(),
            r.dsl_choice.to_string(),
            r.dsl_id.clone(),
        ];
        for f in [&r.dsl, &r.esl_convex, &r.esl_nonconvex] {
            row.extend([fmt_f64(f.value), fmt_f64(f.pre_truncation), flag(f.truncated)]);
        }
        row.extend(r.candidate_predictions.iter().copied().map(fmt_f64));
        row.extend(r.alpha_convex.alpha.iter().copied().map(fmt_f64));
        row.extend(r.alpha_nonconvex.alpha.iter().copied().map(fmt_f64));
        w.write_record(&row).map_err(format_err)?;
    }
    finish(w, &prov.header())
}

/// Reads predictions.csv back into records and the candidate ids.
pub fn parse_predictions(text: &str) -> CliResult<(Vec<String>, Vec<PredictionRecord>)> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().map_err(format_err)?.iter().map(str::to_string).collect();
    let n_extra = header.len().checked_sub(N_FIXED_COLUMNS).filter(|n| n % 3 == 0);
    let fixed_ok = header.iter().zip(FIXED.iter().chain([&LAST_FIXED])).all(|(a, b)| a == b);
    let c = match n_extra {
        Some(n) if fixed_ok => n / 3,
        _ => return Err(CliError::Format("predictions header does not match the expected layout".into())),
    };
    let ids: Vec<String> = header[N_FIXED_COLUMNS..N_FIXED_COLUMNS + c]
        .iter()
        .map(|h| h.strip_prefix("pred_").map(str::to_string))
        .collect::<Option<_>>()
        .ok_or_else(|| CliError::Format("candidate columns must start with pred_".into()))?;
    if predictions_header(&ids) != header {
        return Err(CliError::Format("alpha columns do not match the candidate columns".into()));
    }

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(format_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |col: &str| CliError::Format(format!("predictions line {line}: bad value in {col}"));
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(&header[i]));
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(&header[i]));
        let boolean = |i: usize| match &rec[i] {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad(&header[i])),
        };
        let fin = |i: usize| -> CliResult<FinalPrediction> {
            Ok(FinalPrediction {
                value: num(i)?,
                pre_truncation: num(i + 1)?,
                truncated: boolean(i + 2)?,
            })
        };
        let span = |k: usize| -> CliResult<Vec<f64>> {
            (0..c).map(|j| num(N_FIXED_COLUMNS + k * c + j)).collect()
        };
        records.push(PredictionRecord {
            individual_id: rec[0].to_string(),
            session_index: rec[1].parse().map_err(|_| bad("session_index"))?,
            position: int(2)?,
            observed: if rec[3].is_empty() { None } else { Some(num(3)?) },
            n_meta_rows: int(4)?,
            dropped_folds: int(5)?,
            dsl_choice: int(6)?,
            dsl_id: rec[7].to_string(),
            dsl: fin(8)?,
            esl_convex: fin(11)?,
            esl_nonconvex: fin(14)?,
            candidate_predictions: span(0)?,
            alpha_convex: AlphaWeights {
                alpha: span(1)?,
                convexified: true,
            },
            alpha_nonconvex: AlphaWeights {
                alpha: span(2)?,
                convexified: false,
            },
        });
    }
    Ok((ids, records))
}

/// Long format: one row per (individual, session, candidate).
pub fn weights_csv(records: &[PredictionRecord], learner_ids: &[String], prov: &Provenance) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "individual_id",
        "session_index",
        "learner_id",
        "scope",
        "alpha_convex",
        "alpha_nonconvex",
        "dsl_selected",
    ])
    .map_err(format_err)?;
    for r in records {
        for (j, id) in learner_ids.iter().enumerate() {
            let scope = if id.starts_with("hist") { "historical" } else { "individual" };
            w.write_record([
                r.individual_id.clone(),
                r.session_index.to_string(),
                id.clone(),
                scope.into(),
                fmt_f64(r.alpha_convex.alpha[j]),
                fmt_f64(r.alpha_nonconvex.alpha[j]),
                flag(r.dsl_choice == j),
            ])
            .map_err(format_err)?;
        }
    }
    finish(w, &prov.header())
}

/// Tab-separated `skip` and `warning` lines.
pub fn skips_log(run: &WorkingRun, prov: &Provenance) -> String {
    let mut out = prov.header();
    for SkipEntry {
        individual_id,
        session_index,
        reason,
    } in &run.skips
    {
        let s = session_index.map_or("-".to_string(), |s| s.to_string());
        out.push_str(&format!("skip\t{individual_id}\t{s}\t{reason}\n"));
    }
    for w in &run.warnings {
        out.push_str(&format!("warning\t{w}\n"));
    }
    out
}

/// Fitted learners with provenance, as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerBundle {
    pub provenance: Provenance,
    pub pool_ids: Vec<String>,
    pub learners: Vec<FittedLearner>,
}

pub fn save_learners(path: &Path, bundle: &LearnerBundle) -> CliResult<()> {
    let text = serde_json::to_string_pretty(bundle).map_err(|e| CliError::Format(e.to_string()))?;
    write_atomic(path, format!("{text}\n").as_bytes())
}

pub fn load_learners(path: &Path) -> CliResult<LearnerBundle> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(path, e.to_string()))
}

/// One row per (fold, role, position).
pub fn fold_plan_csv(plan: &FoldPlan) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["fold", "role", "position"]).map_err(format_err)?;
    for (v, fold) in plan.folds.iter().enumerate() {
        for (role, positions) in [("train", &fold.train), ("validate", &fold.validate)] {
            for p in positions {
                w.write_record([(v + 1).to_string(), role.into(), p.to_string()]).map_err(format_err)?;
            }
        }
    }
    finish(w, "")
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use posl_core::cv::make_rocv;

    fn prov() -> Provenance {
        Provenance {
            config_sha256: "ab".into(),
            seeds: "simulation:1,split:2,learner:3".into(),
        }
    }

    fn record(id: &str, session: u32) -> PredictionRecord {
        let f = |v: f64, t: bool| FinalPrediction {
            value: v,
            pre_truncation: if t { v + 1.0 } else { v },
            truncated: t,
        };
        PredictionRecord {
            individual_id: id.into(),
            session_index: session,
            position: 12,
            candidate_predictions: vec![1.5, 0.1 + 0.2],
            alpha_convex: AlphaWeights {
                alpha: vec![0.25, 0.75],
                convexified: true,
            },
            alpha_nonconvex: AlphaWeights {
                alpha: vec![0.0, 1.0 / 3.0],
                convexified: false,
            },
            dsl_choice: 1,
            dsl_id: "hist_mean".into(),
            dsl: f(0.1 + 0.2, false),
            esl_convex: f(50.0, true),
            esl_nonconvex: f(2.0, false),
            observed: if session == 13 { None } else { Some(3.25) },
            n_meta_rows: 6,
            dropped_folds: 1,
        }
    }

    #[test]
    fn predictions_round_trip_exactly() {
        let ids = vec!["ind_rocv_mean".to_string(), "hist_mean".to_string()];
        let records = vec![record("a", 12), record("a", 13)];
        let text = predictions_csv(&records, &ids, &prov()).unwrap();
        assert!(text.starts_with("# posl config_sha256=ab seeds=simulation:1,split:2,learner:3\n"));
        let header = text.lines().nth(1).unwrap();
        assert_eq!(header.split(',').count(), N_FIXED_COLUMNS + 3 * ids.len());
        let (back_ids, back) = parse_predictions(&text).unwrap();
        assert_eq!(back_ids, ids);
        assert_eq!(back, records);
    }

    #[test]
    fn malformed_predictions_are_rejected() {
        assert!(parse_predictions("a,b\n1,2\n").is_err());
        let ids = vec!["x".to_string()];
        let text = predictions_csv(&[record("a", 12)], &["p".into(), "q".into()], &prov()).unwrap();
        let broken = text.replacen(",0.25,", ",zz,", 1);
        assert!(parse_predictions(&broken).is_err());
        assert!(predictions_csv(&[record("a", 12)], &ids, &prov()).is_err());
    }

    #[test]
    fn weights_are_long_format() {
        let ids = vec!["ind_rocv_mean".to_string(), "hist_mean".to_string()];
        let text = weights_csv(&[record("a", 12)], &ids, &prov()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "a,12,ind_rocv_mean,individual,0.25,0.0,0");
        assert_eq!(lines[3], "a,12,hist_mean,historical,0.75,0.3333333333333333,1");
    }

    #[test]
    fn atomic_write_replaces_and_fails_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        let missing = dir.path().join("no/such/dir/x.csv");
        let e = write_atomic(&missing, b"x").unwrap_err();
        assert_eq!(e.category(), "io");
        assert!(!missing.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn fold_plan_export() {
        let plan = make_rocv(4, 2, 1).unwrap();
        let text = fold_plan_csv(&plan).unwrap();
        assert_eq!(
            text,
            "fold,role,position\n1,train,1\n1,train,2\n1,validate,3\n2,train,1\n2,train,2\n2,train,3\n2,validate,4\n"
        );
    }

    #[test]
    fn skips_log_lines() {
        let run = WorkingRun {
            records: vec![],
            skips: vec![SkipEntry {
                individual_id: "p7".into(),
                session_index: None,
                reason: "series too short".into(),
            }],
            warnings: vec!["w".into()],
        };
        let log = skips_log(&run, &prov());
        assert_eq!(log.lines().nth(1), Some("skip\tp7\t-\tseries too short"));
        assert_eq!(log.lines().nth(2), Some("warning\tw"));
    }

    proptest::proptest! {
        #[test]
        fn floats_survive_the_csv(bits in proptest::num::u64::ANY, pre in -1e300f64..1e300) {
            let v = f64::from_bits(bits);
            proptest::prop_assume!(v.is_finite());
            proptest::prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());

            let mut r = record("b", 20);
            r.candidate_predictions[0] = v;
            r.esl_nonconvex.pre_truncation = pre;
            let ids = vec!["p".to_string(), "q".to_string()];
            let (_, back) = parse_predictions(&predictions_csv(std::slice::from_ref(&r), &ids, &prov()).unwrap()).unwrap();
            proptest::prop_assert_eq!(back[0].candidate_predictions[0].to_bits(), v.to_bits());
            proptest::prop_assert_eq!(back[0].esl_nonconvex.pre_truncation, pre);
        }
    }
}
