//! Wide panel CSV: one row per (individual, session).
//!
//! Mandatory columns are `individual_id`, `session_index` (1-based) and
//! `outcome`; every other column must be declared in the schema sidecar.
//! Empty cells are missing values. Lines starting with `#` are comments.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use posl_core::paneldata::{ColumnKind, ColumnRole, ColumnSpec, PanelDataset, RawRow, Schema};

use crate::error::{CliError, CliResult};
use crate::output::fmt_f64;
use crate::schema::SchemaSidecar;

pub const ID_COLUMN: &str = "individual_id";
pub const SESSION_COLUMN: &str = "session_index";
pub const OUTCOME_COLUMN: &str = "outcome";

const MANDATORY: [&str; 3] = [ID_COLUMN, SESSION_COLUMN, OUTCOME_COLUMN];

pub fn load_panel_csv(csv_path: &Path, sidecar_path: &Path) -> CliResult<PanelDataset> {
    let sidecar = SchemaSidecar::load(sidecar_path)?;
    let text = std::fs::read_to_string(csv_path).map_err(|e| CliError::io(csv_path, e))?;
    parse_panel(&text, &sidecar).map_err(|m| CliError::data(csv_path, m))
}

/// Parses panel CSV text against a sidecar; errors name the offending line.
pub fn parse_panel(text: &str, sidecar: &SchemaSidecar) -> Result<PanelDataset, String> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| format!("header: {e}"))?
        .iter()
        .map(str::to_string)
        .collect();
    let names: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut seen = BTreeSet::new();
    for name in &names {
        if !seen.insert(*name) {
            return Err(format!("header: duplicate column {name}"));
        }
    }
    for m in MANDATORY {
        if !seen.contains(m) {
            return Err(format!("header: missing mandatory column {m}"));
        }
    }
    for name in &names {
        if !MANDATORY.contains(name) && !sidecar.columns.contains_key(*name) {
            return Err(format!("header: column {name} is not declared in the schema sidecar"));
        }
    }
    if let Some(name) = sidecar.columns.keys().find(|k| !seen.contains(k.as_str())) {
        return Err(format!("header: declared column {name} is absent"));
    }
    let position = |name: &str| names.iter().position(|n| *n == name).unwrap();
    let (id_at, session_at, outcome_at) = (position(ID_COLUMN), position(SESSION_COLUMN), position(OUTCOME_COLUMN));
    let mut specs = sidecar.specs_for(&names);

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| format!("{e}"))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != names.len() {
            return Err(format!("line {line}: expected {} fields, found {}", names.len(), rec.len()));
        }
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err("no data rows".into());
    }
    for spec in specs.iter_mut().filter(|s| s.kind == ColumnKind::Categorical && s.levels.is_empty()) {
        let at = position(&spec.name);
        let labels: BTreeSet<&str> = records.iter().map(|(_, r)| &r[at]).filter(|v| !v.is_empty()).collect();
        spec.levels = labels.into_iter().map(str::to_string).collect();
    }

    let mut rows = Vec::with_capacity(records.len());
    for (line, rec) in &records {
        let at = |e: String| format!("line {line}: {e}");
        let id = &rec[id_at];
        if id.is_empty() {
            return Err(at("empty individual_id".into()));
        }
        let session: u32 = rec[session_at]
            .parse()
            .ok()
            .filter(|&s| s >= 1)
            .ok_or_else(|| at(format!("session_index {:?} is not a positive integer", &rec[session_at])))?;
        let outcome = parse_number(&rec[outcome_at]).map_err(|e| at(format!("outcome: {e}")))?;
        let mut baseline = Vec::new();
        let mut covariates = Vec::new();
        for spec in &specs {
            let v = parse_cell(spec, &rec[position(&spec.name)]).map_err(|e| at(format!("{}: {e}", spec.name)))?;
            match spec.role {
                ColumnRole::Baseline => baseline.push(v),
                _ => covariates.push(v),
            }
        }
        rows.push(RawRow {
            individual_id: id.to_string(),
            session_index: session,
            outcome,
            baseline,
            covariates,
        });
    }

    // Individuals keep first-appearance order; sessions are sorted within each.
    let mut first: BTreeMap<String, usize> = BTreeMap::new();
    for r in &rows {
        let n = first.len();
        first.entry(r.individual_id.clone()).or_insert(n);
    }
    rows.sort_by_key(|r| (first[&r.individual_id], r.session_index));
    PanelDataset::from_rows(Schema { columns: specs }, rows).map_err(|e| e.to_string())
}

fn parse_number(cell: &str) -> Result<Option<f64>, String> {
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("{cell:?} is not a finite number")),
    }
}

fn parse_cell(spec: &ColumnSpec, cell: &str) -> Result<Option<f64>, String> {
    if cell.is_empty() {
        return Ok(None);
    }
    match spec.kind {
        ColumnKind::Continuous => parse_number(cell),
        ColumnKind::Binary => match parse_number(cell)? {
            Some(v) if v == 0.0 || v == 1.0 => Ok(Some(v)),
            _ => Err(format!("{cell:?} is not 0 or 1")),
        },
        ColumnKind::Categorical => spec
            .levels
            .iter()
            .position(|l| l == cell)
            .map(|i| Some(i as f64))
            .ok_or_else(|| format!("{cell:?} is not a declared level")),
    }
}

/// Panel CSV text in the layout read by [`parse_panel`], after `preamble`
/// comment lines.
pub fn panel_to_csv(dataset: &PanelDataset, preamble: &str) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = MANDATORY.to_vec();
    header.extend(dataset.schema.columns.iter().map(|c| c.name.as_str()));
    w.write_record(&header).map_err(format_err)?;
    for ind in &dataset.individuals {
        for s in &ind.sessions {
            let mut row = vec![ind.id.clone(), s.session_index.to_string(), opt(s.outcome)];
            let (mut b, mut c) = (ind.baseline.iter(), s.covariates.iter());
            for spec in &dataset.schema.columns {
                let v = match spec.role {
                    ColumnRole::Baseline => b.next(),
                    _ => c.next(),
                }
                .copied()
                .flatten();
                row.push(match (spec.kind, v) {
                    (ColumnKind::Categorical, Some(code)) => spec.levels.get(code as usize).cloned().unwrap_or_default(),
                    (_, v) => opt(v),
                });
            }
            w.write_record(&row).map_err(format_err)?;
        }
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Format(e.to_string()))?)
        .map_err(|e| CliError::Format(e.to_string()))?;
    Ok(format!("{preamble}{body}"))
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub(crate) fn format_err(e: csv::Error) -> CliError {
    CliError::Format(e.to_string())
}
