//! Schema sidecar: a TOML table keyed by column name.
//!
//! ```toml
//! [columns.age]
//! kind = "continuous"
//! role = "baseline"
//!
//! [columns.access]
//! kind = "categorical"
//! role = "session"
//! levels = ["fistula", "graft", "catheter"]
//! ```
//!
//! Column order follows the CSV header, not the sidecar.

use std::collections::BTreeMap;
use std::path::Path;

use posl_core::paneldata::{ColumnKind, ColumnRole, ColumnSpec, Schema};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnEntry {
    pub kind: ColumnKind,
    pub role: ColumnRole,
    /// Categorical labels; inferred from the data (sorted) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaSidecar {
    pub columns: BTreeMap<String, ColumnEntry>,
}

impl SchemaSidecar {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let sidecar: SchemaSidecar = toml::from_str(&text).map_err(|e| CliError::data(path, e.to_string()))?;
        for (name, c) in &sidecar.columns {
            if c.role == ColumnRole::Outcome {
                return Err(CliError::data(path, format!("column {name}: the outcome column is implicit")));
            }
            if c.kind != ColumnKind::Categorical && c.levels.is_some() {
                return Err(CliError::data(path, format!("column {name}: levels given for a non-categorical column")));
            }
        }
        Ok(sidecar)
    }

    pub fn from_schema(schema: &Schema) -> Self {
        let columns = schema
            .columns
            .iter()
            .map(|c| {
                let levels = (c.kind == ColumnKind::Categorical).then(|| c.levels.clone());
                (
                    c.name.clone(),
                    ColumnEntry {
                        kind: c.kind,
                        role: c.role,
                        levels,
                    },
                )
            })
            .collect();
        Self { columns }
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Format(e.to_string()))
    }

    /// Column specs in the order given by `header`; categorical levels not
    /// declared are left empty for the loader to fill in.
    pub(crate) fn specs_for(&self, header: &[&str]) -> Vec<ColumnSpec> {
        header
            .iter()
            .filter_map(|name| {
                self.columns.get(*name).map(|c| ColumnSpec {
                    name: name.to_string(),
                    kind: c.kind,
                    role: c.role,
                    levels: c.levels.clone().unwrap_or_default(),
                })
            })
            .collect()
    }
}
