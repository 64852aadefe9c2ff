use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct CommandInfo {
    pub name: String,
    pub version: String,
    pub scenario_hash: Option<String>,
    pub seed: Option<u64>,
    /// Budgets, sample counts and other knobs that shaped the run.
    pub parameters: BTreeMap<String, Value>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: CommandInfo,
    pub results: Value,
    pub diagnostics: BTreeMap<String, Value>,
}

#[derive(Debug, Serialize)]
pub struct ErrorReport<'a> {
    pub command: &'a CommandInfo,
    pub error: Value,
}

impl<'a> ErrorReport<'a> {
    pub fn new(command: &'a CommandInfo, err: &CliError) -> Self {
        let mut error = json!({
            "kind": err.kind(),
            "message": err.to_string(),
            "exit_code": err.exit_code(),
        });
        if let CliError::Invalid(v) = err {
            error["violations"] = json!(v);
        }
        Self { command, error }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Rows of a table as CSV text.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
