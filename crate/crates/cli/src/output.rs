use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn io(context: &str, err: impl fmt::Display) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{context}: {err}"),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<lilrates_core::Error> for CliError {
    fn from(e: lilrates_core::Error) -> Self {
        use lilrates_core::Error::*;
        let code = match e {
            ToleranceNotMet { .. } | GridInsufficient { .. } => EXIT_TOLERANCE,
            Domain { .. } | Divergent { .. } | UnsupportedModel(_) | InvalidInput(_) => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// Printed with 10 significant digits.
    Sig10(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Sig10(v) => sig10(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) | Cell::Sig10(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

/// Shortest round-trip representation, in exponent form outside
/// `[1e-4, 1e15)`.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn sig10(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.9e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..10).contains(&exp) {
        format!("{:.*}", (9 - exp) as usize, v)
    } else {
        sci
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write_csv<W: Write>(&self, sink: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedInfo {
    pub value: u64,
    /// `flag`, `env` or `default`.
    pub source: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Envelope {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub timestamp: String,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedInfo>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Value,
    pub failures: Vec<String>,
}

/// Result of one subcommand, ready to be written.
pub struct Outcome {
    pub command: &'static str,
    pub config: Value,
    pub seed: Option<SeedInfo>,
    pub table: Table,
    pub summary: Value,
    /// Human-readable lines printed on stderr.
    pub notes: Vec<String>,
    pub failures: Vec<String>,
    pub exit_code: i32,
}

impl Outcome {
    pub fn new(command: &'static str, config: Value, table: Table) -> Self {
        Self {
            command,
            config,
            seed: None,
            table,
            summary: Value::Null,
            notes: Vec::new(),
            failures: Vec::new(),
            exit_code: 0,
        }
    }

    fn envelope(&self) -> Envelope {
        Envelope {
            tool: "lilrates",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            timestamp: chrono::Utc::now().to_rfc3339(),
            config: self.config.clone(),
            seed: self.seed.clone(),
            columns: self.table.columns.clone(),
            rows: self
                .table
                .rows
                .iter()
                .map(|r| r.iter().map(Cell::json).collect())
                .collect(),
            summary: self.summary.clone(),
            failures: self.failures.clone(),
        }
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes the outcome: CSV and sidecar to `out` when given, otherwise CSV
/// (or the envelope with `json`) to stdout.
pub fn emit(outcome: &Outcome, out: Option<&Path>, json: bool) -> Result<(), CliError> {
    let envelope = outcome.envelope();
    let rendered =
        serde_json::to_string_pretty(&envelope).map_err(|e| CliError::io("cannot serialize the envelope", e))?;
    if let Some(path) = out {
        let file = File::create(path).map_err(|e| CliError::io(&format!("cannot create {}", path.display()), e))?;
        outcome
            .table
            .write_csv(file)
            .map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))?;
        let side = sidecar_path(path);
        std::fs::write(&side, rendered.as_bytes() as &[u8])
            .map_err(|e| CliError::io(&format!("cannot write {}", side.display()), e))?;
    }
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    if json {
        writeln!(lock, "{rendered}").map_err(|e| CliError::io("cannot write to stdout", e))?;
    } else if out.is_none() {
        outcome
            .table
            .write_csv(&mut lock)
            .map_err(|e| CliError::io("cannot write to stdout", e))?;
    }
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    for failure in &outcome.failures {
        eprintln!("failure: {failure}");
    }
    Ok(())
}
