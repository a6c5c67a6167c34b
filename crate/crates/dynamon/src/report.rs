//! Run configuration and deterministic machine-readable reports for the
//! batch front end: one seeded generator, explicit budgets, and
//! byte-identical output for identical (command, seed, budget) triples.

use std::path::PathBuf;

use serde::Serialize;

use crate::{Error, Result};

/// Schema version stamped into every JSON report.
pub const SCHEMA: &str = "dynamon/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Usage(format!("unknown format {other:?} (want json or csv)"))),
        }
    }
}

/// Shared run parameters: seed, budgets, output routing.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Maximum exact-polynomial degree.
    pub degree_budget: u64,
    /// Maximum class/torsion enumeration size.
    pub enum_budget: u64,
    /// Maximum permutation group order.
    pub order_budget: u64,
    /// Maximum finite field size.
    pub field_budget: u64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Parallelism hint; reports are identical for any value.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            degree_budget: crate::dynatomic::DEFAULT_DEGREE_BUDGET,
            enum_budget: crate::cyclo::DEFAULT_ENUM_BOUND,
            order_budget: crate::monodromy::DEFAULT_ORDER_BOUND,
            field_budget: crate::ffdyn::FIELD_BUDGET,
            out: None,
            format: Format::Json,
            jobs: 1,
        }
    }
}

impl RunConfig {
    /// Set one `key=value` pair (the config-file vocabulary).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Usage(format!("bad value {value:?} for config key {what}"));
        match key.trim() {
            "seed" => self.seed = value.trim().parse().map_err(|_| bad("seed"))?,
            "degree_budget" => {
                self.degree_budget = value.trim().parse().map_err(|_| bad("degree_budget"))?
            }
            "enum_budget" => {
                self.enum_budget = value.trim().parse().map_err(|_| bad("enum_budget"))?
            }
            "order_budget" => {
                self.order_budget = value.trim().parse().map_err(|_| bad("order_budget"))?
            }
            "field_budget" => {
                self.field_budget = value.trim().parse().map_err(|_| bad("field_budget"))?
            }
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "format" => self.format = value.parse()?,
            "jobs" => self.jobs = value.trim().parse().map_err(|_| bad("jobs"))?,
            other => return Err(Error::Usage(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parse a `key=value` config file (`#` comments, blank lines allowed).
    pub fn load(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Usage(format!("config line {}: expected key=value, got {line:?}", lineno + 1))
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("degree_budget", self.degree_budget),
            ("enum_budget", self.enum_budget),
            ("order_budget", self.order_budget),
            ("field_budget", self.field_budget),
            ("jobs", self.jobs as u64),
        ] {
            if v == 0 {
                return Err(Error::Usage(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// A finished run: schema header, command echo, seed echo, verdict, payload.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub seed: u64,
    pub verdict: &'static str,
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64, pass: bool, data: serde_json::Value) -> Self {
        Report {
            schema: SCHEMA,
            command: command.into(),
            seed,
            verdict: if pass { "PASS" } else { "FAIL" },
            data,
        }
    }

    pub fn pass(&self) -> bool {
        self.verdict == "PASS"
    }

    /// Deterministic JSON rendering (object keys are sorted).
    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Write the report (or a CSV body, when one applies and CSV was
    /// requested) to the configured destination.
    pub fn emit(&self, config: &RunConfig, csv: Option<&str>) -> Result<()> {
        let body = match (config.format, csv) {
            (Format::Csv, Some(table)) => table.to_string(),
            _ => self.render_json(),
        };
        match &config.out {
            Some(path) => std::fs::write(path, body)?,
            None => print!("{body}"),
        }
        Ok(())
    }
}

/// Process exit code for an error: 2 for exhausted budgets, 3 for usage and
/// precondition problems, 1 otherwise.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::DegreeBudget { .. }
        | Error::EnumerationBound { .. }
        | Error::OrderBound(_)
        | Error::FieldBudget { .. }
        | Error::StepBudget(_) => 2,
        Error::Usage(_)
        | Error::Precondition(_)
        | Error::TypeMismatch(_, _)
        | Error::NotCoprime { .. } => 3,
        _ => 1,
    }
}

/// Serialize any payload into a JSON value (deterministically ordered).
pub fn to_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("payload serializes")
}
