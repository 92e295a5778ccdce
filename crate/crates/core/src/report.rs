//! Machine-readable verification records: one `CheckRecord` per check,
//! written as JSON Lines or CSV, plus a human summary table.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// `{id, anchor, metric, tol, pass, seconds}`; `pass ⇔ metric ≤ tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: String,
    pub metric: f64,
    pub tol: f64,
    pub pass: bool,
    pub seconds: f64,
}

impl CheckRecord {
    pub fn new(id: impl Into<String>, anchor: impl Into<String>, metric: f64, tol: f64, seconds: f64) -> Self {
        let anchor = anchor.into();
        assert!(!anchor.is_empty(), "every check needs an anchor");
        Self { id: id.into(), anchor, metric, tol, pass: metric <= tol, seconds }
    }

    /// Runs `f`, timing it; the closure returns the metric.
    pub fn timed(id: impl Into<String>, anchor: impl Into<String>, tol: f64, f: impl FnOnce() -> Result<f64>) -> Result<Self> {
        let t = Instant::now();
        let metric = f()?;
        Ok(Self::new(id, anchor, metric, tol, t.elapsed().as_secs_f64()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" | "jsonl" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(crate::Error::InvalidArgument(format!("unknown output format '{s}' (json or csv)"))),
        }
    }
}

pub fn write_jsonl(w: &mut impl Write, records: &[CheckRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_csv(w: impl Write, records: &[CheckRecord]) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    for r in records {
        c.serialize(r)?;
    }
    c.flush()?;
    Ok(())
}

pub fn write_records(w: &mut impl Write, records: &[CheckRecord], format: Format) -> Result<()> {
    match format {
        Format::Json => write_jsonl(w, records),
        Format::Csv => write_csv(w, records),
    }
}

pub fn all_pass(records: &[CheckRecord]) -> bool {
    records.iter().all(|r| r.pass)
}

/// Fixed-width table for the error stream.
pub fn summary_table(records: &[CheckRecord]) -> String {
    let width = records.iter().map(|r| r.id.len()).max().unwrap_or(2).max(2);
    let mut out = format!("{:<width$}  {:>11}  {:>9}  {:>8}  result\n", "id", "metric", "tol", "seconds");
    for r in records {
        out.push_str(&format!(
            "{:<width$}  {:>11.3e}  {:>9.1e}  {:>8.3}  {}\n",
            r.id,
            r.metric,
            r.tol,
            r.seconds,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    let failed = records.iter().filter(|r| !r.pass).count();
    out.push_str(&format!("{} checks, {} failed\n", records.len(), failed));
    out
}
