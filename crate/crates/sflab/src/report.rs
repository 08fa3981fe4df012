//! The JSON report envelope and the separate timings file.
//!
//! A report is `{"schema_version", "config", "payload"}`. Fields may be
//! added under the same schema version but never removed. Every number in
//! the payload must be finite; absent optional values are omitted rather
//! than written as `null`, so any `null` signals a non-finite number.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::RunError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: RunConfig,
    pub payload: Value,
}

/// Path of the first `null` in `v`, if any.
pub fn find_null(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some(String::new()),
        Value::Array(items) => items.iter().enumerate().find_map(|(i, x)| find_null(x).map(|p| format!("[{i}]{p}"))),
        Value::Object(map) => map.iter().find_map(|(k, x)| find_null(x).map(|p| format!(".{k}{p}"))),
        _ => None,
    }
}

pub fn to_payload<T: Serialize>(value: &T) -> Result<Value, RunError> {
    serde_json::to_value(value).map_err(|e| RunError::Report(e.to_string()))
}

impl Report {
    pub fn new(config: RunConfig, payload: Value) -> Result<Report, RunError> {
        if let Some(path) = find_null(&payload) {
            return Err(RunError::Report(format!("non-finite value at payload{path}")));
        }
        Ok(Report { schema_version: REPORT_SCHEMA_VERSION, config, payload })
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub command: String,
    pub threads: usize,
    pub stages: Vec<Stage>,
    pub total_seconds: f64,
}

/// Wall-clock laps for the timings file.
#[derive(Debug)]
pub struct Stopwatch {
    start: Instant,
    last: Instant,
    stages: Vec<Stage>,
}

impl Default for Stopwatch {
    fn default() -> Self {
        let now = Instant::now();
        Stopwatch { start: now, last: now, stages: Vec::new() }
    }
}

impl Stopwatch {
    pub fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.stages.push(Stage { name: name.into(), seconds: (now - self.last).as_secs_f64() });
        self.last = now;
    }

    pub fn finish(self, command: &str, threads: usize) -> Timings {
        Timings {
            command: command.into(),
            threads,
            total_seconds: self.start.elapsed().as_secs_f64(),
            stages: self.stages,
        }
    }
}
