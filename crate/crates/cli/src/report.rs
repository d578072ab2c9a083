//! Scenario reports: named assertions, a JSON body and CSV tables.

use std::fs;
use std::path::Path;

use orbitlets_core::decomp::grid::SampledSignal;
use serde::Serialize;
use serde_json::Value;

use crate::config::Config;

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", self.name)))?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Full-precision float for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub config: Value,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub results: Value,
    #[serde(skip)]
    pub tables: Vec<Table>,
    /// sampled grids written as raw little-endian pairs next to the CSV tables
    #[serde(skip)]
    pub raw: Vec<(String, SampledSignal)>,
    /// wall-clock seconds per phase, kept out of the JSON so that it stays reproducible
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl Report {
    pub fn new(scenario: &str, config: &Config) -> Self {
        Report {
            scenario: scenario.into(),
            config: config.to_json(),
            passed: true,
            assertions: vec![],
            results: Value::Null,
            tables: vec![],
            raw: vec![],
            timings: vec![],
        }
    }

    pub fn assert(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.passed &= passed;
        self.assertions.push(Assertion { name: name.into(), passed, detail: detail.into() });
    }

    /// Records a timing and asserts it stays below `limit` seconds.
    pub fn timed(&mut self, name: &str, seconds: f64, limit: f64) {
        self.timings.push((name.into(), seconds));
        self.assert(name, seconds < limit, format!("below {limit} s"));
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes the JSON report, every table and every blob into `dir`.
    pub fn emit(&self, dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{}.json", self.scenario)), self.json())?;
        for t in &self.tables {
            t.write(dir)?;
        }
        for (name, s) in &self.raw {
            s.save_raw(&dir.join(name))?;
        }
        if !self.timings.is_empty() {
            let mut t = Table::new("timings", &["phase", "seconds"]);
            for (name, s) in &self.timings {
                t.push(vec![name.clone(), format!("{s:.3}")]);
            }
            t.write(dir)?;
        }
        Ok(())
    }
}
