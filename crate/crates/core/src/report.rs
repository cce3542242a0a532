//! Tabular experiment output with a fixed column schema, CSV and JSON writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::{Error, Result};

/// Crate version plus the `git describe` of the build.
pub fn version_string() -> String {
    format!(
        "torsion-core {} ({})",
        env!("CARGO_PKG_VERSION"),
        env!("TORSION_GIT_DESCRIBE")
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Bool(bool),
    Text(String),
    /// Written as an empty CSV field and JSON `null`.
    Missing,
}

impl Cell {
    fn csv_field(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Real(v) if v.is_finite() => json!(v),
            Cell::Real(v) => json!(v.to_string()),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Real(v) => Some(v),
            Cell::Int(v) => Some(v as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

/// A named assertion evaluated over the report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Index of the first row that violates the assertion, when row-based.
    pub first_failing_row: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub experiment: String,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    summary: Vec<(String, Cell)>,
    checks: Vec<Check>,
    provenance: Vec<(String, Value)>,
}

impl SweepReport {
    pub fn new(experiment: &str, columns: &[&str]) -> Self {
        SweepReport {
            experiment: experiment.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            checks: Vec::new(),
            provenance: vec![("version".into(), json!(version_string()))],
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn summary(&self) -> &[(String, Cell)] {
        &self.summary
    }

    pub fn push_row(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::validation(format!(
                "row has {} cells but the schema has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column (`None` for non-numeric cells).
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let j = self
            .column_index(name)
            .ok_or_else(|| Error::validation(format!("no column named '{name}'")))?;
        Ok(self.rows.iter().map(|r| r[j].as_f64()).collect())
    }

    pub fn set_summary(&mut self, key: &str, value: impl Into<Cell>) {
        let value = value.into();
        match self.summary.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.summary.push((key.to_string(), value)),
        }
    }

    pub fn summary_value(&self, key: &str) -> Option<&Cell> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn set_provenance(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        let value = serde_json::to_value(value)?;
        match self.provenance.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.provenance.push((key.to_string(), value)),
        }
        Ok(())
    }

    pub fn check(&mut self, name: &str, passed: bool, first_failing_row: Option<usize>, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            first_failing_row: if passed { None } else { first_failing_row },
            detail: detail.into(),
        });
    }

    /// Adds a check that `pred` holds on every row, recording the first row where it fails.
    pub fn check_rows<F: Fn(&[Cell]) -> bool>(&mut self, name: &str, detail: &str, pred: F) {
        let failing = self.rows.iter().position(|r| !pred(r));
        self.check(name, failing.is_none(), failing, detail);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv_field))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                Value::Object(obj)
            })
            .collect();
        let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.clone(), v.json())).collect();
        let provenance: Map<String, Value> = self.provenance.iter().cloned().collect();
        json!({
            "experiment": self.experiment,
            "columns": self.columns,
            "rows": rows,
            "summary": summary,
            "checks": self.checks,
            "passed": self.passed(),
            "provenance": provenance,
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json())?;
        writeln!(out)?;
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        self.write_csv(fs::File::create(&csv_path)?)?;
        self.write_json(fs::File::create(&json_path)?)?;
        Ok((csv_path, json_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SweepReport {
        let mut r = SweepReport::new("demo", &["n", "value", "ok", "note"]);
        r.push_row(vec![3usize.into(), 0.1.into(), true.into(), "a,b".into()])
            .unwrap();
        r.push_row(vec![4usize.into(), (1.0 / 3.0).into(), false.into(), Cell::Missing])
            .unwrap();
        r.set_summary("slope", 1.25);
        r.set_provenance("levels", [5, 6]).unwrap();
        r
    }

    #[test]
    fn csv_has_header_quoting_and_full_precision() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split("\r\n").collect();
        assert_eq!(lines[0], "n,value,ok,note");
        assert_eq!(lines[1], "3,1.0000000000000001e-1,true,\"a,b\"");
        let third: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(third, 1.0 / 3.0);
        assert!(lines[2].ends_with(','));
    }

    #[test]
    fn json_records_follow_schema_order() {
        let v = sample().to_json();
        let first = v["rows"][0].as_object().unwrap();
        let keys: Vec<&String> = first.keys().collect();
        assert_eq!(keys, ["n", "value", "ok", "note"]);
        assert_eq!(v["rows"][1]["note"], Value::Null);
        assert_eq!(v["summary"]["slope"], json!(1.25));
        assert!(v["provenance"]["version"].as_str().unwrap().starts_with("torsion-core"));
    }

    #[test]
    fn checks_record_first_failing_row() {
        let mut r = sample();
        r.check_rows("all ok", "ok column true", |row| row[2] == Cell::Bool(true));
        assert!(!r.passed());
        assert_eq!(r.first_failure().unwrap().first_failing_row, Some(1));
        assert!(r.push_row(vec![1usize.into()]).is_err());
        assert_eq!(r.column("value").unwrap()[1], Some(1.0 / 3.0));
    }

    #[test]
    fn output_is_byte_identical_across_writes() {
        let dir = tempfile::tempdir().unwrap();
        let (c1, j1) = sample().save(dir.path(), "a").unwrap();
        let (c2, j2) = sample().save(dir.path(), "b").unwrap();
        assert_eq!(fs::read(c1).unwrap(), fs::read(c2).unwrap());
        assert_eq!(fs::read(j1).unwrap(), fs::read(j2).unwrap());
    }
}
