use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// A named check evaluated on the collected data.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// A two-column series for external plotting.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Curve {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Result of one experiment run.
///
/// Contains only data derived from the configuration and seeds, so that equal inputs give
/// byte-identical files; wall-clock time is written separately by [`write_timing`].
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: BTreeMap<String, Value>,
    pub assertions: Vec<Assertion>,
    pub notes: Vec<String>,
    pub curves: Vec<Curve>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, columns: &[&str]) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            config: BTreeMap::new(),
            seeds: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
            assertions: Vec::new(),
            notes: Vec::new(),
            curves: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.experiment);
        self.rows.push(row);
    }

    pub fn summarize(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.to_string(), v.into());
    }

    pub fn assert(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion { name: name.to_string(), passed, detail: detail.into() });
    }

    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    /// Index of a named column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a numeric column; non-numbers become NaN.
    pub fn column_f64(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.column(name) else { return Vec::new() };
        self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn write_dat(curve: &Curve, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "# {}", curve.name)?;
        for (x, y) in &curve.points {
            writeln!(w, "{x} {y}")?;
        }
        Ok(())
    }

    /// Writes `<name>.json`, `<name>.csv` and one `<name>_<curve>.dat` per curve into `dir`.
    pub fn write_all(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join(format!("{}.json", self.experiment));
        fs::write(&json, self.to_json())?;
        written.push(json);
        let csv = dir.join(format!("{}.csv", self.experiment));
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        fs::write(&csv, buf)?;
        written.push(csv);
        for c in &self.curves {
            let p = dir.join(format!("{}_{}.dat", self.experiment, c.name));
            let mut buf = Vec::new();
            Self::write_dat(c, &mut buf)?;
            fs::write(&p, buf)?;
            written.push(p);
        }
        Ok(written)
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes wall-clock seconds to `<name>.timing`, kept apart from the reproducible report.
pub fn write_timing(dir: &Path, experiment: &str, seconds: f64) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let p = dir.join(format!("{experiment}.timing"));
    fs::write(&p, format!("wall_clock_seconds = {seconds:.3}\n"))?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_and_json() {
        let mut r = ExperimentReport::new("demo", &["n", "label", "value"]);
        r.push_row(vec![json!(1), json!("a,b"), json!(0.5)]);
        r.push_row(vec![json!(2), json!("c"), Value::Null]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,label,value\n1,\"a,b\",0.5\n2,c,\n");
        r.assert("ok", true, "");
        assert!(r.all_passed());
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["rows"][0][2], json!(0.5));
        assert_eq!(r.column_f64("value")[0], 0.5);
        assert!(r.column_f64("value")[1].is_nan());
    }

    #[test]
    fn files_land_in_dir() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = ExperimentReport::new("demo", &["x"]);
        r.curves.push(Curve { name: "c".into(), points: vec![(1.0, 2.0)] });
        let files = r.write_all(dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        assert_eq!(fs::read_to_string(dir.path().join("demo_c.dat")).unwrap(), "# c\n1 2\n");
    }
}
