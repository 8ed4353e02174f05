//! Tables rendered as CSV or JSON, and atomic file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::args::Format;
use crate::error::CliError;

/// Significant digits of every serialized number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`-style formatting; negative zero prints as `0`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    /// Empty in CSV, `null` in JSON.
    Missing,
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_number(*x),
            Cell::Missing => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Num(x) => {
                let rounded: f64 = format_number(*x).parse().unwrap_or(*x);
                serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
            }
            Cell::Missing => Value::Null,
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV preceded by `# key = value` lines of the resolved config.
    pub fn to_csv(&self, config: &[(String, String)]) -> String {
        let mut out = String::new();
        out.push_str(&format!("# ptmathieu {}\n", env!("CARGO_PKG_VERSION")));
        for (k, v) in config {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, config: &[(String, String)]) -> String {
        let mut cfg = Map::new();
        for (k, v) in config {
            cfg.insert(k.clone(), Value::from(v.as_str()));
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (col, cell) in self.columns.iter().zip(row) {
                    obj.insert((*col).to_string(), cell.json());
                }
                Value::Object(obj)
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        doc.insert("config".into(), Value::Object(cfg));
        doc.insert("columns".into(), Value::from(self.columns.to_vec()));
        doc.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json value serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format, config: &[(String, String)]) -> String {
        match format {
            Format::Csv => self.to_csv(config),
            Format::Json => self.to_json(config),
        }
    }
}

/// Flattens a serialized config into sorted `key = value` pairs, with keys
/// spelled as command-line flags.
pub fn config_pairs(value: &Value) -> Vec<(String, String)> {
    let mut pairs: Vec<(String, String)> = match value {
        Value::Object(map) => map
            .iter()
            .filter(|(_, v)| !v.is_null())
            .map(|(k, v)| {
                let v = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                (k.replace('_', "-"), v)
            })
            .collect(),
        _ => Vec::new(),
    };
    pairs.sort_by(|a, b| (a.0 != "command", &a.0).cmp(&(b.0 != "command", &b.0)));
    pairs
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Config(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_number(-0.45513860410741466), "-0.455138604107");
        assert_eq!(format_number(25.0), "25");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(123456789012.4), "123456789012");
        assert_eq!(format_number(1234567890123.0), "1.23456789012e12");
        assert_eq!(format_number(2.5e-17), "2.5e-17");
        assert_eq!(format_number(1e-5), "0.00001");
        assert_eq!(format_number(9.9999999999996), "10");
        assert_eq!(format_number(f64::NAN), "NaN");
    }

    #[test]
    fn missing_cells() {
        let mut t = Table::new(&["delta", "q"]);
        t.push(vec![Cell::Num(0.5), Cell::Missing]);
        t.push(vec![Cell::Num(1.5), Cell::from(Some(0.25))]);
        let csv = t.to_csv(&[("command".into(), "trace".into())]);
        assert!(csv.ends_with("delta,q\n0.5,\n1.5,0.25\n"));
        assert!(csv.contains("# command = trace\n"));
        let json: Value = serde_json::from_str(&t.to_json(&[])).unwrap();
        assert!(json["rows"][0]["q"].is_null());
        assert_eq!(json["rows"][1]["q"], 0.25);
    }

    #[test]
    fn config_pairs_lead_with_command() {
        let v = serde_json::json!({"tol_im": 1e-7, "command": "fit", "bc": "neumann", "input": null});
        let pairs = config_pairs(&v);
        let keys: Vec<&str> = pairs.iter().map(|p| p.0.as_str()).collect();
        assert_eq!(keys, ["command", "bc", "tol-im"]);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        let err = write_atomic(&dir.path().join("missing/out.csv"), "x").unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
