//! Report serialization: 17-significant-digit numbers, CSV tables and atomic file writes.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use qmetro::{QfimMatrix, RMatrix};
use serde_json::{Map, Number, Value};

use crate::CliError;

pub const REPORT_FORMAT: &str = "qmetro-report";
pub const REPORT_VERSION: u64 = 1;
pub const CSV_VERSION: u64 = 1;

/// Seventeen significant digits, enough to round-trip any double.
pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

/// JSON number with 17 significant digits; non-finite values become the strings "inf", "-inf", "nan".
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::Number(Number::from_str(&fmt17(v)).expect("formatted float is valid JSON"))
    } else {
        Value::String(fmt17(v))
    }
}

/// Reads back a number written by `num`.
pub fn parse_num(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_str().parse().ok(),
        Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

pub fn int(v: u64) -> Value {
    Value::Number(v.into())
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn matrix(m: &RMatrix) -> Value {
    Value::Array((0..m.rows()).map(|i| nums(m.row(i))).collect())
}

pub fn qfim(f: &QfimMatrix) -> Value {
    matrix(&f.matrix)
}

pub fn strings<S: AsRef<str>>(v: &[S]) -> Value {
    Value::Array(v.iter().map(|s| Value::String(s.as_ref().to_string())).collect())
}

pub fn named(pairs: &[(String, f64)]) -> Value {
    Value::Object(pairs.iter().map(|(k, v)| (k.clone(), num(*v))).collect())
}

/// Object builder that keeps insertion order.
#[derive(Default)]
pub struct Obj(Map<String, Value>);

impl Obj {
    pub fn new() -> Self {
        Obj(Map::new())
    }

    pub fn put(mut self, key: &str, v: Value) -> Self {
        self.0.insert(key.to_string(), v);
        self
    }

    pub fn put_opt(self, key: &str, v: Option<Value>) -> Self {
        self.put(key, v.unwrap_or(Value::Null))
    }

    pub fn build(self) -> Value {
        Value::Object(self.0)
    }
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report values serialize");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// CSV table: a `# qmetro-csv v<N> ...` line, a header row, then data rows.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(tag: &str, header: &[String]) -> Self {
        let mut text = format!("# qmetro-csv v{CSV_VERSION} {tag}\n");
        text.push_str(&header.join(","));
        text.push('\n');
        Csv {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, numbers: &[f64], trailing: &[&str]) {
        assert_eq!(numbers.len() + trailing.len(), self.columns, "CSV row width");
        let mut cells: Vec<String> = numbers.iter().map(|&v| fmt17(v)).collect();
        cells.extend(trailing.iter().map(|s| s.to_string()));
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
