//! Report emission: JSON lines plus CSV tables.
//!
//! Floats are printed as `{:.16e}` (17 significant digits, exact round
//! trip); non-finite values become `null`.

use std::fs;
use std::io;
use std::path::Path;

/// Formats a float for the report files.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    Nums(Vec<f64>),
    Null,
}

impl Value {
    fn write_json(&self, out: &mut String) {
        match self {
            Value::Num(v) => out.push_str(&fmt_f64(*v)),
            Value::Int(v) => out.push_str(&v.to_string()),
            Value::Bool(v) => out.push_str(if *v { "true" } else { "false" }),
            Value::Str(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
            Value::Nums(vs) => {
                out.push('[');
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&fmt_f64(*v));
                }
                out.push(']');
            }
            Value::Null => out.push_str("null"),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Null, Into::into)
    }
}

/// One JSON line with keys in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record {
    pub fields: Vec<(String, Value)>,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        Record { fields: vec![("record".into(), kind.into())] }
    }

    pub fn with(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.fields.push((key.to_string(), v.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{");
        for (i, (k, v)) in self.fields.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&serde_json::to_string(k).expect("key serializes"));
            out.push(':');
            v.write_json(&mut out);
        }
        out.push('}');
        out
    }
}

/// A CSV table written to `tables/<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        self.rows.push(row);
    }

    fn cell(v: &Value) -> String {
        match v {
            Value::Num(x) => {
                if x.is_finite() {
                    fmt_f64(*x)
                } else {
                    String::new()
                }
            }
            Value::Int(x) => x.to_string(),
            Value::Bool(x) => x.to_string(),
            Value::Str(s) => s.clone(),
            Value::Nums(xs) => xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" "),
            Value::Null => String::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", self.name)))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Self::cell))?;
        }
        w.flush()
    }
}

/// Everything one command produced. Each record is stamped with the config
/// hash and seed when written.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config_hash: String,
    pub seed: u64,
    pub records: Vec<Record>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Report { config_hash, seed, records: Vec::new(), tables: Vec::new() }
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let mut stamped = r.clone();
            stamped.fields.insert(1, ("config_hash".into(), Value::Str(self.config_hash.clone())));
            stamped.fields.insert(2, ("seed".into(), Value::Int(self.seed as i64)));
            out.push_str(&stamped.to_json());
            out.push('\n');
        }
        out
    }

    pub fn write(&self, out_dir: &Path) -> io::Result<()> {
        fs::create_dir_all(out_dir)?;
        fs::write(out_dir.join("report.jsonl"), self.jsonl())?;
        if !self.tables.is_empty() {
            let tables = out_dir.join("tables");
            fs::create_dir_all(&tables)?;
            for t in &self.tables {
                t.write(&tables)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let j: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(j, v);
        }
        assert_eq!(fmt_f64(f64::NAN), "null");
        assert_eq!(fmt_f64(f64::INFINITY), "null");
    }

    #[test]
    fn records_are_valid_json_lines() {
        let mut rep = Report::new("abc".into(), 42);
        rep.push(Record::new("x").with("v", 1.5).with("bad", f64::NAN).with("name", "a\"b").with("ok", true));
        let line = rep.jsonl();
        let parsed: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(parsed["config_hash"], "abc");
        assert_eq!(parsed["seed"], 42);
        assert_eq!(parsed["v"], 1.5);
        assert!(parsed["bad"].is_null());
        assert_eq!(parsed["name"], "a\"b");
    }
}
