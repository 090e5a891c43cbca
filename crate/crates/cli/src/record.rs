//! Result records and their JSON / CSV serialization.

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;
use std::io::{self, Write};

/// Version of the JSON layout written by every command.
pub const SCHEMA_VERSION: u32 = 1;

/// Top-level output of one command.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub command: String,
    /// Fully resolved configuration, defaults included.
    pub config: Value,
    pub results: Value,
    pub diagnostics: Value,
    pub version: Version,
}

#[derive(Debug, Clone, Serialize)]
pub struct Version {
    pub library: &'static str,
    pub schema: u32,
}

impl Version {
    pub fn current() -> Self {
        Self { library: env!("CARGO_PKG_VERSION"), schema: SCHEMA_VERSION }
    }
}

impl Record {
    pub fn new(command: &str, config: Value, results: Value, diagnostics: Value) -> Self {
        Self { command: command.to_string(), config, results, diagnostics, version: Version::current() }
    }
}

/// Pretty JSON in which every float is written with 17 significant digits.
struct SeventeenDigits<'a>(PrettyFormatter<'a>);

impl Formatter for SeventeenDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with 17 significant digits per float. Non-finite
/// floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits(PrettyFormatter::new()));
    // Going through Value first maps NaN and infinities to null.
    serde_json::to_value(value)?.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// A flat table for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }

    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// A float cell with 17 significant digits.
pub fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Key/value table of every scalar leaf of `value`, keyed by its JSON path.
pub fn flatten(value: &Value) -> Table {
    fn walk(prefix: &str, v: &Value, t: &mut Table) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&p, x, t);
                }
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), x, t);
                }
            }
            Value::Number(n) => {
                let s = match (n.as_i64(), n.as_u64(), n.as_f64()) {
                    (Some(i), _, _) => i.to_string(),
                    (_, Some(u), _) => u.to_string(),
                    (_, _, Some(f)) => cell(f),
                    _ => n.to_string(),
                };
                t.push([prefix.to_string(), s]);
            }
            Value::String(s) => t.push([prefix.to_string(), s.clone()]),
            Value::Bool(b) => t.push([prefix.to_string(), b.to_string()]),
            Value::Null => t.push([prefix.to_string(), String::new()]),
        }
    }
    let mut t = Table::new(&["key", "value"]);
    walk("", value, &mut t);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_use_seventeen_digits_and_round_trip() {
        let v = json!({ "a": 0.1, "b": [1.0 / 3.0, -2.5e-300], "n": 3 });
        let s = to_json(&v).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64().unwrap(), 0.1);
        assert_eq!(back["b"][0].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(back["b"][1].as_f64().unwrap(), -2.5e-300);
    }

    #[test]
    fn non_finite_becomes_null() {
        let s = to_json(&vec![f64::NAN, 1.0]).unwrap();
        assert!(s.contains("null"));
    }

    #[test]
    fn flatten_paths() {
        let t = flatten(&json!({ "x": { "y": [1.5, true] } }));
        assert_eq!(t.rows[0], vec!["x.y[0]".to_string(), cell(1.5)]);
        assert_eq!(t.rows[1], vec!["x.y[1]".to_string(), "true".to_string()]);
    }
}
