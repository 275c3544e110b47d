//! Deterministic report serialization.
//!
//! JSON objects have sorted keys, floats are printed with 17 significant
//! digits, and non-finite numbers are rejected.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::CliError;

/// `{:.16e}`, i.e. 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
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

fn find_null(v: &Value, path: &mut Vec<String>) -> bool {
    match v {
        Value::Null => true,
        Value::Array(items) => items.iter().enumerate().any(|(i, x)| {
            path.push(i.to_string());
            let hit = find_null(x, path);
            if !hit {
                path.pop();
            }
            hit
        }),
        Value::Object(map) => map.iter().any(|(k, x)| {
            path.push(k.clone());
            let hit = find_null(x, path);
            if !hit {
                path.pop();
            }
            hit
        }),
        _ => false,
    }
}

/// Reports never contain `null`, so a null can only come from a NaN or infinity.
pub fn to_json<T: Serialize>(report: &T) -> Result<String, CliError> {
    let value = serde_json::to_value(report).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut path = Vec::new();
    if find_null(&value, &mut path) {
        return Err(CliError::Numerical(format!(
            "non-finite value in report at `{}`",
            path.join(".")
        )));
    }
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat(PrettyFormatter::with_indent(b"  ")));
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Columns holding counts, written without an exponent.
const COUNT_COLUMNS: [&str; 4] = ["index", "n_plus", "n_minus", "n_zero"];

/// CSV with a mandatory header row.
pub fn to_csv(header: &[String], rows: &[Vec<f64>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::config(e.to_string()))?;
    for row in rows {
        if let Some(bad) = row.iter().position(|v| !v.is_finite()) {
            return Err(CliError::Numerical(format!("non-finite value in column `{}`", header[bad])));
        }
        w.write_record(row.iter().zip(header).map(|(v, h)| {
            if COUNT_COLUMNS.contains(&h.as_str()) {
                format!("{}", *v as u64)
            } else {
                format_f64(*v)
            }
        }))
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of ASCII numbers"))
}

/// Writes to `out`, or stdout when `None`.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
