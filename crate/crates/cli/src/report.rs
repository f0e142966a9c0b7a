//! Report files: JSON Lines and CSV with fixed float formatting.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, Result};

/// Value of the `schema` field stamped on every JSON record.
pub const SCHEMA: &str = "wmlab.report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "jsonl",
            Format::Csv => "csv",
        }
    }
}

/// 17 significant digits, `null` for non-finite values.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().expect("f64")));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            out.push('{');
            for (i, (k, x)) in m.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(x, out);
            }
            out.push('}');
        }
    }
}

/// One-line JSON with sorted keys and the float convention above.
pub fn to_json_line(v: &Value) -> String {
    let mut s = String::new();
    write_value(v, &mut s);
    s
}

fn to_value<T: Serialize>(r: &T, path: &Path) -> Result<Value> {
    serde_json::to_value(r).map_err(|e| CliError::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// Nested objects become dotted keys; arrays are stored as JSON text.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Array(_) => out.push((prefix.to_string(), to_json_line(v))),
        _ => out.push((prefix.to_string(), to_json_line(v))),
    }
}

/// Append `records` to `path`. JSON: one object per line, each carrying
/// `schema`. CSV: a header is written when the file is new or empty;
/// otherwise the existing header must cover every column.
pub fn emit_report<T: Serialize>(records: &[T], format: Format, path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(CliError::Empty(path.display().to_string()));
    }
    let values: Vec<Value> = records.iter().map(|r| to_value(r, path)).collect::<Result<_>>()?;
    let existing = std::fs::metadata(path).map(|m| m.len()).unwrap_or(0);
    let mut body = String::new();
    match format {
        Format::Json => {
            for mut v in values {
                if let Value::Object(m) = &mut v {
                    m.insert("schema".into(), Value::String(SCHEMA.into()));
                } else {
                    v = serde_json::json!({ "schema": SCHEMA, "value": v });
                }
                body.push_str(&to_json_line(&v));
                body.push('\n');
            }
        }
        Format::Csv => {
            let rows: Vec<Vec<(String, String)>> = values
                .iter()
                .map(|v| {
                    let mut r = Vec::new();
                    flatten("", v, &mut r);
                    r
                })
                .collect();
            let header: Vec<String> = if existing > 0 {
                let mut rd = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
                let h = rd.headers().map_err(|e| csv_err(path, e))?;
                h.iter().map(str::to_string).collect()
            } else {
                let mut h: Vec<String> = Vec::new();
                for r in &rows {
                    for (k, _) in r {
                        if !h.contains(k) {
                            h.push(k.clone());
                        }
                    }
                }
                h
            };
            let mut wr = csv::WriterBuilder::new().from_writer(Vec::new());
            if existing == 0 {
                wr.write_record(&header).map_err(|e| csv_err(path, e))?;
            }
            for r in &rows {
                if let Some((k, _)) = r.iter().find(|(k, v)| !v.is_empty() && !header.contains(k)) {
                    return Err(CliError::Format {
                        path: path.display().to_string(),
                        msg: format!("column `{k}` missing from the existing header"),
                    });
                }
                let line: Vec<&str> = header
                    .iter()
                    .map(|h| r.iter().find(|(k, _)| k == h).map(|(_, v)| v.as_str()).unwrap_or(""))
                    .collect();
                wr.write_record(&line).map_err(|e| csv_err(path, e))?;
            }
            let bytes = wr.into_inner().map_err(|e| CliError::Format {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
            body = String::from_utf8(bytes).expect("csv writes utf-8");
        }
    }
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::io(path, e))?;
    f.write_all(body.as_bytes()).map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}
