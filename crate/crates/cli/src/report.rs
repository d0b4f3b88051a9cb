//! Report assembly and output: JSON with the full row set, or CSV with one
//! line per row. Dyadic values always appear in both fraction and binary
//! form so reports diff cleanly.

use std::fs;
use std::path::PathBuf;

use num_bigint::BigUint;
use serde_json::{Map, Value};

use omegalab::dyadic::Dyadic;

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub type Row = Map<String, Value>;

pub struct Report {
    pub command: &'static str,
    pub name: String,
    pub meta: Row,
    pub rows: Vec<Row>,
    pub violations: usize,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut top = Map::new();
        top.insert("command".into(), self.command.into());
        top.insert("name".into(), self.name.clone().into());
        for (k, v) in &self.meta {
            top.insert(k.clone(), v.clone());
        }
        top.insert("cases".into(), self.rows.len().into());
        top.insert("violations".into(), self.violations.into());
        top.insert("rows".into(), Value::Array(self.rows.iter().cloned().map(Value::Object).collect()));
        serde_json::to_string_pretty(&Value::Object(top)).expect("report serializes")
    }

    /// Header from the first row; every suite emits a fixed row shape.
    pub fn to_csv(&self) -> String {
        let Some(first) = self.rows.first() else {
            return String::new();
        };
        let keys: Vec<&String> = first.keys().collect();
        let mut out = keys.iter().map(|k| csv_field(k)).collect::<Vec<_>>().join(",");
        out.push('\n');
        for row in &self.rows {
            let line = keys
                .iter()
                .map(|&k| row.get(k).map(csv_value).unwrap_or_default())
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, out: &Option<PathBuf>, format: Format) -> Result<(), String> {
        let body = match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        };
        emit(out, &body)
    }
}

pub fn emit(out: &Option<PathBuf>, body: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| format!("writing {}: {e}", path.display())),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            let written =
                stdout.write_all(body.as_bytes()).and_then(|_| stdout.write_all(b"\n"));
            match written {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(format!("writing stdout: {e}"))
                }
                _ => Ok(()),
            }
        }
    }
}

fn csv_value(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => csv_field(s),
        other => csv_field(&other.to_string()),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn row(pairs: Vec<(&str, Value)>) -> Row {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Inserts `<key>_fraction` and `<key>_binary` for one dyadic.
pub fn dyadic_fields(target: &mut Row, key: &str, d: &Dyadic) {
    target.insert(format!("{key}_fraction"), d.to_fraction_string().into());
    target.insert(format!("{key}_binary"), d.to_binary_string().into());
}

/// Inclusive "a..b"; a single "a" means a..a.
pub fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let parse = |p: &str| {
        p.trim().parse::<u64>().map_err(|_| format!("bad range bound '{p}' in '{s}'"))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range '{s}'"));
    }
    Ok((lo, hi))
}

/// Left-padded binary rendering of an oracle prefix.
pub fn bit_string(value: &BigUint, len: u64) -> String {
    let len = len as usize;
    if len == 0 {
        return String::new();
    }
    let digits =
        if value == &BigUint::ZERO { String::new() } else { value.to_str_radix(2) };
    assert!(digits.len() <= len, "prefix wider than its length");
    format!("{}{digits}", "0".repeat(len - digits.len()))
}
