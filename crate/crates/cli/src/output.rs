//! Row tables written as CSV or JSON with fixed numeric formatting.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_sig(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            Cell::Num(v) if v.is_finite() => {
                let rounded: f64 = format_sig(*v).parse().unwrap_or(*v);
                serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
            }
            Cell::Num(v) => Value::String(format_sig(*v)),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

/// 12 significant digits, trailing zeros dropped, like printf's %.12g.
pub fn format_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::io(e.to_string());
                w.write_record(&self.header).map_err(io)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::render)).map_err(io)?;
                }
                w.into_inner().map_err(|e| CliError::io(e.to_string()))
            }
            Format::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj = self
                            .header
                            .iter()
                            .zip(row)
                            .map(|(k, c)| (k.to_string(), c.json()))
                            .collect::<serde_json::Map<_, _>>();
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                let mut out =
                    serde_json::to_vec_pretty(&rows).map_err(|e| CliError::io(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }

    /// Writes to the path, or stdout when none is given.
    pub fn write(&self, format: Format, out: Option<&Path>) -> Result<(), CliError> {
        let bytes = self.to_bytes(format)?;
        match out {
            Some(p) => {
                std::fs::write(p, bytes).map_err(|e| CliError::io(format!("{}: {e}", p.display())))
            }
            None => std::io::stdout()
                .lock()
                .write_all(&bytes)
                .map_err(|e| CliError::io(e.to_string())),
        }
    }
}
