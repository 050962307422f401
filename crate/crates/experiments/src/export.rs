//! CSV and JSON output.
//!
//! Floats are written with 9 significant digits in C `%.9g` style; JSON
//! numbers carry the same rounded values.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{Map, Number, Value as Json};
use thiserror::Error;

use crate::sweep::ResultRow;

pub const RESULT_HEADER: [&str; 9] = [
    "n",
    "alpha",
    "P",
    "facility_index",
    "improvement_factor",
    "rho",
    "engine",
    "status",
    "runtime_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("write failed")]
    Write(#[from] io::Error),
    #[error("csv output failed")]
    Csv(#[from] csv::Error),
    #[error("json output failed")]
    Json(#[from] serde_json::Error),
    #[error("row has {got} fields, header has {expected}")]
    Width { expected: usize, got: usize },
}

/// A single table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_g9(*x),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Json {
        match self {
            Cell::Empty => Json::Null,
            Cell::Int(i) => Json::from(*i),
            Cell::Float(x) => format_g9(*x)
                .parse::<f64>()
                .ok()
                .and_then(Number::from_f64)
                .map_or_else(|| Json::String(format_g9(*x)), Json::Number),
            Cell::Text(s) => Json::String(s.clone()),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
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
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ExportError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            self.check_width(row)?;
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<(), ExportError> {
        let mut items = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            self.check_width(row)?;
            let obj: Map<String, Json> = self
                .header
                .iter()
                .cloned()
                .zip(row.iter().map(Cell::to_json))
                .collect();
            items.push(Json::Object(obj));
        }
        serde_json::to_writer_pretty(&mut out, &items)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> Result<(), ExportError> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    /// Writes to `path`, creating or truncating it.
    pub fn export(&self, format: Format, path: &Path) -> Result<(), ExportError> {
        let io_err = |source| ExportError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        self.write(format, &mut w)?;
        w.flush().map_err(io_err)
    }

    fn check_width(&self, row: &[Cell]) -> Result<(), ExportError> {
        if row.len() == self.header.len() {
            Ok(())
        } else {
            Err(ExportError::Width {
                expected: self.header.len(),
                got: row.len(),
            })
        }
    }
}

pub fn results_table(rows: &[ResultRow]) -> Table {
    let mut t = Table::new(RESULT_HEADER);
    for r in rows {
        t.push(vec![
            r.n.into(),
            r.alpha.into(),
            r.precision.into(),
            r.facility_index.into(),
            r.improvement_factor.into(),
            r.rho.into(),
            r.engine.as_str().into(),
            r.status.as_str().into(),
            r.runtime_ms.into(),
        ]);
    }
    t
}

/// C-style `%.9g`.
pub fn format_g9(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // Rounding to 9 digits first settles the decimal exponent.
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
