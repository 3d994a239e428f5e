//! Tabular reports: one header row of column names, numeric cells, CSV or JSON.
//!
//! CSV cells carry 17 significant digits; missing values are empty cells. JSON is an
//! array of row objects keyed by column name, with `null` for missing values.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug)]
pub enum ReportError {
    Csv(csv::Error),
    Json(serde_json::Error),
    Io(std::io::Error),
    Shape(String),
}

impl fmt::Display for ReportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportError::Csv(e) => write!(f, "csv: {e}"),
            ReportError::Json(e) => write!(f, "json: {e}"),
            ReportError::Io(e) => write!(f, "io: {e}"),
            ReportError::Shape(msg) => write!(f, "malformed report: {msg}"),
        }
    }
}

impl std::error::Error for ReportError {}

impl From<csv::Error> for ReportError {
    fn from(e: csv::Error) -> Self {
        ReportError::Csv(e)
    }
}

impl From<serde_json::Error> for ReportError {
    fn from(e: serde_json::Error) -> Self {
        ReportError::Json(e)
    }
}

impl From<std::io::Error> for ReportError {
    fn from(e: std::io::Error) -> Self {
        ReportError::Io(e)
    }
}

/// 17 significant digits in scientific notation; round-trips every finite `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> Result<(), ReportError> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.map(format_number).unwrap_or_default()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<(), ReportError> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(k, v)| (k.clone(), v.map_or(Value::Null, Value::from)))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        serde_json::to_writer(&mut out, &rows)?;
        writeln!(out)?;
        Ok(())
    }

    pub fn read<R: Read>(format: Format, input: R) -> Result<Self, ReportError> {
        match format {
            Format::Csv => Self::read_csv(input),
            Format::Json => Self::read_json(input),
        }
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, ReportError> {
        let mut r = csv::Reader::from_reader(input);
        let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|cell| {
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        f64::from_str(cell)
                            .map(Some)
                            .map_err(|_| ReportError::Shape(format!("not a number: {cell:?}")))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Table { columns, rows })
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self, ReportError> {
        let value: Value = serde_json::from_reader(input)?;
        let items = value
            .as_array()
            .ok_or_else(|| ReportError::Shape("expected an array of rows".into()))?;
        let mut columns: Vec<String> = Vec::new();
        if let Some(first) = items.first() {
            let obj = first
                .as_object()
                .ok_or_else(|| ReportError::Shape("rows must be objects".into()))?;
            columns = obj.keys().cloned().collect();
        }
        let mut rows = Vec::new();
        for item in items {
            let obj = item
                .as_object()
                .ok_or_else(|| ReportError::Shape("rows must be objects".into()))?;
            if obj.len() != columns.len() {
                return Err(ReportError::Shape("rows have different keys".into()));
            }
            let row = columns
                .iter()
                .map(|c| match obj.get(c) {
                    Some(Value::Null) => Ok(None),
                    Some(v) => v
                        .as_f64()
                        .map(Some)
                        .ok_or_else(|| ReportError::Shape(format!("{c} is not a number"))),
                    None => Err(ReportError::Shape(format!("missing column {c}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Table { columns, rows })
    }
}
