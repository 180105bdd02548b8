//! Result serialization. CSV floats carry 17 significant digits; JSON floats
//! use the shortest representation that parses back to the same value.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::Format;

/// Bumped whenever a column set or JSON field set changes.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Missing,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Float)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
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

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn escape(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Trailing `#` lines.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Leading `#` line names the result kind and format version.
    pub fn to_csv(&self, kind: &str) -> String {
        let mut out = format!("# cca {kind} v{FORMAT_VERSION}\n");
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(v) => v.to_string(),
                    Cell::Float(v) => format_float(*v),
                    Cell::Text(t) => escape(t),
                    Cell::Missing => String::new(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        for note in &self.notes {
            let _ = writeln!(out, "# {note}");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub kind: String,
    pub version: u32,
    pub result: T,
}

pub trait Report: Serialize {
    const KIND: &'static str;
    fn table(&self) -> Table;
}

pub fn render<R: Report>(report: &R, format: Format) -> Result<String, serde_json::Error> {
    match format {
        Format::Csv => Ok(report.table().to_csv(R::KIND)),
        Format::Json => {
            let env = Envelope {
                kind: R::KIND.to_string(),
                version: FORMAT_VERSION,
                result: report,
            };
            let mut text = serde_json::to_string_pretty(&env)?;
            text.push('\n');
            Ok(text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_csv() {
        for x in [0.1, 1.0 / 3.0, -2.0f64.sqrt() * 1e-17, 5.625e-8, f64::MIN_POSITIVE, 0.0] {
            let text = format_float(x);
            assert_eq!(text.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{text}");
        }
    }

    #[test]
    fn csv_escapes_text() {
        let mut t = Table::new(vec!["a", "b", "c"]);
        t.push(vec![Cell::from(1usize), Cell::from("x,\"y\""), Cell::Missing]);
        assert_eq!(t.to_csv("demo"), "# cca demo v1\na,b,c\n1,\"x,\"\"y\"\"\",\n");
    }
}
