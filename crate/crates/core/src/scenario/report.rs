//! Tabular results with a fixed column order per experiment kind.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One CSV/JSON cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt(x: Option<f64>) -> Cell {
        x.map_or(Cell::Empty, Cell::Num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(i64::from(x))
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

// Non-finite numbers have no JSON literal; they travel as tagged strings.
const NON_FINITE: [(&str, f64); 2] = [("inf", f64::INFINITY), ("-inf", f64::NEG_INFINITY)];

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Num(x) if x.is_finite() => s.serialize_f64(*x),
            Cell::Num(x) if x.is_nan() => s.serialize_str("nan"),
            Cell::Num(x) => s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" }),
            Cell::Bool(b) => s.serialize_bool(*b),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Empty => s.serialize_none(),
        }
    }
}

struct CellVisitor;

impl<'de> Visitor<'de> for CellVisitor {
    type Value = Cell;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("a number, boolean, string or null")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Cell, E> {
        Ok(Cell::Int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Cell, E> {
        i64::try_from(v).map(Cell::Int).map_err(E::custom)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Cell, E> {
        Ok(Cell::Num(v))
    }

    fn visit_bool<E: de::Error>(self, v: bool) -> std::result::Result<Cell, E> {
        Ok(Cell::Bool(v))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Cell, E> {
        if v == "nan" {
            return Ok(Cell::Num(f64::NAN));
        }
        Ok(NON_FINITE
            .iter()
            .find(|(tag, _)| *tag == v)
            .map_or_else(|| Cell::Text(v.to_string()), |&(_, x)| Cell::Num(x)))
    }

    fn visit_unit<E: de::Error>(self) -> std::result::Result<Cell, E> {
        Ok(Cell::Empty)
    }

    fn visit_none<E: de::Error>(self) -> std::result::Result<Cell, E> {
        Ok(Cell::Empty)
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Cell, D::Error> {
        d.deserialize_any(CellVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: String,
    pub columns: Vec<String>,
    pub units: BTreeMap<String, String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: serde_json::Value,
    pub diagnostics: Vec<String>,
}

impl Report {
    pub fn new(kind: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            kind: kind.to_string(),
            columns: columns.iter().map(|c| c.0.to_string()).collect(),
            units: columns
                .iter()
                .map(|&(c, u)| (c.to_string(), u.to_string()))
                .collect(),
            rows: Vec::new(),
            summary: serde_json::Value::Null,
            diagnostics: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        if self.rows.is_empty() {
            return Err(Error::invalid("no results to report"));
        }
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        if self.rows.is_empty() {
            return Err(Error::invalid("no results to report"));
        }
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("demo", &[("x", "length"), ("y", "energy"), ("ok", "flag")]);
        r.push(vec![Cell::Int(3), Cell::Num(0.1 + 0.2), Cell::Bool(true)]);
        r.push(vec![Cell::Int(-1), Cell::Num(f64::INFINITY), Cell::Empty]);
        r.push(vec![Cell::Int(0), Cell::Num(1e300), Cell::Text("note".into())]);
        r
    }

    #[test]
    fn csv_uses_seventeen_digits() {
        let csv = sample().to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y,ok"));
        assert_eq!(lines.next(), Some("3,3.0000000000000004e-1,true"));
        assert_eq!(lines.next(), Some("-1,inf,"));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = sample();
        assert_eq!(Report::from_json(&r.to_json().unwrap()).unwrap(), r);
    }

    #[test]
    fn empty_report_is_an_error() {
        let r = Report::new("demo", &[("x", "length")]);
        assert!(r.to_csv().is_err());
        assert!(r.to_json().is_err());
    }
}
