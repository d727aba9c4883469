//! CSV-backed tables and exact selectivity by full scan.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sql::{FilterPredicate, Literal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Int,
    Float,
    Text,
}

/// Cell values after type inference; empty CSV cells become `Null` and never
/// satisfy a predicate.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableData {
    pub name: String,
    pub columns: Vec<String>,
    pub types: Vec<ColumnType>,
    /// Row-major cells.
    pub rows: Vec<Vec<Value>>,
}

fn infer_type<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> ColumnType {
    let present = cells.filter(|c| !c.is_empty());
    if present.clone().all(|c| c.parse::<i64>().is_ok()) {
        ColumnType::Int
    } else if present.clone().all(|c| c.parse::<f64>().is_ok()) {
        ColumnType::Float
    } else {
        ColumnType::Text
    }
}

fn typed(cell: &str, ty: ColumnType) -> Value {
    if cell.is_empty() {
        return Value::Null;
    }
    match ty {
        ColumnType::Int => cell.parse().map(Value::Int).unwrap_or(Value::Null),
        ColumnType::Float => cell.parse().map(Value::Float).unwrap_or(Value::Null),
        ColumnType::Text => Value::Text(cell.to_string()),
    }
}

impl TableData {
    /// Builds a table from a header and string rows, inferring column types
    /// (all-integer, else all-numeric, else text).
    pub fn from_strings(name: impl Into<String>, columns: Vec<String>, raw: Vec<Vec<String>>) -> Result<Self> {
        let name = name.into();
        if let Some(bad) = raw.iter().position(|r| r.len() != columns.len()) {
            return Err(Error::Ingest(format!(
                "table `{name}` row {} has {} cells, header has {}",
                bad + 1,
                raw[bad].len(),
                columns.len()
            )));
        }
        let types: Vec<ColumnType> = (0..columns.len())
            .map(|c| infer_type(raw.iter().map(move |r| r[c].as_str())))
            .collect();
        let rows = raw
            .iter()
            .map(|r| r.iter().zip(&types).map(|(cell, &ty)| typed(cell, ty)).collect())
            .collect();
        Ok(Self { name, columns, types, rows })
    }

    pub fn from_csv_path(name: impl Into<String>, path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let columns = reader
            .headers()
            .map_err(|e| csv_error(path, e))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut raw = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            raw.push(record.iter().map(|c| c.trim().to_string()).collect());
        }
        Self::from_strings(name, columns, raw)
    }

    pub fn column_index(&self, column: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == column)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Ingest(format!("{}: {other:?}", path.display())),
    }
}

/// A predicate bound to a column index, with its constant coerced to the column type.
struct Bound<'a> {
    column: usize,
    pred: &'a FilterPredicate,
    numeric: Option<f64>,
}

fn bind<'a>(table: &TableData, pred: &'a FilterPredicate) -> Result<Bound<'a>> {
    let column = table.column_index(&pred.column).ok_or_else(|| {
        Error::Ingest(format!("table `{}` has no column `{}`", table.name, pred.column))
    })?;
    let ty = table.types[column];
    let numeric = match (&pred.constant, ty) {
        (Literal::Int(v), ColumnType::Int | ColumnType::Float) => Some(*v as f64),
        (Literal::Float(v), ColumnType::Int | ColumnType::Float) => Some(*v),
        (Literal::Text(_), ColumnType::Text) => None,
        (constant, ty) => {
            return Err(Error::Ingest(format!(
                "predicate `{pred}` compares {ty:?} column with constant {constant}"
            )))
        }
    };
    Ok(Bound { column, pred, numeric })
}

impl Bound<'_> {
    fn matches(&self, row: &[Value]) -> bool {
        let ord = match (&row[self.column], self.numeric, &self.pred.constant) {
            (Value::Null, ..) => return false,
            (Value::Int(v), _, Literal::Int(c)) => v.cmp(c),
            (Value::Int(v), Some(c), _) => (*v as f64).partial_cmp(&c).unwrap_or(Ordering::Less),
            (Value::Float(v), Some(c), _) => v.partial_cmp(&c).unwrap_or(Ordering::Less),
            (Value::Text(v), _, Literal::Text(c)) => v.as_bytes().cmp(c.as_bytes()),
            _ => return false,
        };
        self.pred.op.holds(ord)
    }
}

/// Fraction of `table`'s rows satisfying every predicate. No predicates gives
/// 1; an empty table is defined as 1 and logged.
pub fn compute_selectivity(table: &TableData, predicates: &[&FilterPredicate]) -> Result<f64> {
    let bound = predicates
        .iter()
        .map(|p| bind(table, p))
        .collect::<Result<Vec<_>>>()?;
    if table.is_empty() {
        log::warn!("table `{}` is empty; selectivity defined as 1", table.name);
        return Ok(1.0);
    }
    if bound.is_empty() {
        return Ok(1.0);
    }
    let hits = table
        .rows
        .iter()
        .filter(|row| bound.iter().all(|b| b.matches(row)))
        .count();
    Ok(hits as f64 / table.len() as f64)
}
