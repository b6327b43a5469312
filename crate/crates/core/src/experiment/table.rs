//! Rectangular result tables in CSV or JSON-lines form.
//!
//! Floats are written with 17 significant digits, so every value survives a
//! write/parse round trip exactly. Lines end in LF.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::error::{EwsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Csv,
    Jsonl,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for TableFormat {
    type Err = EwsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "jsonl" | "json-lines" => Ok(TableFormat::Jsonl),
            other => Err(EwsError::Config(format!("unknown table format `{other}` (csv, jsonl)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) if v.is_finite() => write!(f, "{v:.16e}"),
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl Cell {
    fn parse(s: &str) -> Cell {
        if let Ok(i) = s.parse::<i64>() {
            return Cell::Int(i);
        }
        match s.parse::<f64>() {
            Ok(v) => Cell::Num(v),
            Err(_) => Cell::Text(s.to_string()),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) => Number::from_f64(*v).map(Value::Number).unwrap_or(Value::Null),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }

    fn from_json(v: &Value) -> Result<Cell> {
        Ok(match v {
            Value::Null => Cell::Num(f64::NAN),
            Value::Number(n) if n.is_i64() => Cell::Int(n.as_i64().expect("checked")),
            Value::Number(n) => Cell::Num(n.as_f64().unwrap_or(f64::NAN)),
            Value::String(s) => Cell::Text(s.clone()),
            other => return Err(EwsError::Config(format!("unsupported table cell {other}"))),
        })
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(i) => Some(*i as f64),
            Cell::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(EwsError::DimensionMismatch {
                expected: self.columns.len(),
                actual: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

fn csv_err(e: csv::Error) -> EwsError {
    EwsError::Io(e.to_string())
}

/// Renders a table as text.
pub fn render_table(table: &Table, format: TableFormat) -> Result<String> {
    if let Some(r) = table.rows.iter().find(|r| r.len() != table.columns.len()) {
        return Err(EwsError::DimensionMismatch {
            expected: table.columns.len(),
            actual: r.len(),
        });
    }
    match format {
        TableFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(&table.columns).map_err(csv_err)?;
            for row in &table.rows {
                w.write_record(row.iter().map(|c| c.to_string())).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| EwsError::Io(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| EwsError::Io(e.to_string()))
        }
        TableFormat::Jsonl => {
            let mut out = String::new();
            for row in &table.rows {
                let obj: Map<String, Value> = table
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(Cell::to_json))
                    .collect();
                out.push_str(&serde_json::to_string(&Value::Object(obj)).map_err(|e| EwsError::Io(e.to_string()))?);
                out.push('\n');
            }
            Ok(out)
        }
    }
}

/// Parses text produced by [`render_table`]. A JSON-lines table without rows
/// has no column names.
pub fn parse_table(text: &str, format: TableFormat) -> Result<Table> {
    match format {
        TableFormat::Csv => {
            let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
            let columns: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
            let mut table = Table::new(columns);
            for rec in r.records() {
                let rec = rec.map_err(csv_err)?;
                table.push(rec.iter().map(Cell::parse).collect())?;
            }
            Ok(table)
        }
        TableFormat::Jsonl => {
            let mut table = Table::default();
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let v: Map<String, Value> =
                    serde_json::from_str(line).map_err(|e| EwsError::Config(format!("line {}: {e}", i + 1)))?;
                if table.columns.is_empty() {
                    table.columns = v.keys().cloned().collect();
                }
                let row = table
                    .columns
                    .iter()
                    .map(|c| {
                        v.get(c)
                            .ok_or_else(|| EwsError::Config(format!("line {}: missing column `{c}`", i + 1)))
                            .and_then(Cell::from_json)
                    })
                    .collect::<Result<Vec<_>>>()?;
                table.push(row)?;
            }
            Ok(table)
        }
    }
}

/// Writes `table` to `path`.
pub fn write_table(table: &Table, format: TableFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_table(table, format)?)?;
    Ok(())
}

pub fn read_table(path: &Path, format: TableFormat) -> Result<Table> {
    parse_table(&std::fs::read_to_string(path)?, format)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sweep_like(rows: &[(f64, Vec<(f64, f64)>)], probes: usize) -> Table {
        let mut columns = vec!["swept_value".to_string()];
        for j in 0..probes {
            columns.push(format!("e_{j}_mean_log10"));
            columns.push(format!("e_{j}_std_log10"));
        }
        let mut t = Table::new(columns);
        for (x, cells) in rows {
            let mut row = vec![Cell::Num(*x)];
            for (m, s) in cells {
                row.push(Cell::Num(*m));
                row.push(Cell::Num(*s));
            }
            t.push(row).unwrap();
        }
        t
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = sweep_like(&[], 2);
        let s = render_table(&t, TableFormat::Csv).unwrap();
        assert_eq!(
            s,
            "swept_value,e_0_mean_log10,e_0_std_log10,e_1_mean_log10,e_1_std_log10\n"
        );
        assert_eq!(parse_table(&s, TableFormat::Csv).unwrap(), t);
        assert_eq!(render_table(&t, TableFormat::Jsonl).unwrap(), "");
    }

    #[test]
    fn one_row_one_probe_has_three_columns() {
        let t = sweep_like(&[(0.5, vec![(-2.5, 0.01)])], 1);
        let s = render_table(&t, TableFormat::Csv).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].split(',').count(), 3);
        assert_eq!(
            lines[1],
            "5.0000000000000000e-1,-2.5000000000000000e0,1.0000000000000000e-2"
        );
        assert!(!s.contains('\r'));
    }

    #[test]
    fn mixed_cells_and_quoting() {
        let mut t = Table::new(vec!["probe".into(), "n".into(), "slope".into()]);
        t.push(vec![
            Cell::Text("indicator[0,0.5]".into()),
            Cell::Int(5),
            Cell::Num(-1.0),
        ])
        .unwrap();
        for format in [TableFormat::Csv, TableFormat::Jsonl] {
            let s = render_table(&t, format).unwrap();
            assert_eq!(parse_table(&s, format).unwrap(), t);
        }
        assert!(t.push(vec![Cell::Int(1)]).is_err());
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![-1e300f64..1e300, -10.0f64..10.0, Just(0.0), 1e-300f64..1e-290]
    }

    proptest! {
        #[test]
        fn round_trip(rows in proptest::collection::vec((finite(), proptest::collection::vec((finite(), finite()), 3)), 0..12)) {
            let t = sweep_like(&rows, 3);
            for format in [TableFormat::Csv, TableFormat::Jsonl] {
                let s = render_table(&t, format).unwrap();
                let back = parse_table(&s, format).unwrap();
                if format == TableFormat::Jsonl && rows.is_empty() {
                    prop_assert!(back.rows.is_empty());
                } else {
                    prop_assert_eq!(&back, &t);
                }
            }
        }
    }
}
