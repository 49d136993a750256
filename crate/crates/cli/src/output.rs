//! Tables and their CSV / JSON encodings.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::args::Format;

/// Probabilities below `exp(LOG_FLOOR)` are left empty; the log column carries them.
pub const LOG_FLOOR: f64 = -700.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    /// `exp(log_p)`, or empty when that would go below `exp(LOG_FLOOR)`.
    pub fn prob_from_log(log_p: f64) -> Cell {
        if log_p < LOG_FLOOR {
            Cell::Empty
        } else {
            Cell::Real(log_p.exp())
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Real(x) => format_real(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(x) if x.is_finite() => json!(x),
            Cell::Real(x) => Value::String(format_real(*x)),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Real)
    }
}

/// 17 significant digits, enough to round-trip every double.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }

    pub fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, cell)| (c.to_string(), cell.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Writes `table` in `format`, to `out` or stdout. The manifest goes inside
/// the JSON object, or for CSV to `<out>.manifest.json` (stderr without `--out`).
pub fn emit(table: &Table, manifest: &Value, format: Format, out: Option<&Path>) -> io::Result<()> {
    let body = match format {
        Format::Csv => table.to_csv()?,
        Format::Json => {
            let mut text = serde_json::to_vec_pretty(
                &json!({ "manifest": manifest, "rows": table.json_rows() }),
            )?;
            text.push(b'\n');
            text
        }
    };
    match out {
        Some(path) => {
            fs::write(path, &body)?;
            if format == Format::Csv {
                let mut side = path.as_os_str().to_owned();
                side.push(".manifest.json");
                let mut text = serde_json::to_vec_pretty(manifest)?;
                text.push(b'\n');
                fs::write(side, text)?;
            }
        }
        None => {
            io::stdout().lock().write_all(&body)?;
            if format == Format::Csv {
                eprintln!("{}", serde_json::to_string(manifest)?);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_real(1.0), "1.0000000000000000e0");
        assert_eq!(format_real(f64::INFINITY), "inf");
    }

    #[test]
    fn tiny_probabilities_are_left_empty() {
        assert_eq!(Cell::prob_from_log(-700.5), Cell::Empty);
        assert_eq!(Cell::prob_from_log(0.0), Cell::Real(1.0));
        assert_eq!(Cell::prob_from_log(f64::NEG_INFINITY), Cell::Empty);
    }

    #[test]
    fn csv_has_header_and_quotes() {
        let mut t = Table::new(&["a", "label"]);
        t.push(vec![Cell::Real(0.5), Cell::Text("x,y".into())]);
        t.push(vec![Cell::Empty, Cell::Int(3)]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "a,label\n5.0000000000000000e-1,\"x,y\"\n,3\n");
        let rows = t.json_rows();
        assert_eq!(rows[0]["label"], "x,y");
        assert!(rows[1]["a"].is_null());
    }
}
