//! Table export: CSV with a header row, `.` decimals and `\n` line ends,
//! or JSON arrays of objects.

use std::fmt::Write as _;
use std::path::Path;

/// A cell value.
#[derive(Debug, Clone)]
pub enum Value {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Float(v) => format!("{v}"),
            Value::Int(v) => format!("{v}"),
            Value::Text(v) => v.clone(),
            Value::Bool(v) => format!("{v}"),
        }
    }

    fn render_json(&self) -> String {
        match self {
            Value::Float(v) => {
                if v.is_finite() {
                    format!("{v}")
                } else {
                    "null".to_string()
                }
            }
            Value::Int(v) => format!("{v}"),
            Value::Text(v) => serde_json::to_string(v).expect("string encodes"),
            Value::Bool(v) => format!("{v}"),
        }
    }
}

/// A rectangular table with named columns.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row arity mismatch");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Value::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("[");
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("\n  {");
            for (j, (col, v)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}: {}", serde_json::to_string(col).unwrap(), v.render_json());
            }
            out.push('}');
        }
        out.push_str("\n]\n");
        out
    }
}

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Writes a table to a file; IO failures surface as errors for exit code 4.
pub fn export(table: &Table, format: Format, path: &Path) -> std::io::Result<()> {
    let body = match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    std::fs::write(path, body)
}
