//! Self-describing tables written as CSV or JSON.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::args::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    /// Indeterminate or undefined; never written as 0.
    Na,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Self::Na, Self::Num)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Self::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Self::Num(_) | Self::Na => "NA".into(),
            Self::Int(i) => i.to_string(),
            Self::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Num(v) if v.is_finite() => json!(v),
            Self::Num(_) | Self::Na => Value::Null,
            Self::Int(i) => json!(i),
            Self::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str) -> Self {
        let mut t = Self::default();
        t.meta("tool", concat!("sacs ", env!("CARGO_PKG_VERSION")));
        t.meta("command", command);
        t
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let doc = json!({ "metadata": meta, "columns": self.columns, "rows": rows });
        serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Writes to `out`, or to standard output.
    pub fn emit(&self, format: Format, out: Option<&Path>) -> Result<(), CliError> {
        let text = self.render(format);
        match out {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("test");
        t.meta("mu", "0:1:2");
        t.columns = vec!["mu".into(), "q".into(), "n".into()];
        t.rows = vec![
            vec![Cell::Num(0.1), Cell::Na, Cell::Int(2)],
            vec![Cell::Num(-0.5625), Cell::Num(f64::NAN), Cell::Int(3)],
        ];
        t
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# tool: sacs "));
        assert_eq!(lines[2], "# mu: 0:1:2");
        assert_eq!(lines[3], "mu,q,n");
        assert_eq!(lines[4], "1.0000000000000001e-1,NA,2");
        assert_eq!(lines[5], "-5.6250000000000000e-1,NA,3");
    }

    #[test]
    fn json_layout() {
        let v: Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["columns"][1], "q");
        assert!(v["rows"][0][1].is_null());
        assert_eq!(v["rows"][1][0], -0.5625);
        assert_eq!(v["metadata"]["command"], "test");
    }
}
