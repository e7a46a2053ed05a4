use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    #[default]
    Text,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Text => "txt",
            Format::Csv => "csv",
        }
    }
}

/// Rows of strings under named columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table { headers: headers.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) {
        let row: Vec<String> = row.into_iter().map(|s| s.to_string()).collect();
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |cells: &[String], out: &mut String| {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        line(&self.headers, &mut out);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        line(&rule, &mut out);
        for r in &self.rows {
            line(r, &mut out);
        }
        out
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> =
                        self.headers.iter().zip(r).map(|(h, c)| (h.clone(), cell_value(c))).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

fn cell_value(c: &str) -> Value {
    if let Ok(b) = c.parse::<bool>() {
        return Value::Bool(b);
    }
    match c.parse::<f64>() {
        Ok(v) if v.is_finite() => serde_json::Number::from_f64(v).map_or(Value::String(c.into()), Value::Number),
        _ => Value::String(c.into()),
    }
}

/// Result of one command: headline fields, an optional table, and the
/// pass/negative verdict that decides the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub title: String,
    pub passed: bool,
    pub fields: Vec<(String, Value)>,
    pub table: Option<Table>,
}

impl Report {
    pub fn new(title: impl Into<String>, passed: bool) -> Self {
        Report { title: title.into(), passed, fields: Vec::new(), table: None }
    }

    pub fn field(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.fields.push((key.to_string(), v));
        self
    }

    pub fn with_table(mut self, t: Table) -> Self {
        self.table = Some(t);
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut obj = Map::new();
                obj.insert("title".into(), Value::String(self.title.clone()));
                obj.insert("passed".into(), Value::Bool(self.passed));
                let fields: Map<String, Value> = self.fields.iter().cloned().collect();
                obj.insert("fields".into(), Value::Object(fields));
                if let Some(t) = &self.table {
                    obj.insert("table".into(), t.to_json());
                }
                let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("json values");
                s.push('\n');
                s
            }
            Format::Csv => match &self.table {
                Some(t) => t.to_csv(),
                None => {
                    let mut t = Table::new(["key", "value"]);
                    for (k, v) in &self.fields {
                        t.push([k.clone(), scalar_text(v)]);
                    }
                    t.push(["passed".to_string(), self.passed.to_string()]);
                    t.to_csv()
                }
            },
            Format::Text => {
                let mut out = String::new();
                let _ = writeln!(out, "{}", self.title);
                let w = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                for (k, v) in &self.fields {
                    let _ = writeln!(out, "  {k:<w$}  {}", scalar_text(v));
                }
                if let Some(t) = &self.table {
                    out.push('\n');
                    out.push_str(&t.to_text());
                }
                out
            }
        }
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "none".into(),
        other => other.to_string(),
    }
}

/// Fixed-precision float formatting for table cells.
pub fn num(v: f64) -> String {
    if v == 0.0 || (1e-4..1e6).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.6e}")
    }
}
