use std::fmt::Write as _;

use serde_json::{Map, Value};

use ptq_core::{Error, Phase};

pub const CSV_MAGIC: &str = "# ptq-sim v1";

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<String>> for Cell {
    fn from(s: Option<String>) -> Self {
        s.map_or(Cell::Empty, Cell::Text)
    }
}

impl From<Phase> for Cell {
    fn from(p: Phase) -> Self {
        Cell::Text(phase_name(p).to_string())
    }
}

pub fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::PtSymmetric => "pts",
        Phase::PtBroken => "ptb",
        Phase::NearEp => "near_ep",
    }
}

/// Shortest round-trip decimal, switching to exponent form for very large or
/// very small magnitudes so rows stay short.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    // Drop the sign of negative zero.
    let x = x + 0.0;
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

/// One table plus everything needed to reproduce it.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub params: Map<String, Value>,
    pub meta: Vec<(String, Value)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub diagnostics: Vec<Value>,
}

impl Dataset {
    pub fn new(params: Map<String, Value>, columns: &[&str]) -> Self {
        Dataset { params, columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Value>) {
        self.meta.push((key.to_string(), value.into()));
    }

    pub fn meta_num(&mut self, key: &str, value: Option<f64>) {
        let v = value.map(|x| Cell::Num(x).json()).unwrap_or(Value::Null);
        self.meta.push((key.to_string(), v));
    }

    /// Records a non-fatal failure at `row` (or for the whole run).
    pub fn diagnose(&mut self, row: Option<usize>, err: &Error) {
        let mut d = Map::new();
        d.insert("level".into(), "warning".into());
        d.insert("error".into(), err.kind().into());
        d.insert("message".into(), err.to_string().into());
        if let Some(r) = row {
            d.insert("row".into(), r.into());
        }
        self.diagnostics.push(Value::Object(d));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{CSV_MAGIC}").unwrap();
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={}", plain(v))).collect();
        writeln!(out, "# params: {}", params.join(" ")).unwrap();
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {}", plain(v)).unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(c, v)| (c.clone(), v.json())).collect();
                Value::Object(obj)
            })
            .collect();
        let meta: Map<String, Value> = self.meta.iter().cloned().collect();
        let mut results = Map::new();
        results.insert("meta".into(), Value::Object(meta));
        results.insert("columns".into(), self.columns.clone().into());
        results.insert("rows".into(), Value::Array(rows));
        let mut top = Map::new();
        top.insert("params".into(), Value::Object(self.params.clone()));
        top.insert("results".into(), Value::Object(results));
        top.insert("diagnostics".into(), Value::Array(self.diagnostics.clone()));
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).unwrap();
        s.push('\n');
        s
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), fmt_num),
        Value::Null => "none".into(),
        other => other.to_string(),
    }
}
