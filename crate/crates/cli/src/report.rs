//! Report assembly and JSON / CSV serialization.

use serde_json::{Map, Value};

/// Shortest round-trip text for a double; non-finite values as `inf`, `-inf`
/// or `NaN`.
pub fn float_text(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let abs = x.abs();
    if abs != 0.0 && !(1e-4..1e16).contains(&abs) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// A JSON number for finite doubles, otherwise the string from [`float_text`].
pub fn float_json(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(float_text(x)))
}

/// One cell of a report: rendered both for JSON and CSV.
#[derive(Debug, Clone)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    /// An exact value (big integer or rational) kept as a decimal string.
    Exact(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn json(&self) -> Value {
        match self {
            Cell::Float(x) => float_json(*x),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) | Cell::Exact(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }

    pub fn csv(&self) -> String {
        let raw = match self {
            Cell::Float(x) => float_text(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) | Cell::Exact(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        };
        if raw.contains([',', '"', '\n']) {
            format!("\"{}\"", raw.replace('"', "\"\""))
        } else {
            raw
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map(Into::into).unwrap_or(Cell::Empty)
    }
}

/// A command's output: its inputs, named results and an optional table.
///
/// JSON renders `inputs` and each result field at the top level, plus a
/// `rows` array when the report is tabular. CSV renders one line per row
/// (or a single line for scalar reports) with the inputs first.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<(String, Cell)>,
    pub fields: Vec<(String, Cell)>,
    pub budgets: Vec<(String, Cell)>,
    pub warnings: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Cell>) -> &mut Self {
        self.inputs.push((key.to_string(), value.into()));
        self
    }

    pub fn field(&mut self, key: &str, value: impl Into<Cell>) -> &mut Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }

    pub fn budget(&mut self, key: &str, value: impl Into<Cell>) -> &mut Self {
        self.budgets.push((key.to_string(), value.into()));
        self
    }

    pub fn to_json(&self, runtime_ms: f64) -> Value {
        let mut root = Map::new();
        root.insert("command".into(), Value::String(self.command.clone()));
        let inputs: Map<String, Value> = self
            .inputs
            .iter()
            .map(|(k, v)| (k.clone(), v.json()))
            .collect();
        root.insert("inputs".into(), Value::Object(inputs));
        for (k, v) in &self.fields {
            root.insert(k.clone(), v.json());
        }
        let budgets: Map<String, Value> = self
            .budgets
            .iter()
            .map(|(k, v)| (k.clone(), v.json()))
            .collect();
        root.insert("budgets".into(), Value::Object(budgets));
        if !self.columns.is_empty() {
            let rows = self
                .rows
                .iter()
                .map(|row| {
                    Value::Object(
                        self.columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| (c.clone(), v.json()))
                            .collect(),
                    )
                })
                .collect();
            root.insert("rows".into(), Value::Array(rows));
        }
        root.insert(
            "warnings".into(),
            Value::Array(self.warnings.iter().cloned().map(Value::String).collect()),
        );
        root.insert("runtime_ms".into(), float_json(runtime_ms));
        Value::Object(root)
    }

    pub fn to_csv(&self) -> String {
        let mut header: Vec<String> = self.inputs.iter().map(|(k, _)| k.clone()).collect();
        let prefix: Vec<String> = self.inputs.iter().map(|(_, v)| v.csv()).collect();
        let mut lines = Vec::new();
        if self.columns.is_empty() {
            header.extend(self.fields.iter().map(|(k, _)| k.clone()));
            header.extend(self.budgets.iter().map(|(k, _)| format!("budget_{k}")));
            let mut line = prefix;
            line.extend(self.fields.iter().map(|(_, v)| v.csv()));
            line.extend(self.budgets.iter().map(|(_, v)| v.csv()));
            lines.push(line.join(","));
        } else {
            header.extend(self.columns.iter().cloned());
            for row in &self.rows {
                let mut line = prefix.clone();
                line.extend(row.iter().map(Cell::csv));
                lines.push(line.join(","));
            }
        }
        let mut out = header.join(",");
        out.push('\n');
        for line in lines {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.0692, 1.384e-3, 4.82e-6, 1e-300, 123456.75, -2.5] {
            assert_eq!(float_text(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float_text(f64::NEG_INFINITY), "-inf");
        assert_eq!(float_json(f64::NAN), Value::String("NaN".into()));
    }

    #[test]
    fn csv_layout() {
        let mut r = Report::new("counts");
        r.input("k", 4u64)
            .input("m", 4u64)
            .field("value", Cell::Exact("15".into()));
        assert_eq!(r.to_csv(), "k,m,value\n4,4,15\n");
        let j = r.to_json(1.0);
        assert_eq!(j["value"], Value::String("15".into()));
        assert_eq!(j["inputs"]["k"], Value::from(4));
    }
}
