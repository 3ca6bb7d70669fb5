use std::fmt::Write as _;
use std::str::FromStr;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "json" | "json-like-keyvalue" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected text, csv or json)")),
        }
    }
}

/// A named number with the tolerance it was judged against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
}

impl Quantity {
    pub fn within(&self) -> bool {
        match self.expected {
            Some(e) => (self.value - e).abs() <= self.tol,
            None => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Flag {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub version: String,
    #[serde(serialize_with = "ordered_map")]
    pub parameters: Vec<(String, String)>,
    pub results: Vec<Quantity>,
    /// Certificate records from the core crate, serialized as JSON values.
    #[serde(serialize_with = "ordered_map")]
    pub certificates: Vec<(String, serde_json::Value)>,
    pub flags: Vec<Flag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    pub passed: bool,
}

impl ScenarioReport {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            version: VERSION.to_string(),
            parameters: Vec::new(),
            results: Vec::new(),
            certificates: Vec::new(),
            flags: Vec::new(),
            table: None,
            passed: true,
        }
    }

    pub fn param(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.parameters.push((name.to_string(), value.to_string()));
        self
    }

    /// Records a value; with an expectation it also adds a pass/fail flag.
    pub fn quantity(&mut self, name: &str, value: f64, tol: f64, expected: Option<f64>) -> &mut Self {
        let q = Quantity {
            name: name.to_string(),
            value,
            tol,
            expected,
        };
        if expected.is_some() {
            let pass = q.within();
            self.flag(&format!("{name}_matches"), pass);
        }
        self.results.push(q);
        self
    }

    pub fn certificate(&mut self, name: &str, record: &impl Serialize) -> &mut Self {
        let value = serde_json::to_value(record).expect("certificate records serialize");
        self.certificates.push((name.to_string(), value));
        self
    }

    pub fn flag(&mut self, name: &str, pass: bool) -> &mut Self {
        self.flags.push(Flag {
            name: name.to_string(),
            pass,
        });
        self.passed &= pass;
        self
    }

    pub fn failed_flags(&self) -> Vec<&str> {
        self.flags.iter().filter(|f| !f.pass).map(|f| f.name.as_str()).collect()
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.render_text(),
            Format::Csv => self.render_csv(),
            Format::Json => serde_json::to_string_pretty(self).expect("reports serialize") + "\n",
        }
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario = {}", self.scenario);
        let _ = writeln!(out, "version = {}", self.version);
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "param.{k} = {v}");
        }
        for q in &self.results {
            let _ = write!(out, "result.{} = {} (tol {}", q.name, q.value, q.tol);
            if let Some(e) = q.expected {
                let _ = write!(out, ", expected {e}");
            }
            out.push_str(")\n");
        }
        for (k, v) in &self.certificates {
            let _ = writeln!(out, "certificate.{k} = {v}");
        }
        for f in &self.flags {
            let _ = writeln!(out, "flag.{} = {}", f.name, if f.pass { "pass" } else { "fail" });
        }
        if let Some(t) = &self.table {
            let _ = writeln!(out, "table.columns = {}", t.columns.join(","));
            for row in &t.rows {
                let _ = writeln!(out, "table.row = {}", join(row));
            }
        }
        let _ = writeln!(out, "status = {}", if self.passed { "pass" } else { "fail" });
        out
    }

    /// The sweep table when the scenario has one, otherwise one row per
    /// result and flag.
    fn render_csv(&self) -> String {
        let mut out = String::new();
        if let Some(t) = &self.table {
            let _ = writeln!(out, "{}", t.columns.join(","));
            for row in &t.rows {
                let _ = writeln!(out, "{}", join(row));
            }
            return out;
        }
        out.push_str("kind,name,value,tol,expected\n");
        for q in &self.results {
            let expected = q.expected.map(|e| e.to_string()).unwrap_or_default();
            let _ = writeln!(out, "result,{},{},{},{}", q.name, q.value, q.tol, expected);
        }
        for f in &self.flags {
            let _ = writeln!(out, "flag,{},{},,", f.name, u8::from(f.pass));
        }
        out
    }
}

/// Serializes pairs as a JSON object in insertion order.
fn ordered_map<S: Serializer, V: Serialize>(pairs: &[(String, V)], s: S) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(pairs.len()))?;
    for (k, v) in pairs {
        map.serialize_entry(k, v)?;
    }
    map.end()
}

fn join(row: &[f64]) -> String {
    row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_drive_status() {
        let mut r = ScenarioReport::new("demo");
        r.quantity("x", 1.0, 1e-9, Some(1.0));
        assert!(r.passed);
        r.quantity("y", 1.0, 1e-9, Some(2.0));
        assert!(!r.passed);
        assert_eq!(r.failed_flags(), vec!["y_matches"]);
        assert!(r.render(Format::Text).ends_with("status = fail\n"));
    }

    #[test]
    fn csv_prefers_table() {
        let mut r = ScenarioReport::new("demo");
        r.quantity("x", 0.5, 1e-9, None);
        assert!(r.render(Format::Csv).starts_with("kind,name,value,tol,expected\nresult,x,0.5,0.000000001,\n"));
        r.table = Some(Table {
            columns: vec!["q".into(), "w".into()],
            rows: vec![vec![0.0, 1.5]],
        });
        assert_eq!(r.render(Format::Csv), "q,w\n0,1.5\n");
    }

    #[test]
    fn format_names() {
        assert_eq!("json-like-keyvalue".parse::<Format>(), Ok(Format::Json));
        assert_eq!("json".parse::<Format>(), Ok(Format::Json));
        assert!("xml".parse::<Format>().is_err());
    }
}
