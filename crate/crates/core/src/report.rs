//! Machine-readable experiment reports.
//!
//! Reports are plain JSON. Numbers are rounded to 12 significant digits and
//! all maps are ordered, so the same inputs always give the same bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "sideinfo";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round to `digits` significant decimal digits.
pub fn round_sig(v: f64, digits: usize) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", digits.saturating_sub(1), v)
        .parse()
        .expect("formatted float parses")
}

/// JSON value for a float: rounded number, or a string for non-finite values.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        serde_json::Number::from_f64(round_sig(v, 12))
            .map(Value::Number)
            .expect("finite")
    } else if v.is_nan() {
        Value::String("nan".into())
    } else if v > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// Name of the acceptance criterion this verdict checks.
    pub criterion: String,
    pub passed: bool,
    pub observed: Value,
    pub threshold: Value,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub kind: String,
    pub model_hash: String,
    pub seed: u64,
    pub params: BTreeMap<String, Value>,
    pub stats: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tables: BTreeMap<String, Vec<BTreeMap<String, Value>>>,
    pub verdicts: Vec<Verdict>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

impl ExperimentReport {
    pub fn new(kind: &str, model_hash: &str, seed: u64) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            model_hash: model_hash.to_string(),
            seed,
            params: BTreeMap::new(),
            stats: BTreeMap::new(),
            tables: BTreeMap::new(),
            verdicts: Vec::new(),
            provenance: Provenance {
                tool: TOOL_NAME.into(),
                version: TOOL_VERSION.into(),
            },
            config: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn param_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.params.insert(key.to_string(), num(value));
        self
    }

    pub fn stat(&mut self, key: &str, value: f64) -> &mut Self {
        self.stats.insert(key.to_string(), num(value));
        self
    }

    pub fn stat_value(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.stats.insert(key.to_string(), value.into());
        self
    }

    pub fn stat_f64(&self, key: &str) -> Option<f64> {
        self.stats.get(key).and_then(Value::as_f64)
    }

    pub fn push_row(&mut self, table: &str, row: BTreeMap<String, Value>) {
        self.tables.entry(table.to_string()).or_default().push(row);
    }

    /// Record a verdict `observed <= threshold` (or any boolean outcome).
    pub fn verdict(&mut self, criterion: &str, passed: bool, observed: Value, threshold: Value, detail: &str) {
        self.verdicts.push(Verdict {
            criterion: criterion.to_string(),
            passed,
            observed,
            threshold,
            detail: detail.to_string(),
        });
    }

    pub fn verdict_for(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV rendering of a table; columns are the union of row keys in order.
    pub fn table_csv(&self, table: &str) -> Option<String> {
        let rows = self.tables.get(table)?;
        let mut columns: Vec<&String> = Vec::new();
        for row in rows {
            for key in row.keys() {
                if !columns.contains(&key) {
                    columns.push(key);
                }
            }
        }
        let mut out = columns.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(",");
        out.push('\n');
        for row in rows {
            let cells: Vec<String> = columns
                .iter()
                .map(|c| match row.get(*c) {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Some(out)
    }
}

/// Build a table row from `(column, value)` pairs.
pub fn row<I, K>(items: I) -> BTreeMap<String, Value>
where
    I: IntoIterator<Item = (K, Value)>,
    K: Into<String>,
{
    items.into_iter().map(|(k, v)| (k.into(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_to_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2, 12), 0.3);
        assert_eq!(round_sig(123456.7890123456, 12), 123456.789012);
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
    }

    #[test]
    fn report_roundtrips_and_renders_csv() {
        let mut r = ExperimentReport::new("demo", "abcd", 3);
        r.param("n", 10).stat("mean", 1.0 / 3.0);
        r.push_row("t", row([("a", num(1.0)), ("b", Value::String("x".into()))]));
        r.push_row("t", row([("a", num(2.5))]));
        r.verdict("c1", true, num(0.1), num(0.2), "");
        let text = r.to_json();
        let back: ExperimentReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(r.table_csv("t").unwrap(), "a,b\n1.0,x\n2.5,\n");
        assert!(text.contains("0.333333333333"));
        assert!(r.passed());
    }
}
