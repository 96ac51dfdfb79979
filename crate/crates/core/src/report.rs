//! Machine-readable results of norm evaluations and inequality checks.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// One evaluated statement `lhs ≤ rhs` (or `lhs = rhs`), or a recorded
/// ratio for statements whose constant is unknown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub op: String,
    pub params: Map<String, Value>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Option<f64>,
    pub pass: bool,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub details: Map<String, Value>,
}

/// JSON number, or the string "inf" for infinite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::Null
    }
}

fn as_map(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        Value::Null => Map::new(),
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    }
}

fn ratio_of(lhs: f64, rhs: f64) -> Option<f64> {
    if rhs > 0.0 && rhs.is_finite() && lhs.is_finite() {
        Some(lhs / rhs)
    } else {
        None
    }
}

impl Report {
    /// `lhs ≤ rhs` with relative slack `tolerance`.
    pub fn inequality(op: &str, params: Value, lhs: f64, rhs: f64, tolerance: f64) -> Report {
        let scale = lhs.abs().max(rhs.abs());
        let pass = lhs.is_finite() && rhs.is_finite() && lhs <= rhs + tolerance * scale;
        Report {
            op: op.into(),
            params: as_map(params),
            lhs,
            rhs,
            ratio: ratio_of(lhs, rhs),
            pass,
            tolerance,
            flags: Vec::new(),
            details: Map::new(),
        }
    }

    /// `|lhs − rhs| ≤ tolerance · max(|lhs|, |rhs|)`.
    pub fn equality(op: &str, params: Value, lhs: f64, rhs: f64, tolerance: f64) -> Report {
        let scale = lhs.abs().max(rhs.abs());
        let pass = lhs.is_finite() && rhs.is_finite() && (lhs - rhs).abs() <= tolerance * scale;
        Report { pass, ..Report::inequality(op, params, lhs, rhs, tolerance) }
    }

    /// A measured ratio with no asserted bound; passes when finite.
    pub fn record(op: &str, params: Value, lhs: f64, rhs: f64) -> Report {
        let r = Report::inequality(op, params, lhs, rhs, 0.0);
        let pass = lhs.is_finite() && rhs.is_finite();
        Report { pass, ..r }
    }

    pub fn with_flag(mut self, flag: impl Into<String>) -> Report {
        self.flags.push(flag.into());
        self
    }

    pub fn with_detail(mut self, key: &str, value: Value) -> Report {
        self.details.insert(key.into(), value);
        self
    }

    pub fn with_pass(mut self, pass: bool) -> Report {
        self.pass = pass;
        self
    }
}

/// Envelope written by the command-line tool and the acceptance suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub toolkit_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub fixtures: Vec<Value>,
    pub tolerances: Map<String, Value>,
    pub reports: Vec<Report>,
}

impl RunRecord {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn inequality_slack_is_relative() {
        assert!(Report::inequality("t", json!({}), 1.0 + 1e-12, 1.0, 1e-9).pass);
        assert!(!Report::inequality("t", json!({}), 1.0 + 1e-6, 1.0, 1e-9).pass);
        assert!(Report::inequality("t", json!({}), 0.0, 0.0, 1e-9).pass);
        assert!(!Report::inequality("t", json!({}), f64::NAN, 1.0, 1e-9).pass);
    }

    #[test]
    fn ratio_absent_for_zero_rhs() {
        let r = Report::record("t", json!({"p": 1}), 0.0, 0.0);
        assert_eq!(r.ratio, None);
        assert!(r.pass);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"ratio\":null"));
    }

    #[test]
    fn infinite_params_serialize_as_strings() {
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(2.0), json!(2.0));
    }
}
