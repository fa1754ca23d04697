//! Deterministic JSON reports.
//!
//! Keys keep insertion order and every float is written in scientific
//! notation with 17 significant digits, so identical runs give identical bytes.

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// A float rendered as `d.dddddddddddddddde±x`; non-finite values become strings.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        serde_json::from_str(&format!("{v:.16e}")).expect("scientific notation is valid JSON")
    } else {
        Value::String(v.to_string())
    }
}

pub fn nums(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| num(v)).collect())
}

pub fn ints(values: &[usize]) -> Value {
    Value::Array(values.iter().map(|&v| Value::from(v)).collect())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug)]
pub struct Report {
    pub verb: String,
    pub spec_sha256: String,
    pub inputs: Map<String, Value>,
    pub results: Map<String, Value>,
    pub residuals: Map<String, Value>,
    pub status: String,
    pub error: Option<String>,
}

impl Report {
    pub fn new(verb: &str, spec_bytes: &[u8]) -> Self {
        Report {
            verb: verb.to_string(),
            spec_sha256: sha256_hex(spec_bytes),
            inputs: Map::new(),
            results: Map::new(),
            residuals: Map::new(),
            status: "ok".to_string(),
            error: None,
        }
    }

    pub fn fail(&mut self, message: impl Into<String>) {
        self.status = "failed".to_string();
        self.error = Some(message.into());
    }

    pub fn to_value(&self) -> Value {
        let mut root = Map::new();
        root.insert("verb".into(), Value::from(self.verb.clone()));
        root.insert("spec_sha256".into(), Value::from(self.spec_sha256.clone()));
        root.insert("inputs".into(), Value::Object(self.inputs.clone()));
        root.insert("results".into(), Value::Object(self.results.clone()));
        root.insert("residuals".into(), Value::Object(self.residuals.clone()));
        root.insert("status".into(), Value::from(self.status.clone()));
        if let Some(e) = &self.error {
            root.insert("error".into(), Value::from(e.clone()));
        }
        Value::Object(root)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(1.0).to_string(), "1.0000000000000000e+0");
        assert_eq!(num(f64::NAN), Value::String("NaN".into()));
    }

    #[test]
    fn key_order_is_insertion_order() {
        let mut r = Report::new("pressure", b"{}");
        r.results.insert("zeta".into(), num(1.0));
        r.results.insert("alpha".into(), num(2.0));
        let json = r.to_json();
        assert!(json.find("zeta").unwrap() < json.find("alpha").unwrap());
        assert!(json.find("\"verb\"").unwrap() < json.find("\"spec_sha256\"").unwrap());
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
