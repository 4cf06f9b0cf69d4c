use kfusion::numerics::{Mat, Vector};
use kfusion::{FrameBounds, FusionSystem};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::instance::render;

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub results: Value,
    pub pass: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        render(&serde_json::to_value(self).expect("report serializes"))
    }

    /// `key: value` lines, nested keys joined by dots.
    pub fn human(&self) -> String {
        let mut lines = vec![
            format!("command: {}", self.command),
            format!("inputs digest: {}", self.inputs_digest),
        ];
        flatten("", &self.results, &mut lines);
        lines.push(format!("pass: {}", self.pass));
        lines.join("\n") + "\n"
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<String>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(xs) if xs.iter().any(Value::is_object) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        other => out.push(format!("{prefix}: {other}")),
    }
}

/// SHA-256 of the compact serialization of `inputs`.
pub fn digest(inputs: &Value) -> String {
    hex::encode(Sha256::digest(inputs.to_string().as_bytes()))
}

/// Non-finite values become the strings `"inf"`, `"-inf"` and `"nan"`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(
        || Value::String(x.to_string().to_lowercase()),
        Value::Number,
    )
}

pub fn vector(v: &Vector) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

pub fn matrix(m: &Mat) -> Value {
    json!({
        "rows": m.nrows(),
        "cols": m.ncols(),
        "data": m.transpose().iter().map(|x| num(*x)).collect::<Vec<_>>(),
    })
}

pub fn bounds(b: &FrameBounds) -> Value {
    json!({"lower": num(b.lower), "upper": num(b.upper)})
}

pub fn opt_bounds(b: &Option<FrameBounds>) -> Value {
    b.as_ref().map_or(Value::Null, bounds)
}

/// Member dimensions, weights and orthonormal bases (as lists of columns).
pub fn system(w: &FusionSystem) -> Value {
    Value::Array(
        w.members()
            .iter()
            .map(|m| {
                json!({
                    "dim": m.subspace.dim(),
                    "weight": num(m.weight),
                    "basis": m.subspace.basis().column_iter()
                        .map(|c| Value::Array(c.iter().map(|x| num(*x)).collect()))
                        .collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_stay_valid_json() {
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(f64::NEG_INFINITY), json!("-inf"));
        assert_eq!(num(f64::NAN), json!("nan"));
        assert_eq!(num(0.5), json!(0.5));
    }

    #[test]
    fn human_lines_flatten_nested_results() {
        let r = Report {
            command: "bounds".into(),
            inputs_digest: digest(&json!({"a": 1})),
            results: json!({"bounds": {"lower": 1.0, "upper": 2.0}, "members": [{"dim": 2}]}),
            pass: true,
        };
        let h = r.human();
        assert!(h.contains("bounds.lower: 1.0\n"));
        assert!(h.contains("members[0].dim: 2\n"));
        assert!(h.ends_with("pass: true\n"));
    }

    #[test]
    fn digest_is_key_order_independent() {
        let a: Value = serde_json::from_str(r#"{"x": 1, "y": [1, 2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"y": [1, 2], "x": 1}"#).unwrap();
        assert_eq!(digest(&a), digest(&b));
        assert_eq!(digest(&a).len(), 64);
    }
}
