//! JSON report assembly.
//!
//! Reports go through [`serde_json::Value`], whose objects are `BTreeMap`s, so
//! keys come out sorted and identical inputs give byte-identical output.
//! Reals are printed in shortest round-trip form; non-finite values become `null`.

use serde::Serialize;
use serde_json::{json, Value};

use crate::engine::TensorBundle;
use crate::error::{FinslerError, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const SCHEMA_VERSION: u32 = 1;

/// `{"schema": 1, "command": ..., "seed": ..., "result": ...}`.
pub fn envelope<S: Serialize>(command: &str, seed: Option<u64>, result: &S) -> Result<Value> {
    let result = serde_json::to_value(result).map_err(|e| FinslerError::Invalid(e.to_string()))?;
    let mut v = json!({"schema": SCHEMA_VERSION, "command": command, "result": result});
    if let Some(seed) = seed {
        v["seed"] = json!(seed);
    }
    Ok(v)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("Value serialization is infallible");
    s.push('\n');
    s
}

fn matrix_rows<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.into_iter().map(|x| x.to_f64_lossy()).collect()).collect()
}

/// g, g⁻¹, C, T, T^h and the scalar coefficients as one JSON object.
pub fn bundle_json<T: Scalar>(b: &TensorBundle<T>) -> Result<Value> {
    let f = |x: T| x.to_f64_lossy();
    let to = |e: serde_json::Error| FinslerError::Invalid(e.to_string());
    let rho = serde_json::to_value(b.rho.map_f64()).map_err(to)?;
    let coefficients = serde_json::to_value(b.coefficients.map_f64()).map_err(to)?;
    Ok(json!({
        "s": f(b.s),
        "alpha": f(b.alpha),
        "F": f(b.finsler),
        "conditioning": f(b.conditioning),
        "rho": rho,
        "coefficients": coefficients,
        "g": matrix_rows(&b.metric),
        "g_inverse": matrix_rows(&b.metric_inverse),
        "C": serde_json::to_value(b.cartan.report()).map_err(to)?,
        "T": serde_json::to_value(b.t_lower.report()).map_err(to)?,
        "T_raised": serde_json::to_value(b.t_raised.report()).map_err(to)?,
    }))
}

/// `(tensor, indices, value)` rows of every component, indices lexicographic.
pub fn bundle_rows<T: Scalar>(b: &TensorBundle<T>) -> Vec<(&'static str, Vec<usize>, f64)> {
    let n = b.metric.dim();
    let mut rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            rows.push(("g", vec![i, j], b.metric.get(i, j).to_f64_lossy()));
        }
    }
    for i in 0..n {
        for j in 0..n {
            rows.push(("g_inverse", vec![i, j], b.metric_inverse.get(i, j).to_f64_lossy()));
        }
    }
    for (name, t) in [("C", b.cartan.to_dense()), ("T", b.t_lower.to_dense()), ("T_raised", b.t_raised.clone())] {
        for (idx, v) in t.flatten() {
            rows.push((name, idx, v.to_f64_lossy()));
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Frame;
    use crate::geometry::{make_metric_point, Direction};
    use crate::phi::PhiSpec;

    #[test]
    fn envelope_is_sorted_and_deterministic() {
        let v = envelope("x", Some(7), &json!({"b": 1.0, "a": 0.1})).unwrap();
        let s = to_json_string(&v);
        assert_eq!(s, to_json_string(&v));
        let keys: Vec<usize> = ["\"command\"", "\"result\"", "\"schema\"", "\"seed\""].iter().map(|k| s.find(k).unwrap()).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("0.1"));
    }

    #[test]
    fn bundle_has_all_tensors() {
        let mp = make_metric_point(Matrix::identity(3), vec![0.6, 0.0, 0.0], 1.0).unwrap();
        let b = Frame::new(&mp, &Direction(vec![1.0, 0.3, 0.2]), &PhiSpec::randers()).unwrap().bundle().unwrap();
        let v = bundle_json(&b).unwrap();
        for k in ["g", "g_inverse", "C", "T", "T_raised", "coefficients", "rho"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["T"]["components"].as_array().unwrap().len(), 15);
        assert_eq!(v["T"]["index_order"][1], json!([0, 0, 0, 1]));
        assert_eq!(bundle_rows(&b).len(), 9 + 9 + 27 + 81 + 81);
    }
}
