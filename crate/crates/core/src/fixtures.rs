//! Metric-point fixtures bundled into the library.

use crate::error::{FinslerError, Result};
use crate::geometry::{MetricFixture, MetricPoint};
use crate::scalar::Scalar;

/// Identity `a`, `b = (0.6, 0, 0)`, `y = (1, 0.3, 0.2)`.
pub const STANDARD: &str = include_str!("../fixtures/standard.json");
/// Identity `a`, `b = (1, 0, 0)`, so `b² = 1`.
pub const UNIT_B: &str = include_str!("../fixtures/unit_b.json");
/// Identity `a`, `b = (0.8, 0, 0)`, `y` with `s = 0.5`.
pub const KROPINA: &str = include_str!("../fixtures/kropina.json");
/// Non-diagonal `a` and generic `b`.
pub const TILTED: &str = include_str!("../fixtures/tilted.json");
/// Two-dimensional point (rejected by the classifier).
pub const PLANE: &str = include_str!("../fixtures/plane.json");
/// Four-dimensional point.
pub const FOUR_DIM: &str = include_str!("../fixtures/four_dim.json");

pub const NAMES: [&str; 6] = ["standard", "unit_b", "kropina", "tilted", "plane", "four_dim"];

pub fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "standard" => STANDARD,
        "unit_b" => UNIT_B,
        "kropina" => KROPINA,
        "tilted" => TILTED,
        "plane" => PLANE,
        "four_dim" => FOUR_DIM,
        _ => return None,
    })
}

pub fn fixture(name: &str) -> Result<MetricFixture> {
    let text = source(name).ok_or_else(|| FinslerError::Invalid(format!("no bundled fixture \"{name}\"")))?;
    MetricFixture::from_json(text).map_err(|e| FinslerError::Invalid(e.to_string()))
}

pub fn metric_point<T: Scalar>(name: &str) -> Result<MetricPoint<T>> {
    fixture(name)?.to_metric_point()
}
