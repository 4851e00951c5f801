//! Fixed-precision number formatting for configuration files.
//!
//! Profile, detector and case files carry at most six fractional digits.
//! Values are rounded on the way out so that a load/save cycle is stable.

use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::Serializer;

pub const FRACTION_DIGITS: i32 = 6;

pub fn round6(value: f64) -> f64 {
    let scale = 10f64.powi(FRACTION_DIGITS);
    let rounded = (value * scale).round() / scale;
    // avoid "-0.0" in output
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

/// Round to two decimals for display.
pub fn round2(value: f64) -> f64 {
    // nudge exact decimal ties (2.925 stored as 2.92499..) away from zero
    let rounded = (value * 100.0 + value.signum() * 1e-7).round() / 100.0;
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_f64(round6(*value))
}

pub fn serialize_opt<S: Serializer>(value: &Option<f64>, serializer: S) -> Result<S::Ok, S::Error> {
    match value {
        Some(v) => serializer.serialize_some(&round6(*v)),
        None => serializer.serialize_none(),
    }
}

pub fn serialize_map<S: Serializer>(
    values: &BTreeMap<String, f64>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    let mut map = serializer.serialize_map(Some(values.len()))?;
    for (key, value) in values {
        map.serialize_entry(key, &round6(*value))?;
    }
    map.end()
}

pub fn serialize_2dp<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_f64(round2(*value))
}
