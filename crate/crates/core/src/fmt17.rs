//! Fixed 17-significant-digit number formatting for exported files.
//!
//! Seventeen significant digits round-trip every finite `f64` exactly, and a
//! fixed width keeps the output byte-stable across platforms.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Formats a finite float with 17 significant digits in scientific notation.
pub fn format(x: f64) -> String {
    format!("{x:.16e}")
}

/// A float serialized into JSON with [`format`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct F17(pub f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom(format!(
                "cannot write non-finite number {} to JSON",
                self.0
            )));
        }
        let raw = RawValue::from_string(format(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

pub fn wrap_rows(rows: &[Vec<f64>]) -> Vec<Vec<F17>> {
    rows.iter().map(|r| r.iter().copied().map(F17).collect()).collect()
}
