//! Unit-suffixed quantities in configuration files.
//!
//! A quantity is either a bare number, taken as SI, or a string such as
//! `"50 mm"`, `"1.78 MHz"` or `"319 nV/rtHz"`. Parsing is canonical: every
//! accepted suffix maps to one SI scale for one physical dimension, and a
//! suffix from the wrong dimension is an error.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical dimension expected for a configuration field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Length,
    Time,
    Frequency,
    Voltage,
    Resistance,
    Capacitance,
    Conductance,
    NoiseDensity,
    Dimensionless,
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dim::Length => "length",
            Dim::Time => "time",
            Dim::Frequency => "frequency",
            Dim::Voltage => "voltage",
            Dim::Resistance => "resistance",
            Dim::Capacitance => "capacitance",
            Dim::Conductance => "conductance",
            Dim::NoiseDensity => "noise density",
            Dim::Dimensionless => "dimensionless",
        };
        f.write_str(s)
    }
}

const UNITS: &[(&str, Dim, f64)] = &[
    ("m", Dim::Length, 1.0),
    ("cm", Dim::Length, 1e-2),
    ("mm", Dim::Length, 1e-3),
    ("um", Dim::Length, 1e-6),
    ("s", Dim::Time, 1.0),
    ("ms", Dim::Time, 1e-3),
    ("us", Dim::Time, 1e-6),
    ("ns", Dim::Time, 1e-9),
    ("Hz", Dim::Frequency, 1.0),
    ("kHz", Dim::Frequency, 1e3),
    ("MHz", Dim::Frequency, 1e6),
    ("V", Dim::Voltage, 1.0),
    ("mV", Dim::Voltage, 1e-3),
    ("uV", Dim::Voltage, 1e-6),
    ("nV", Dim::Voltage, 1e-9),
    ("Vpp", Dim::Voltage, 1.0),
    ("mVpp", Dim::Voltage, 1e-3),
    ("uVpp", Dim::Voltage, 1e-6),
    ("ohm", Dim::Resistance, 1.0),
    ("kohm", Dim::Resistance, 1e3),
    ("Mohm", Dim::Resistance, 1e6),
    ("F", Dim::Capacitance, 1.0),
    ("nF", Dim::Capacitance, 1e-9),
    ("pF", Dim::Capacitance, 1e-12),
    ("fF", Dim::Capacitance, 1e-15),
    ("S", Dim::Conductance, 1.0),
    ("mS", Dim::Conductance, 1e-3),
    ("uS", Dim::Conductance, 1e-6),
    ("V/rtHz", Dim::NoiseDensity, 1.0),
    ("uV/rtHz", Dim::NoiseDensity, 1e-6),
    ("nV/rtHz", Dim::NoiseDensity, 1e-9),
    ("%", Dim::Dimensionless, 1e-2),
];

/// Parses `text` as a quantity of dimension `dim`, returning SI units.
/// A bare number is accepted as already being SI.
pub fn parse_quantity(text: &str, dim: Dim) -> Result<f64> {
    let text = text.trim();
    let split = text
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::validation("quantity", format!("cannot parse number in `{text}`")))?;
    let unit = unit.trim();
    if unit.is_empty() {
        return Ok(value);
    }
    match UNITS.iter().find(|(u, _, _)| *u == unit) {
        Some((_, d, scale)) if *d == dim => Ok(rescale(num.trim(), value, *scale)),
        Some((_, d, _)) => Err(Error::validation(
            "quantity",
            format!("`{text}` is a {d}, expected {dim}"),
        )),
        None => Err(Error::validation(
            "quantity",
            format!("unknown unit `{unit}` in `{text}`"),
        )),
    }
}

/// Applies a power-of-ten unit scale by shifting the decimal exponent, so
/// `4.7 pF` parses to the same double as `4.7e-12`.
fn rescale(num: &str, value: f64, scale: f64) -> f64 {
    let shift = scale.log10().round() as i32;
    let (mantissa, exp) = match num.find(['e', 'E']) {
        Some(i) => (&num[..i], num[i + 1..].parse::<i32>().unwrap_or(0)),
        None => (num, 0),
    };
    format!("{mantissa}e{}", exp + shift)
        .parse()
        .unwrap_or(value * scale)
}

/// A configuration value: plain SI number or unit-suffixed string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    /// Resolves to SI, reporting failures against `path`.
    pub fn si(&self, dim: Dim, path: &str) -> Result<f64> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(s) => parse_quantity(s, dim).map_err(|e| match e {
                Error::Validation { reason, .. } => Error::schema(path, reason),
                other => other,
            }),
        }
    }
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Number(v)
    }
}

impl From<&str> for Quantity {
    fn from(s: &str) -> Self {
        Quantity::Text(s.to_string())
    }
}

/// `deserialize_with` adapters that accept a number (SI) or a
/// unit-suffixed string of the named dimension.
pub mod de {
    use serde::{Deserialize, Deserializer};

    use super::{Dim, Quantity};

    fn read<'de, D: Deserializer<'de>>(d: D, dim: Dim) -> Result<f64, D::Error> {
        match Quantity::deserialize(d)? {
            Quantity::Number(v) => Ok(v),
            Quantity::Text(s) => super::parse_quantity(&s, dim).map_err(serde::de::Error::custom),
        }
    }

    macro_rules! adapters {
        ($($name:ident => $dim:expr),* $(,)?) => {$(
            pub fn $name<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                read(d, $dim)
            }
        )*};
    }

    adapters! {
        length => Dim::Length,
        time => Dim::Time,
        frequency => Dim::Frequency,
        voltage => Dim::Voltage,
        resistance => Dim::Resistance,
        capacitance => Dim::Capacitance,
        conductance => Dim::Conductance,
        density => Dim::NoiseDensity,
        ratio => Dim::Dimensionless,
    }

    /// Like [`resistance`] for an optional field (pair with `#[serde(default)]`).
    pub fn resistance_opt<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        resistance(d).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_suffixes() {
        let cases = [
            ("50 mm", Dim::Length, 0.05),
            ("60us", Dim::Time, 60e-6),
            ("1.78 MHz", Dim::Frequency, 1.78e6),
            ("20 mVpp", Dim::Voltage, 0.02),
            ("4 kohm", Dim::Resistance, 4000.0),
            ("0.44 pF", Dim::Capacitance, 0.44e-12),
            ("120 uS", Dim::Conductance, 120e-6),
            ("319 nV/rtHz", Dim::NoiseDensity, 319e-9),
            ("20 %", Dim::Dimensionless, 0.2),
            ("2.5e-3", Dim::Length, 2.5e-3),
            ("-1.5 mm", Dim::Length, -1.5e-3),
        ];
        for (text, dim, want) in cases {
            let got = parse_quantity(text, dim).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs(), "{text}: {got}");
        }
    }

    #[test]
    fn wrong_dimension_and_unknown_unit() {
        assert!(parse_quantity("5 us", Dim::Length).is_err());
        assert!(parse_quantity("5 furlong", Dim::Length).is_err());
        assert!(parse_quantity("mm", Dim::Length).is_err());
    }

    #[test]
    fn quantity_reports_path() {
        let q = Quantity::from("3 parsec");
        match q.si(Dim::Length, "geometry.depth") {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "geometry.depth"),
            other => panic!("{other:?}"),
        }
        assert_eq!(Quantity::from(0.05).si(Dim::Length, "x").unwrap(), 0.05);
    }
}
