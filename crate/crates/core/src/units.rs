//! Unit-suffixed quantity parsing.
//!
//! Configuration values are either bare numbers (SI, angular frequency for
//! rates) or strings such as `"0.5 MHz"`, `"50 nm"` or `"1e-10 Torr"`.
//! Ordinary-frequency suffixes (`Hz`, `kHz`, ...) are multiplied by 2π on
//! ingest.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{AMU, TORR};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    /// Angular frequency or rate [rad/s].
    Frequency,
    Pressure,
    Temperature,
    Mass,
    Density,
    Time,
    Angle,
    /// One-sided fractional intensity noise spectrum [1/Hz].
    IntensityPsd,
    /// Position noise spectrum [m^2/Hz].
    PointingPsd,
    Dimensionless,
}

impl Dimension {
    fn si_unit(self) -> &'static str {
        match self {
            Dimension::Length => "m",
            Dimension::Frequency => "rad/s",
            Dimension::Pressure => "Pa",
            Dimension::Temperature => "K",
            Dimension::Mass => "kg",
            Dimension::Density => "kg/m^3",
            Dimension::Time => "s",
            Dimension::Angle => "rad",
            Dimension::IntensityPsd => "1/Hz",
            Dimension::PointingPsd => "m^2/Hz",
            Dimension::Dimensionless => "",
        }
    }

    fn factor(self, unit: &str) -> Option<f64> {
        let f = match (self, unit) {
            (Dimension::Length, "m") => 1.0,
            (Dimension::Length, "mm") => 1e-3,
            (Dimension::Length, "um" | "µm" | "μm") => 1e-6,
            (Dimension::Length, "nm") => 1e-9,
            (Dimension::Length, "pm") => 1e-12,

            (Dimension::Frequency, "rad/s" | "1/s" | "/s") => 1.0,
            (Dimension::Frequency, "krad/s") => 1e3,
            (Dimension::Frequency, "Mrad/s") => 1e6,
            (Dimension::Frequency, "Hz") => 2.0 * PI,
            (Dimension::Frequency, "kHz") => 2.0 * PI * 1e3,
            (Dimension::Frequency, "MHz") => 2.0 * PI * 1e6,
            (Dimension::Frequency, "GHz") => 2.0 * PI * 1e9,

            (Dimension::Pressure, "Pa") => 1.0,
            (Dimension::Pressure, "mbar") => 100.0,
            (Dimension::Pressure, "Torr" | "torr") => TORR,

            (Dimension::Temperature, "K") => 1.0,
            (Dimension::Temperature, "mK") => 1e-3,

            (Dimension::Mass, "kg") => 1.0,
            (Dimension::Mass, "g") => 1e-3,
            (Dimension::Mass, "amu" | "u") => AMU,

            (Dimension::Density, "kg/m3" | "kg/m^3") => 1.0,
            (Dimension::Density, "g/cm3" | "g/cm^3") => 1e3,

            (Dimension::Time, "s") => 1.0,
            (Dimension::Time, "ms") => 1e-3,
            (Dimension::Time, "us" | "µs" | "μs") => 1e-6,
            (Dimension::Time, "ns") => 1e-9,

            (Dimension::Angle, "rad") => 1.0,
            (Dimension::Angle, "pi") => PI,
            (Dimension::Angle, "deg") => PI / 180.0,

            (Dimension::IntensityPsd, "1/Hz" | "/Hz" | "Hz^-1") => 1.0,
            (Dimension::PointingPsd, "m2/Hz" | "m^2/Hz") => 1.0,
            _ => return None,
        };
        Some(f)
    }
}

/// A configuration value as written: a bare number or a number with a unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Number(v)
    }
}

impl From<&str> for Quantity {
    fn from(s: &str) -> Self {
        Quantity::Text(s.to_owned())
    }
}

impl Quantity {
    /// Converts to SI (angular for frequencies). The error string names the
    /// offending unit or number; callers prefix it with the field path.
    pub fn to_si(&self, dim: Dimension) -> Result<f64, String> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(s) => parse_quantity(s, dim),
        }
    }
}

pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            c.is_whitespace()
                || (c.is_alphabetic() && !is_exponent(text, i))
                || c == '/'
                || c == 'µ'
                || c == 'μ'
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse number in {text:?}"))?;
    let unit = unit.trim();
    if unit.is_empty() {
        return Ok(value);
    }
    dim.factor(unit).map(|f| value * f).ok_or_else(|| {
        format!(
            "unknown unit {unit:?} for a quantity in {}",
            match dim.si_unit() {
                "" => "dimensionless units",
                u => u,
            }
        )
    })
}

// 'e'/'E' inside a float literal, e.g. "1e-10".
fn is_exponent(text: &str, i: usize) -> bool {
    let bytes = text.as_bytes();
    if !matches!(bytes[i], b'e' | b'E')
        || i == 0
        || !bytes[i - 1].is_ascii_digit() && bytes[i - 1] != b'.'
    {
        return false;
    }
    match bytes.get(i + 1) {
        Some(b'+' | b'-') => bytes.get(i + 2).is_some_and(u8::is_ascii_digit),
        Some(c) => c.is_ascii_digit(),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hz_suffix_is_converted_to_angular() {
        let w = parse_quantity("0.5 MHz", Dimension::Frequency).unwrap();
        assert!((w - 2.0 * PI * 0.5e6).abs() < 1e-6);
        assert_eq!(
            parse_quantity("5e5 rad/s", Dimension::Frequency).unwrap(),
            5e5
        );
        assert_eq!(parse_quantity("1e3", Dimension::Frequency).unwrap(), 1e3);
    }

    #[test]
    fn pressure_in_torr() {
        let p = parse_quantity("1e-10 Torr", Dimension::Pressure).unwrap();
        assert!((p - 1.333_223_684e-8).abs() < 1e-16);
    }

    #[test]
    fn compact_suffixes() {
        assert!((parse_quantity("50nm", Dimension::Length).unwrap() - 5e-8).abs() < 1e-20);
        assert!((parse_quantity("10 µm", Dimension::Length).unwrap() - 1e-5).abs() < 1e-18);
        assert_eq!(
            parse_quantity("1.96 g/cm3", Dimension::Density).unwrap(),
            1960.0
        );
        assert!((parse_quantity("0.25 pi", Dimension::Angle).unwrap() - PI / 4.0).abs() < 1e-15);
        assert_eq!(
            parse_quantity("1e-14 1/Hz", Dimension::IntensityPsd).unwrap(),
            1e-14
        );
    }

    #[test]
    fn rejects_unknown_unit() {
        let err = parse_quantity("3 furlongs", Dimension::Length).unwrap_err();
        assert!(err.contains("furlongs"));
        assert!(parse_quantity("abc m", Dimension::Length).is_err());
    }
}
