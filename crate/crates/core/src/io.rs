//! Result files: JSON with 12 significant digits and the CSV logs.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::collisions::{CollisionEvent, DetectionRecord};
use crate::params::Axis;
use crate::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Text form of a rounded number, as written to CSV files.
pub fn format_sig(x: f64) -> String {
    let r = round_sig(x);
    let a = r.abs();
    if r == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Rounds every float in a JSON tree.
pub fn round_json(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Serialises, rounds and pretty-prints `value`.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub const EVENT_HEADER: [&str; 6] = ["time", "species", "type", "n1", "n2", "n3"];
pub const DETECTION_HEADER: [&str; 4] = ["axis", "t_start", "duration", "count"];

pub fn write_events(path: &Path, events: &[CollisionEvent]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(EVENT_HEADER)?;
    for e in events {
        w.write_record([
            format_sig(e.time),
            e.species.to_string(),
            e.kind.name().to_string(),
            format_sig(e.kicks[0]),
            format_sig(e.kicks[1]),
            format_sig(e.kicks[2]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_detections(path: &Path, records: &[DetectionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(DETECTION_HEADER)?;
    for r in records {
        w.write_record([
            r.axis.name().to_string(),
            format_sig(r.t_start),
            format_sig(r.duration),
            r.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a detection log, reporting the offending line on any defect.
pub fn read_detections(path: &Path) -> Result<Vec<DetectionRecord>> {
    let name = path.display().to_string();
    let schema = |line: u64, message: String| Error::Schema {
        path: name.clone(),
        line: line as usize,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut records = Vec::new();
    let mut header_seen = false;
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            schema(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if !header_seen {
            let got: Vec<&str> = row.iter().map(str::trim).collect();
            if got != DETECTION_HEADER {
                return Err(schema(
                    line,
                    format!("expected header {}", DETECTION_HEADER.join(",")),
                ));
            }
            header_seen = true;
            continue;
        }
        if row.len() != DETECTION_HEADER.len() {
            return Err(schema(
                line,
                format!("expected 4 fields, found {}", row.len()),
            ));
        }
        let axis: Axis = row[0]
            .trim()
            .parse()
            .map_err(|e: Error| schema(line, e.to_string()))?;
        let number = |i: usize| -> Result<f64> {
            let v: f64 = row[i].trim().parse().map_err(|_| {
                schema(
                    line,
                    format!("{}: not a number: {:?}", DETECTION_HEADER[i], &row[i]),
                )
            })?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(schema(
                    line,
                    format!("{}: must be finite and >= 0", DETECTION_HEADER[i]),
                ));
            }
            Ok(v)
        };
        let t_start = number(1)?;
        let duration = number(2)?;
        let count: u64 = row[3].trim().parse().map_err(|_| {
            schema(
                line,
                format!("count: not a non-negative integer: {:?}", &row[3]),
            )
        })?;
        records.push(DetectionRecord {
            axis,
            t_start,
            duration,
            count,
            merged: false,
        });
    }
    if !header_seen {
        return Err(schema(1, "empty file: missing header".into()));
    }
    Ok(records)
}

/// Writes rows of numbers under a header.
pub fn write_table(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    writeln!(f, "{}", header.join(","))?;
    for r in rows {
        writeln!(f, "{}", r.join(","))?;
    }
    f.flush()?;
    Ok(())
}
