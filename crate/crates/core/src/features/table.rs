//! Comma-separated features table, one row per sample.

use std::io::{Read, Write};

use super::SampleRecord;
use crate::interchange::Perspective;

pub const FEATURES_HEADER: [&str; 6] = [
    "sample_id",
    "t_seconds",
    "area_diff_px2",
    "dist_diff_depth",
    "speed_kmh",
    "perspective",
];

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("features header must be {expected:?}, got {found:?}")]
    Header {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Writes records with plain decimal numbers (`f64` display form, which
/// round-trips exactly and never uses exponents or grouping).
pub fn write_features_table<W: Write>(records: &[SampleRecord], out: W) -> Result<(), TableError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(FEATURES_HEADER)?;
    for r in records {
        writer.write_record([
            r.sample_id.clone(),
            r.t.to_string(),
            r.area_diff.to_string(),
            r.dist_diff.to_string(),
            r.speed_kmh.map(|s| s.to_string()).unwrap_or_default(),
            r.perspective.as_str().to_owned(),
        ])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_features_table<R: Read>(input: R) -> Result<Vec<SampleRecord>, TableError> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != FEATURES_HEADER {
        return Err(TableError::Header {
            expected: FEATURES_HEADER.iter().map(|s| s.to_string()).collect(),
            found: header,
        });
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let bad = |message: String| TableError::Row {
            row: i + 1,
            message,
        };
        let num = |col: usize| -> Result<f64, TableError> {
            row[col]
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("{}: {e}", FEATURES_HEADER[col])))
        };
        let speed = match row[4].trim() {
            "" => None,
            _ => Some(num(4)?),
        };
        let record = SampleRecord {
            sample_id: row[0].to_owned(),
            t: num(1)?,
            area_diff: num(2)?,
            dist_diff: num(3)?,
            speed_kmh: speed,
            perspective: row[5].trim().parse::<Perspective>().map_err(bad)?,
        };
        if !record.is_valid() {
            return Err(bad(format!(
                "invalid values for sample {:?} (need t > 0 and finite features)",
                record.sample_id
            )));
        }
        records.push(record);
    }
    Ok(records)
}
