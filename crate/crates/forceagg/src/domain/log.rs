//! Report log reading and writing.
//!
//! The native format is JSON lines, one report object per line:
//!
//! ```text
//! {"from":"obs1","name":"v3","position":{"x":120.0,"y":-40.5},"time":12.5,"classification":"tank","orientation":1.57}
//! ```
//!
//! A comma-separated variant with the same slots is also accepted
//! (`from,name,x,y,time,classification,orientation`; empty name = none).
//! The format is detected per line, so either works without flags.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{ClassificationTree, DomainError, Position, Report};
use crate::float::Float;

/// Parse a report log, validating every record against the tree.
pub fn parse_report_log<F, R>(
    reader: R,
    tree: &ClassificationTree,
) -> Result<Vec<Report<F>>, DomainError>
where
    F: Float + DeserializeOwned,
    R: BufRead,
{
    let mut reports = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let report = if trimmed.starts_with('{') {
            parse_json_line(trimmed, line_no)?
        } else {
            parse_csv_line(trimmed, line_no)?
        };
        validate(&report, tree, line_no)?;
        reports.push(report);
    }
    Ok(reports)
}

/// Write reports as JSON lines, one record per line.
pub fn serialize_report_log<F, W>(reports: &[Report<F>], mut writer: W) -> Result<(), DomainError>
where
    F: Float + Serialize,
    W: Write,
{
    for report in reports {
        serde_json::to_writer(&mut writer, report)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

fn parse_json_line<F>(line: &str, line_no: usize) -> Result<Report<F>, DomainError>
where
    F: Float + DeserializeOwned,
{
    let raw: Report<F> =
        serde_json::from_str(line).map_err(|e| DomainError::MalformedRecord {
            line: line_no,
            field: "record".into(),
            message: e.to_string(),
        })?;
    // Re-run the constructor so the orientation normalization invariant holds
    // for hand-written logs too.
    Ok(Report::new(
        raw.from,
        raw.name,
        raw.position,
        raw.time,
        raw.classification,
        raw.orientation,
    ))
}

fn parse_csv_line<F: Float>(line: &str, line_no: usize) -> Result<Report<F>, DomainError> {
    const FIELDS: [&str; 7] = [
        "from",
        "name",
        "position.x",
        "position.y",
        "time",
        "classification",
        "orientation",
    ];
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    if cols.len() != FIELDS.len() {
        return Err(DomainError::MalformedRecord {
            line: line_no,
            field: "record".into(),
            message: format!("expected {} comma-separated fields, got {}", FIELDS.len(), cols.len()),
        });
    }
    let num = |i: usize| -> Result<F, DomainError> {
        cols[i]
            .parse::<f64>()
            .map(F::real)
            .map_err(|e| DomainError::MalformedRecord {
                line: line_no,
                field: FIELDS[i].into(),
                message: e.to_string(),
            })
    };
    let name = if cols[1].is_empty() {
        None
    } else {
        Some(cols[1].to_owned())
    };
    Ok(Report::new(
        cols[0],
        name,
        Position::new(num(2)?, num(3)?),
        num(4)?,
        cols[5].into(),
        num(6)?,
    ))
}

fn validate<F: Float>(
    report: &Report<F>,
    tree: &ClassificationTree,
    line_no: usize,
) -> Result<(), DomainError> {
    let bad = |field: &str, message: String| DomainError::MalformedRecord {
        line: line_no,
        field: field.into(),
        message,
    };
    if !report.position.x.is_finite() || !report.position.y.is_finite() {
        return Err(bad("position", "coordinates must be finite".into()));
    }
    if !report.time.is_finite() || report.time < F::zero() {
        return Err(bad("time", format!("must be >= 0, got {}", report.time)));
    }
    if !report.orientation.is_finite() {
        return Err(bad("orientation", "must be finite".into()));
    }
    if !tree.contains(&report.classification) {
        return Err(DomainError::UnknownClass(report.classification.clone()));
    }
    Ok(())
}
