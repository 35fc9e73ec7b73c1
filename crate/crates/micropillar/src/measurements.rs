//! Measured Q(d) files: header `diameter_um,q,series`, one row per point.

use std::path::Path;

use micropillar_core::loss_budget::QMeasurement;

use crate::FormatError;

/// A measurement with the file line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub line: usize,
    pub point: QMeasurement,
}

// The reader's own line counter skips comment lines, and a record's byte
// offset points at any comments preceding it.
fn line_of(text: &str, p: &csv::Position) -> usize {
    let end = (p.byte() as usize).min(text.len());
    let line = text.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1;
    let skipped = text[end..]
        .lines()
        .take_while(|l| l.trim_start().starts_with('#'))
        .count();
    line + skipped
}

pub fn parse(text: &str, source_name: &str) -> Result<Vec<Row>, FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| FormatError::new(source_name, 1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["diameter_um", "q", "series"] {
        return Err(FormatError::new(
            source_name,
            1,
            "header must be 'diameter_um,q,series'",
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| line_of(text, p));
            FormatError::new(source_name, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| line_of(text, p));
        let bad = |m: String| FormatError::new(source_name, line, m);
        let number = |k: usize, name: &str| {
            record[k]
                .parse::<f64>()
                .map_err(|_| bad(format!("{name} '{}' is not a number", &record[k])))
        };
        let (d, q) = (number(0, "diameter_um")?, number(1, "q")?);
        if record[2].is_empty() {
            return Err(bad("empty series label".into()));
        }
        let point = QMeasurement::new(d, q, &record[2]).map_err(|e| bad(e.to_string()))?;
        rows.push(Row { line, point });
    }
    Ok(rows)
}

pub fn load(path: &Path) -> anyhow::Result<Vec<Row>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read measurements {}: {e}", path.display()))?;
    Ok(parse(&text, &path.display().to_string())?)
}
