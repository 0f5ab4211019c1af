// SPDX-License-Identifier: MIT OR Apache-2.0

//! Reading return series from CSV files.

use std::path::Path;

use super::CliError;
use crate::types::{log_returns, ReturnSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Price,
    Return,
}

/// A series read from disk with the dates of its observations, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub series: ReturnSeries,
    pub dates: Option<Vec<String>>,
    pub kind: ColumnKind,
    pub dropped: usize,
}

fn classify(name: &str) -> Option<ColumnKind> {
    let n = name.trim().to_ascii_lowercase();
    if n.contains("price") || n == "close" || n == "rate" {
        Some(ColumnKind::Price)
    } else if n.contains("return") {
        Some(ColumnKind::Return)
    } else {
        None
    }
}

/// Reads a `price` or `return` column, with an optional `date` column.
///
/// A headerless single-column file is taken as returns. Rows whose value is
/// empty or not a number, and blank lines, are dropped and counted.
pub fn ingest_csv(path: &Path) -> Result<Ingested, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e.to_string()))?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim_start().starts_with('#')).collect();
    let last = lines.iter().rposition(|l| !l.trim().is_empty()).map_or(0, |i| i + 1);
    let first = lines.iter().position(|l| !l.trim().is_empty()).unwrap_or(0);
    let blank = lines[first..last].iter().filter(|l| l.trim().is_empty()).count();

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let head = match records.next() {
        Some(r) => r.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => return Err(CliError::Input(format!("{}: empty file", path.display()))),
    };

    let header_kinds: Vec<Option<ColumnKind>> = head.iter().map(classify).collect();
    let (value_col, date_col, kind, header_row) = match header_kinds.iter().position(Option::is_some) {
        Some(i) => {
            let date = head
                .iter()
                .position(|h| h.eq_ignore_ascii_case("date"))
                .or_else(|| (head.len() == 2 && i == 1).then_some(0));
            (i, date, header_kinds[i].expect("found"), true)
        }
        None if head.len() == 1 && head[0].parse::<f64>().is_ok() => (0, None, ColumnKind::Return, false),
        None => {
            return Err(CliError::Input(format!(
                "{}: no price or return column in header {:?}",
                path.display(),
                head.iter().collect::<Vec<_>>()
            )))
        }
    };

    let mut values = Vec::new();
    let mut dates = Vec::new();
    let mut dropped = blank;
    let first_row = if header_row { None } else { Some(Ok(head)) };
    for rec in first_row.into_iter().chain(records) {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let parsed = rec
            .get(value_col)
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|v| v.is_finite());
        let parsed = match kind {
            ColumnKind::Price => parsed.filter(|v| *v > 0.0),
            ColumnKind::Return => parsed,
        };
        match parsed {
            Some(v) => {
                values.push(v);
                if let Some(d) = date_col {
                    dates.push(rec.get(d).unwrap_or("").to_string());
                }
            }
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} unusable rows", path.display());
    }
    if values.len() < 2 {
        return Err(CliError::Input(format!(
            "{}: need at least 2 usable rows, found {}",
            path.display(),
            values.len()
        )));
    }
    let (series, dates) = match kind {
        ColumnKind::Price => (log_returns(&values)?, date_col.map(|_| dates[1..].to_vec())),
        ColumnKind::Return => (ReturnSeries::new(values)?, date_col.map(|_| dates)),
    };
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Ingested {
        series: series.with_label(label),
        dates,
        kind,
        dropped,
    })
}
