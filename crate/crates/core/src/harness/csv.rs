//! CSV output for result rows.
//!
//! Schema: `experiment,detector,snr_db,trials,errors,rate,seconds,seed`,
//! one row per (detector, SNR) point, sorted by (detector, snr). The `rate`
//! column is display-only (at least six significant digits); parsers
//! recompute it from `errors / trials`, which round-trips exactly.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::mc::ResultRow;

pub const CSV_HEADER: &str = "experiment,detector,snr_db,trials,errors,rate,seconds,seed";

/// Formats a rate with at least six significant digits: fixed-point for
/// values >= 0.1 (e.g. `1/3 -> 0.333333`), scientific below.
pub fn format_rate(rate: f64) -> String {
    if rate == 0.0 {
        "0.000000".to_string()
    } else if rate >= 0.1 {
        format!("{rate:.6}")
    } else {
        format!("{rate:.5e}")
    }
}

fn format_row(row: &ResultRow) -> String {
    format!(
        "{},{},{},{},{},{},{:.3},{}",
        row.experiment,
        row.detector,
        row.snr_db,
        row.trials,
        row.errors,
        format_rate(row.rate),
        row.seconds,
        row.seed
    )
}

/// Renders rows (sorted by detector then SNR) to CSV text. All rows must
/// share one experiment id.
pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    if let Some(first) = rows.first() {
        if rows.iter().any(|r| r.experiment != first.experiment) {
            return Err(Error::InvalidInput(
                "rows from different experiments in one file".into(),
            ));
        }
    }
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.detector
            .cmp(&b.detector)
            .then(a.snr_db.partial_cmp(&b.snr_db).expect("finite snr"))
    });
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in sorted {
        out.push_str(&format_row(row));
        out.push('\n');
    }
    Ok(out)
}

/// Writes the CSV file for one experiment.
pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let text = rows_to_csv(rows)?;
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Parses CSV text produced by [`rows_to_csv`]. The rate column is checked
/// for plausibility but the returned rate is recomputed from the counts.
pub fn parse_result_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => {
            return Err(Error::Malformed(format!(
                "bad csv header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Malformed(format!(
                "line {}: expected 8 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Malformed(format!("line {}: bad {what} `{s}`", lineno + 2)))
        };
        let parse_u64 = |s: &str, what: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| Error::Malformed(format!("line {}: bad {what} `{s}`", lineno + 2)))
        };
        let trials = parse_u64(fields[3], "trials")?;
        let errors = parse_u64(fields[4], "errors")?;
        if trials == 0 || errors > trials {
            return Err(Error::Malformed(format!(
                "line {}: inconsistent counts {errors}/{trials}",
                lineno + 2
            )));
        }
        // Validate the display rate against the counts.
        let shown_rate = parse_f64(fields[5], "rate")?;
        let rate = errors as f64 / trials as f64;
        if (shown_rate - rate).abs() > 1e-4 * rate.max(1e-12) + 1e-9 {
            return Err(Error::Malformed(format!(
                "line {}: rate {shown_rate} does not match {errors}/{trials}",
                lineno + 2
            )));
        }
        rows.push(ResultRow {
            experiment: fields[0].to_string(),
            detector: fields[1].to_string(),
            snr_db: parse_f64(fields[2], "snr")?,
            trials,
            errors,
            rate,
            seconds: parse_f64(fields[6], "seconds")?,
            seed: parse_u64(fields[7], "seed")?,
        });
    }
    Ok(rows)
}
