//! Text output helpers shared by every CSV and manifest writer.

use std::fmt::Write as _;

/// Shortest decimal string that parses back to exactly `x`.
///
/// Plain notation is used for magnitudes in `[1e-4, 1e16)`, scientific
/// notation otherwise. Both forms are round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Writes a CSV with the given header and rows of floats.
pub fn csv_from_rows<'a, I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Parsed numeric CSV: header names and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericCsv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NumericCsv {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Parses a header + float-rows CSV, checking that every row has as many
/// columns as the header.
pub fn parse_numeric_csv(text: &str) -> Result<NumericCsv, String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or("empty CSV")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("line {}: {e}", i + 2)))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!("line {}: {} columns, header has {}", i + 2, row.len(), header.len()));
        }
        rows.push(row);
    }
    Ok(NumericCsv { header, rows })
}
