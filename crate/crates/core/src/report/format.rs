//! Number and cell formatting shared by CSV and Markdown output.

use crate::error::{Error, Result};
use crate::stats::CellOutcome;

/// Marker for cells with no value.
pub const MISSING: &str = "—";

/// Shortest decimal that parses back to the same `f64`.
pub fn raw(v: f64) -> String {
    format!("{v}")
}

pub fn raw_opt(v: Option<f64>) -> String {
    v.map(raw).unwrap_or_default()
}

/// Fixed decimals without a negative sign on zero.
pub fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn fixed_opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "N/A".to_string(), |v| fixed(v, decimals))
}

/// Two-decimal rho with `*` when significant, bold when also at least
/// moderately strong; [`MISSING`] when the cell could not be computed.
pub fn rho_cell(outcome: &CellOutcome) -> String {
    match outcome.result() {
        Some(r) => {
            let mut s = fixed(r.rho, 2);
            if r.significant {
                s.push('*');
            }
            if r.is_strong() {
                s = format!("**{s}**");
            }
            s
        }
        None => MISSING.to_string(),
    }
}

pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Output(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Output(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Output(e.to_string()))
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

pub fn md_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "| {} |\n",
        header.iter().map(|h| md_escape(h)).collect::<Vec<_>>().join(" | ")
    ));
    out.push_str(&format!("|{}\n", " --- |".repeat(header.len())));
    for row in rows {
        out.push_str(&format!(
            "| {} |\n",
            row.iter().map(|c| md_escape(c)).collect::<Vec<_>>().join(" | ")
        ));
    }
    out
}
