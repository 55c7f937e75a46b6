//! Deterministic text formatting for CSV output.
//!
//! All floating-point values are printed with 17 significant digits
//! (`{:.16e}`), enough to round-trip any f64, so identical runs produce
//! byte-identical files.

/// Format with 17 significant digits in scientific notation.
pub fn format_g17(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Assemble a CSV document from a header and pre-formatted rows.
pub fn csv_document(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
