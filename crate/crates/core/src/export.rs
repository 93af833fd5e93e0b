//! Fixed-format number output shared by the CSV writers.

/// Formats with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// One CSV row of numbers, newline-terminated.
pub fn csv_row(values: &[f64]) -> String {
    let mut row = values
        .iter()
        .map(|&x| fmt_f64(x))
        .collect::<Vec<_>>()
        .join(",");
    row.push('\n');
    row
}
