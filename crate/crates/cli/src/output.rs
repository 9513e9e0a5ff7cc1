//! CSV and JSON writers with round-trip float formatting.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use holoqd::CMatrix64;
use serde::Serialize;
use serde_json::Value;

/// Shortest-exact scientific notation with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `header` and rows; refuses to emit non-finite values.
pub fn write_csv<'a>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = &'a [f64]>) -> io::Result<()> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for (k, row) in rows.into_iter().enumerate() {
        if row.len() != header.len() {
            return Err(io::Error::new(io::ErrorKind::InvalidData, format!("row {k} has {} columns", row.len())));
        }
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("row {k} of {} holds the non-finite value {bad}", path.display()),
            ));
        }
        let line: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()
}

pub fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// `{"re": [[…]], "im": [[…]]}`, row-major.
pub fn matrix_json(m: &CMatrix64) -> Value {
    let rows = |f: fn(&holoqd::C64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect()).collect()
    };
    serde_json::json!({ "re": rows(|z| z.re), "im": rows(|z| z.im) })
}
