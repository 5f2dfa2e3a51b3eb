//! Output rendering: stable 12-significant-digit float formatting, CSV
//! (UTF-8, header row, comma separators, LF line endings), and pretty
//! JSON. All rendering is deterministic so repeated runs with the same
//! inputs produce byte-identical files.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::commands::CliError;

/// Significant digits used for every float column.
pub const FLOAT_DIGITS: usize = 12;

/// Formats `value` with `digits` significant digits, trimming trailing
/// zeros: plain decimal notation while the exponent is moderate, and
/// `<mantissa>e<exp>` outside that window.
pub fn format_sig(value: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if value == 0.0 {
        return "0".to_string();
    }
    if value.is_nan() {
        return "nan".to_string();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, value);
    let (_, exp) = sci.split_once('e').expect("{:e} always contains an exponent");
    let exp: i32 = exp.parse().expect("decimal exponent");
    if exp >= -4 && exp < digits as i32 {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{value:.decimals$}"))
    } else {
        let (mantissa, _) = sci.split_once('e').expect("checked above");
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

/// Shorthand for the standard column precision.
pub fn fmt(value: f64) -> String {
    format_sig(value, FLOAT_DIGITS)
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// A rendered table: header plus rows of already-formatted cells.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.header.len());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Serializes a JSON document with stable formatting (pretty, sorted
/// object keys, trailing newline).
pub fn to_json_string(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("in-memory JSON serialization");
    text.push('\n');
    text
}

/// Writes `content` to the given path, or to stdout when no path is set.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
    }
}
