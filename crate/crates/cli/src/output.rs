//! Deterministic output writing.
//!
//! JSON is the canonical format. Every float is printed with 17 significant
//! digits in scientific notation, so identical runs produce byte-identical
//! files; line endings are LF.

use serde::Serialize;
use std::io::{self, Write};
use std::path::Path;

/// Compact JSON formatter with fixed-width float formatting.
struct Fmt17;

impl serde_json::ser::Formatter for Fmt17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> io::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fmt17);
    value
        .serialize(&mut ser)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

/// Fixed 17-significant-digit rendering for CSV cells.
pub fn fmt17(value: f64) -> String {
    format!("{value:.16e}")
}

/// Write to the path, or stdout when none is given.
pub fn emit(out: Option<&Path>, payload: &str) -> io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, payload),
        None => io::stdout().write_all(payload.as_bytes()),
    }
}
