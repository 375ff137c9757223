//! Machine-readable output: key-sorted JSON, RFC-4180 CSV, content hashes.
//!
//! Identical inputs must produce byte-identical output, so everything routes
//! through key-sorted JSON values and explicit row ordering; floats print in
//! shortest round-trip form.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Serialize as pretty JSON with lexicographically sorted object keys and a
/// trailing newline.
pub fn to_sorted_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    // serde_json::Value objects are BTreeMap-backed, which sorts the keys.
    let value = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

/// Assemble an RFC-4180 CSV document with LF line endings.
pub fn csv_document<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = String::new();
    push_row(&mut out, header.iter().map(|s| s.to_string()));
    for row in rows {
        push_row(&mut out, row.into_iter());
    }
    out
}

fn push_row(out: &mut String, fields: impl Iterator<Item = String>) {
    let mut first = true;
    for field in fields {
        if !first {
            out.push(',');
        }
        first = false;
        if field.contains([',', '"', '\n', '\r']) {
            out.push('"');
            out.push_str(&field.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(&field);
        }
    }
    out.push('\n');
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}
