//! Artifact formatting: round-trip-exact floats, CSV assembly, config
//! hashing, filesystem helpers.
//!
//! CSV dialect: comma separators, `.` decimal point, LF line endings, one
//! header row, floats printed with 17 significant digits so parsing them
//! back reproduces the exact bit pattern.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::CliError;

/// 17-significant-digit scientific notation (round-trip exact for f64).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Hex SHA-256 of the canonical resolved-config serialization.
pub fn config_hash(canonical_json: &str) -> String {
    let digest = Sha256::digest(canonical_json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::io(parent.display().to_string(), e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path.display().to_string(), e))
}

/// Assemble CSV text: header plus rows, LF endings.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
