//! Small file-system and text-format helpers shared by the persistence
//! modules: atomic whole-file writes, 17-significant-digit float rendering,
//! and line-oriented parsing with positions attached to every complaint.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{HarnessError, Result};

/// Writes `contents` to `path` through a sibling temporary file and a rename,
/// so readers never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp{}",
            path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default(),
            std::process::id()
        )),
        None => Path::new(&format!(".adi.tmp{}", std::process::id())).to_path_buf(),
    };
    let wrap = |source: std::io::Error| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    fs::write(&tmp, contents).map_err(wrap)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        wrap(e)
    })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Renders a float with 17 significant digits, enough for the decimal text
/// to parse back to the identical bit pattern.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Appends comma-separated 17-digit floats to `out`.
pub fn push_f64_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}", fmt_f64(*v));
    }
    out.push('\n');
}

/// Parses one float, reporting the offending token and line on failure.
pub fn parse_f64(token: &str, path: &str, line: usize) -> Result<f64> {
    token.trim().parse::<f64>().map_err(|_| HarnessError::Parse {
        path: path.to_string(),
        line,
        message: format!("expected a number, found {token:?}"),
    })
}

pub fn parse_usize(token: &str, path: &str, line: usize) -> Result<usize> {
    token.trim().parse::<usize>().map_err(|_| HarnessError::Parse {
        path: path.to_string(),
        line,
        message: format!("expected a non-negative integer, found {token:?}"),
    })
}

pub fn parse_u64(token: &str, path: &str, line: usize) -> Result<u64> {
    token.trim().parse::<u64>().map_err(|_| HarnessError::Parse {
        path: path.to_string(),
        line,
        message: format!("expected a non-negative integer, found {token:?}"),
    })
}

pub fn parse_u32(token: &str, path: &str, line: usize) -> Result<u32> {
    token.trim().parse::<u32>().map_err(|_| HarnessError::Parse {
        path: path.to_string(),
        line,
        message: format!("expected a transducer id, found {token:?}"),
    })
}

/// Splits a `key = value` line. Lines without an equals sign are rejected.
pub fn split_key_value<'a>(text: &'a str, path: &str, line: usize) -> Result<(&'a str, &'a str)> {
    match text.split_once('=') {
        Some((k, v)) => Ok((k.trim(), v.trim())),
        None => Err(HarnessError::Parse {
            path: path.to_string(),
            line,
            message: format!("expected `key = value`, found {text:?}"),
        }),
    }
}
