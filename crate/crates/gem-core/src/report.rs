//! Table and figure emission for the command-line front end. Every figure
//! has a CSV twin holding exactly the plotted numbers; numeric cells carry
//! 12 significant digits so reruns are byte-identical.

pub mod svg;

use crate::error::{Error, Result};
use crate::util::fmt_sig;
use std::io::Write;
use std::path::Path;

/// 12-significant-digit cell for CSV output.
pub fn num(v: f64) -> String {
    fmt_sig(v, 12)
}

/// Quote a field when it would break the row (comma, quote, newline).
pub fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn csv_line(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?);
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let header: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    writeln!(out, "{}", csv_line(&header)).map_err(io_err)?;
    for row in rows {
        writeln!(out, "{}", csv_line(row)).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
