use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::Format;

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Rows as CSV (header from the field names) or as a JSON array.
pub fn rows_to_bytes<T: Serialize>(format: Format, rows: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut buf);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, rows)?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

pub fn write_rows<T: Serialize>(out: Option<&Path>, format: Format, rows: &[T]) -> Result<()> {
    let bytes = rows_to_bytes(format, rows)?;
    let mut w = sink(out)?;
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    let mut w = sink(out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}
