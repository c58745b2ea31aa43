//! Line-delimited JSON files with a versioned header line.
//!
//! Line 1 is a JSON object carrying at least `"schema"`; every following
//! non-empty line is one record. Floats are written with round-trip
//! precision, so a read after a write reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

pub fn write_jsonl<W, H, R>(mut out: W, header: &H, records: &[R]) -> Result<()>
where
    W: Write,
    H: Serialize,
    R: Serialize,
{
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_jsonl_file<H: Serialize, R: Serialize>(path: impl AsRef<Path>, header: &H, records: &[R]) -> Result<()> {
    write_jsonl(BufWriter::new(File::create(path)?), header, records)
}

/// Reads a header line tagged with `schema` followed by records.
pub fn read_jsonl<H, R>(input: impl BufRead, schema: &str) -> Result<(H, Vec<R>)>
where
    H: DeserializeOwned,
    R: DeserializeOwned,
{
    let mut lines = input.lines();
    let first = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::SchemaMismatch("file is empty, expected a header line".into())),
    };
    let value: serde_json::Value = serde_json::from_str(&first)
        .map_err(|_| Error::SchemaMismatch(format!("first line is not a {schema} header")))?;
    match value.get("schema").and_then(|s| s.as_str()) {
        Some(s) if s == schema => {}
        Some(s) => {
            return Err(Error::SchemaMismatch(format!("expected {schema}, found {s}")));
        }
        None => {
            return Err(Error::SchemaMismatch(format!(
                "header line has no schema field, expected {schema}"
            )));
        }
    }
    let header = serde_json::from_value(value).map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;

    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?);
    }
    Ok((header, records))
}

pub fn read_jsonl_file<H: DeserializeOwned, R: DeserializeOwned>(
    path: impl AsRef<Path>,
    schema: &str,
) -> Result<(H, Vec<R>)> {
    read_jsonl(BufReader::new(File::open(path)?), schema)
}
