//! Shared file formats: the header record every output file starts with and
//! the distractor-suggestions file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// First record of every JSON-lines output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub kind: String,
    pub schema_version: u32,
    pub tool: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Value>,
}

impl Header {
    pub fn new(tool: &str, seed: u64) -> Self {
        Header {
            kind: "header".to_string(),
            schema_version: SCHEMA_VERSION,
            tool: tool.to_string(),
            seed,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.params.insert(
            key.to_string(),
            serde_json::to_value(value).expect("header params serialize"),
        );
        self
    }
}

pub fn write_jsonl_record<W: Write, T: Serialize>(out: &mut W, rec: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, rec)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn is_header(v: &Value) -> bool {
    v.get("kind").and_then(Value::as_str) == Some("header")
}

/// Reads a JSON-lines file, returning its header (if any) and the remaining
/// records.
pub fn read_jsonl<R: BufRead, T: for<'de> Deserialize<'de>>(
    reader: R,
    context: &str,
) -> Result<(Option<Header>, Vec<T>)> {
    let mut header = None;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value =
            serde_json::from_str(&line).map_err(|e| Error::parse(context, i + 1, e.to_string()))?;
        if is_header(&v) {
            header = Some(
                serde_json::from_value(v).map_err(|e| Error::parse(context, i + 1, e.to_string()))?,
            );
            continue;
        }
        records.push(
            serde_json::from_value(v).map_err(|e| Error::parse(context, i + 1, e.to_string()))?,
        );
    }
    Ok((header, records))
}

/// One line of a suggestions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionRecord {
    pub mcq_id: String,
    pub distractors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_reasons: Option<Vec<String>>,
}

impl SuggestionRecord {
    pub fn new(mcq_id: impl Into<String>, distractors: Vec<String>) -> Self {
        SuggestionRecord {
            mcq_id: mcq_id.into(),
            distractors,
            scores: None,
            stop_reasons: None,
        }
    }
}

pub fn write_suggestions<W: Write>(mut out: W, header: &Header, records: &[SuggestionRecord]) -> Result<()> {
    write_jsonl_record(&mut out, header)?;
    for r in records {
        write_jsonl_record(&mut out, r)?;
    }
    Ok(())
}

pub fn read_suggestions(path: impl AsRef<Path>) -> Result<(Option<Header>, Vec<SuggestionRecord>)> {
    let path = path.as_ref();
    read_jsonl(BufReader::new(File::open(path)?), &path.display().to_string())
}
