//! JSON-lines readers and writers for corpora, queries and training data.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{InstructedQuery, Passage, TrainInstance};

fn schema_error(line: usize, err: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = err.path().to_string();
    let inner = err.into_inner();
    let message = inner.to_string();
    // serde reports missing fields against the parent object
    let field = match message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split('`').next())
    {
        Some(name) if path == "." => name.to_string(),
        Some(name) => format!("{path}.{name}"),
        None => path,
    };
    Error::Schema {
        line,
        field,
        message,
    }
}

/// Deserializes one JSON value per non-blank line, reporting the failing
/// line and field path.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut de = serde_json::Deserializer::from_str(&line);
        let value = serde_path_to_error::deserialize(&mut de).map_err(|e| schema_error(idx + 1, e))?;
        de.end().map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut writer: W) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<Passage>> {
    let passages: Vec<Passage> = read_jsonl(reader)?;
    let mut seen = HashSet::with_capacity(passages.len());
    for (i, p) in passages.iter().enumerate() {
        // blank lines are skipped, so report the ordinal of the record
        if p.doc_id.is_empty() {
            return Err(Error::Schema {
                line: i + 1,
                field: "doc_id".into(),
                message: "empty doc_id".into(),
            });
        }
        if !seen.insert(p.doc_id.as_str()) {
            return Err(Error::Schema {
                line: i + 1,
                field: "doc_id".into(),
                message: format!("duplicate doc_id `{}`", p.doc_id),
            });
        }
    }
    Ok(passages)
}

pub fn parse_queries<R: BufRead>(reader: R) -> Result<Vec<InstructedQuery>> {
    let queries: Vec<InstructedQuery> = read_jsonl(reader)?;
    for (i, q) in queries.iter().enumerate() {
        q.validate().map_err(|e| Error::Schema {
            line: i + 1,
            field: "query".into(),
            message: e.to_string(),
        })?;
    }
    Ok(queries)
}

pub fn parse_train<R: BufRead>(reader: R) -> Result<Vec<TrainInstance>> {
    let instances: Vec<TrainInstance> = read_jsonl(reader)?;
    for (i, inst) in instances.iter().enumerate() {
        inst.validate().map_err(|e| Error::Schema {
            line: i + 1,
            field: "negatives".into(),
            message: e.to_string(),
        })?;
    }
    Ok(instances)
}

pub fn write_train<W: Write>(instances: &[TrainInstance], writer: W) -> Result<()> {
    write_jsonl(instances, writer)
}
