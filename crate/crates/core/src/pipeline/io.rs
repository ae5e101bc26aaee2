use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::record::CorpusRecord;
use crate::error::{ForgeError, Result};
use crate::model::{PretrainExample, RawSchema, Schema};

/// A schema together with the file it came from.
#[derive(Debug, Clone)]
pub struct LoadedSchema {
    pub path: PathBuf,
    pub schema: Schema,
}

fn json_error(path: &Path, e: &serde_json::Error) -> ForgeError {
    ForgeError::Json {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    }
}

/// Every `*.json` file of `dir`, in file-name order.
pub fn ingest_schemas(dir: &Path) -> Result<Vec<LoadedSchema>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| ForgeError::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| ForgeError::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    files.retain(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"));
    files.sort();

    let mut seen: HashMap<String, PathBuf> = HashMap::new();
    let mut out = Vec::with_capacity(files.len());
    for path in files {
        let text = fs::read_to_string(&path).map_err(|e| ForgeError::io(&path, e))?;
        let raw: RawSchema = serde_json::from_str(&text).map_err(|e| json_error(&path, &e))?;
        if let Some(first) = seen.get(&raw.schema_id) {
            return Err(ForgeError::DuplicateSchema {
                schema_id: raw.schema_id,
                first: first.clone(),
                second: path,
            });
        }
        seen.insert(raw.schema_id.clone(), path.clone());
        out.push(LoadedSchema {
            schema: raw.into_schema()?,
            path,
        });
    }
    Ok(out)
}

/// A record that could not be turned into an example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based line in the input file.
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example_id: Option<String>,
    pub reason: String,
}

/// Non-empty lines of a JSONL file with their 1-based line numbers.
fn jsonl_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = fs::File::open(path).map_err(|e| ForgeError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ForgeError::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

/// Parses question-SQL pairs against `schemas`. Bad rows become rejects;
/// only I/O failures are fatal.
pub fn ingest_pairs(
    path: &Path,
    schemas: &BTreeMap<String, Schema>,
) -> Result<(Vec<PretrainExample>, Vec<Reject>)> {
    let (records, mut rejects) = read_records_lenient(path)?;
    let mut examples = Vec::with_capacity(records.len());
    for (line, record) in records {
        match record_to_example(&record, schemas) {
            Ok(ex) => examples.push(ex),
            Err(reason) => rejects.push(Reject {
                line,
                example_id: Some(record.example_id),
                reason,
            }),
        }
    }
    rejects.sort_by_key(|r| r.line);
    Ok((examples, rejects))
}

fn record_to_example(
    record: &CorpusRecord,
    schemas: &BTreeMap<String, Schema>,
) -> std::result::Result<PretrainExample, String> {
    let schema = schemas
        .get(&record.schema_id)
        .ok_or_else(|| format!("unknown schema_id {:?}", record.schema_id))?;
    record.to_example(schema).map_err(|e| e.to_string())
}

/// Records paired with their 1-based line numbers.
pub type NumberedRecords = Vec<(usize, CorpusRecord)>;

/// Records that deserialize, with line numbers, plus rejects for the
/// rows that do not or that repeat an earlier `example_id`.
pub fn read_records_lenient(path: &Path) -> Result<(NumberedRecords, Vec<Reject>)> {
    let mut ids = HashSet::new();
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for (line, text) in jsonl_lines(path)? {
        match serde_json::from_str::<CorpusRecord>(&text) {
            Ok(r) if !ids.insert(r.example_id.clone()) => rejects.push(Reject {
                line,
                reason: format!("duplicate example_id {:?}", r.example_id),
                example_id: Some(r.example_id),
            }),
            Ok(r) => records.push((line, r)),
            Err(e) => rejects.push(Reject {
                line,
                example_id: None,
                reason: format!("malformed record: {e}"),
            }),
        }
    }
    Ok((records, rejects))
}

/// Every line must be a valid record.
pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    jsonl_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            serde_json::from_str(&text).map_err(|e| ForgeError::Json {
                path: path.to_path_buf(),
                line,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// One JSON value per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| ForgeError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| ForgeError::contract(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| ForgeError::io(path, e))?;
    }
    w.flush().map_err(|e| ForgeError::io(path, e))
}

/// Schema registry keyed by id.
pub fn schema_map<'a>(schemas: impl IntoIterator<Item = &'a Schema>) -> BTreeMap<String, Schema> {
    schemas
        .into_iter()
        .map(|s| (s.schema_id.clone(), s.clone()))
        .collect()
}
