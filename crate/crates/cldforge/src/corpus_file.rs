//! Reading and writing corpus files.
//!
//! ```json
//! {"version": 1, "items": [{"id": "...", "dh": "...", "digraph": "...",
//!   "source": "...", "expected_loops": [[2, "Reinforcing"]],
//!   "low_confidence_links": [["a", "b"]]}]}
//! ```
//!
//! `expected_loops` and `low_confidence_links` are optional. Digraphs are
//! parsed in strict mode.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use cldforge_core::{
    emit_digraph, normalize_name, parse_digraph, Corpus, CorpusError, CorpusItem, LoopKind,
    ParseMode,
};
use serde_json::{json, Map, Value};
use thiserror::Error;

pub const FORMAT_VERSION: u64 = 1;

const ITEM_FIELDS: [&str; 6] = [
    "id",
    "dh",
    "digraph",
    "source",
    "expected_loops",
    "low_confidence_links",
];

#[derive(Debug, Error)]
pub enum CorpusFileError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("schema error{}{}: {message}",
        item.as_ref().map(|i| format!(" in item {i:?}")).unwrap_or_default(),
        field.as_ref().map(|f| format!(", field {f:?}")).unwrap_or_default())]
    Schema {
        item: Option<String>,
        field: Option<String>,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(#[from] CorpusError),
}

fn schema(item: Option<&str>, field: Option<&str>, message: impl Into<String>) -> CorpusFileError {
    CorpusFileError::Schema {
        item: item.map(str::to_string),
        field: field.map(str::to_string),
        message: message.into(),
    }
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusFileError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&text)
}

/// Parses corpus file text.
pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusFileError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| schema(None, None, format!("invalid JSON: {e}")))?;
    let Value::Object(root) = root else {
        return Err(schema(None, None, "top level must be an object"));
    };
    if let Some(key) = root.keys().find(|k| *k != "version" && *k != "items") {
        return Err(schema(None, Some(key), "unknown top-level key"));
    }
    match root.get("version") {
        Some(v) if v.as_u64() == Some(FORMAT_VERSION) => {}
        Some(v) => {
            return Err(schema(
                None,
                Some("version"),
                format!("unsupported version {v}, expected {FORMAT_VERSION}"),
            ))
        }
        None => return Err(schema(None, Some("version"), "missing")),
    }
    let items = match root.get("items") {
        Some(Value::Array(items)) => items,
        Some(_) => return Err(schema(None, Some("items"), "must be an array")),
        None => return Err(schema(None, Some("items"), "missing")),
    };

    let mut parsed = Vec::with_capacity(items.len());
    for (index, value) in items.iter().enumerate() {
        parsed.push(parse_item(index, value)?);
    }
    Ok(Corpus::new(parsed)?)
}

fn parse_item(index: usize, value: &Value) -> Result<CorpusItem, CorpusFileError> {
    let Value::Object(obj) = value else {
        return Err(schema(Some(&format!("#{index}")), None, "item must be an object"));
    };
    let label = match obj.get("id") {
        Some(Value::String(id)) => id.clone(),
        _ => format!("#{index}"),
    };
    let label = label.as_str();
    if let Some(key) = obj.keys().find(|k| !ITEM_FIELDS.contains(&k.as_str())) {
        return Err(schema(Some(label), Some(key), "unknown field"));
    }

    let id = required_str(obj, label, "id")?;
    let dh = required_str(obj, label, "dh")?;
    let digraph = required_str(obj, label, "digraph")?;
    let source = required_str(obj, label, "source")?;

    let ground_truth = parse_digraph(digraph, ParseMode::Strict)
        .map_err(|e| CorpusError::Invalid {
            id: id.to_string(),
            message: format!("ground truth digraph: {e}"),
        })?
        .diagram;

    let expected_loops = match obj.get("expected_loops") {
        None | Some(Value::Null) => None,
        Some(Value::Array(entries)) => Some(
            entries
                .iter()
                .map(|e| loop_entry(e).ok_or_else(|| {
                    schema(
                        Some(label),
                        Some("expected_loops"),
                        "entries are [length, \"Reinforcing\" | \"Balancing\"]",
                    )
                }))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Some(_) => return Err(schema(Some(label), Some("expected_loops"), "must be an array")),
    };

    let low_confidence_links = match obj.get("low_confidence_links") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(entries)) => entries
            .iter()
            .map(|e| {
                string_pair(e).ok_or_else(|| {
                    schema(
                        Some(label),
                        Some("low_confidence_links"),
                        "entries are [source, target] name pairs",
                    )
                })
            })
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => {
            return Err(schema(
                Some(label),
                Some("low_confidence_links"),
                "must be an array",
            ))
        }
    };

    Ok(CorpusItem {
        id: id.to_string(),
        dh: dh.to_string(),
        ground_truth,
        source: source.to_string(),
        expected_loops,
        low_confidence_links,
    })
}

fn required_str<'a>(
    obj: &'a Map<String, Value>,
    item: &str,
    field: &str,
) -> Result<&'a str, CorpusFileError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(schema(Some(item), Some(field), "must be a string")),
        None => Err(schema(Some(item), Some(field), "missing")),
    }
}

fn loop_entry(value: &Value) -> Option<(usize, LoopKind)> {
    let [length, kind] = value.as_array()?.as_slice() else {
        return None;
    };
    let length = usize::try_from(length.as_u64()?).ok()?;
    let kind = match kind.as_str()? {
        "Reinforcing" => LoopKind::Reinforcing,
        "Balancing" => LoopKind::Balancing,
        _ => return None,
    };
    Some((length, kind))
}

fn string_pair(value: &Value) -> Option<(String, String)> {
    let [s, t] = value.as_array()?.as_slice() else {
        return None;
    };
    Some((normalize_name(s.as_str()?), normalize_name(t.as_str()?)))
}

/// The corpus in file form, ground truths as canonical digraph text.
pub fn corpus_to_json(corpus: &Corpus) -> Value {
    let items: Vec<Value> = corpus
        .items()
        .iter()
        .map(|item| {
            let mut obj = Map::new();
            obj.insert("id".into(), json!(item.id));
            obj.insert("dh".into(), json!(item.dh));
            obj.insert("digraph".into(), json!(emit_digraph(&item.ground_truth)));
            obj.insert("source".into(), json!(item.source));
            if let Some(loops) = &item.expected_loops {
                obj.insert(
                    "expected_loops".into(),
                    Value::Array(loops.iter().map(|(n, k)| json!([n, k])).collect()),
                );
            }
            if !item.low_confidence_links.is_empty() {
                obj.insert(
                    "low_confidence_links".into(),
                    Value::Array(
                        item.low_confidence_links
                            .iter()
                            .map(|(s, t)| json!([s, t]))
                            .collect(),
                    ),
                );
            }
            Value::Object(obj)
        })
        .collect();
    json!({ "version": FORMAT_VERSION, "items": items })
}

/// Pretty-printed file text with a trailing newline.
pub fn corpus_to_string(corpus: &Corpus) -> String {
    let mut text = serde_json::to_string_pretty(&corpus_to_json(corpus))
        .expect("corpus JSON is always serializable");
    text.push('\n');
    text
}

pub fn save_corpus(path: &Path, corpus: &Corpus) -> io::Result<()> {
    fs::write(path, corpus_to_string(corpus))
}
