//! Message ingestion, labeled datasets, and deterministic train/test splits.
//!
//! Two file formats are supported: the Telegram export JSON documented in the
//! README (top-level `name` plus a `messages` array whose `text` is either a
//! string or an array of text runs), and a labeled CSV with the header
//! `content,date,group,class`. CSV files carry no message ids, so the loader
//! assigns 1-based row numbers as ids.

use crate::error::{Error, Result};
use crate::numerics::Prng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeSet;

/// Class label 0 for politics, 1 for cybersecurity.
pub const CLASS_POLITICS: u8 = 0;
/// Class label 1 for cybersecurity.
pub const CLASS_CYBER: u8 = 1;

/// One Telegram post.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub content: String,
    /// ISO-8601 timestamp, kept verbatim from the source file.
    pub date: String,
    /// Source channel name.
    pub group: String,
    /// 0 = politics, 1 = cybersecurity; `None` for unlabeled messages.
    pub label: Option<u8>,
}

/// A corpus in which every message carries a binary label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    messages: Vec<Message>,
    /// Counts for classes 0 and 1, in that order.
    class_counts: [usize; 2],
}

impl LabeledDataset {
    /// Build a dataset, enforcing the message invariants: every message is
    /// labeled 0 or 1, has non-empty trimmed content, and a unique id.
    pub fn new(messages: Vec<Message>) -> Result<Self> {
        let mut class_counts = [0usize; 2];
        let mut seen = BTreeSet::new();
        for m in &messages {
            match m.label {
                Some(0) => class_counts[0] += 1,
                Some(1) => class_counts[1] += 1,
                Some(other) => {
                    return Err(Error::Dataset(format!(
                        "message `{}` has label {other}, expected 0 or 1",
                        m.id
                    )))
                }
                None => {
                    return Err(Error::Dataset(format!("message `{}` is unlabeled", m.id)))
                }
            }
            if m.content.trim().is_empty() {
                return Err(Error::Dataset(format!("message `{}` has empty content", m.id)));
            }
            if !seen.insert(m.id.as_str()) {
                return Err(Error::Dataset(format!("duplicate message id `{}`", m.id)));
            }
        }
        Ok(LabeledDataset {
            messages,
            class_counts,
        })
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn class_counts(&self) -> [usize; 2] {
        self.class_counts
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Append another dataset. Duplicate ids are rejected rather than
    /// deduplicated, keeping corpus provenance auditable.
    pub fn merge(self, other: LabeledDataset) -> Result<Self> {
        let mut messages = self.messages;
        messages.extend(other.messages);
        LabeledDataset::new(messages)
    }

    /// Rows compare equal ignoring ids. CSV files carry no ids, so this is
    /// the equality the CSV round trip preserves.
    pub fn content_eq(&self, other: &LabeledDataset) -> bool {
        self.messages.len() == other.messages.len()
            && self.messages.iter().zip(&other.messages).all(|(a, b)| {
                a.content == b.content && a.date == b.date && a.group == b.group && a.label == b.label
            })
    }

    /// Serialize to the labeled CSV format (`content,date,group,class`).
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["content", "date", "group", "class"])
            .map_err(|e| Error::Format(e.to_string()))?;
        for m in &self.messages {
            let class = m.label.expect("labeled dataset").to_string();
            writer
                .write_record([m.content.as_str(), m.date.as_str(), m.group.as_str(), &class])
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    /// Deterministic train/test split. `|train| = floor(train_fraction * N)`
    /// and the permutation comes from a Fisher–Yates shuffle driven by
    /// SplitMix64 seeded with `spec.seed`, so identical inputs always give
    /// identical splits.
    pub fn split(&self, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
        spec.validate()?;
        let n = self.messages.len();
        if n < 2 {
            return Err(Error::Dataset(format!(
                "cannot split a dataset of {n} messages"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = Prng::new(spec.seed);
        rng.shuffle(&mut order);
        let train_len = (spec.train_fraction * n as f64).floor() as usize;
        let train: Vec<Message> = order[..train_len]
            .iter()
            .map(|&i| self.messages[i].clone())
            .collect();
        let test: Vec<Message> = order[train_len..]
            .iter()
            .map(|&i| self.messages[i].clone())
            .collect();
        Ok((LabeledDataset::new(train)?, LabeledDataset::new(test)?))
    }
}

/// Train/test split parameters. Defaults: 75% train, seed 42.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.75,
            seed: 42,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Parse a Telegram export JSON document into messages. Media-only posts
/// (empty text after trimming) are skipped; order is preserved; the channel
/// name comes from the top-level `name` field.
pub fn parse_telegram_export(bytes: &[u8]) -> Result<Vec<Message>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Format(format!("export is not UTF-8: {e}")))?;
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Json {
        offset: json_byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let obj = root
        .as_object()
        .ok_or_else(|| schema_err(0, "<root>", "expected a JSON object"))?;
    let group = obj
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| schema_err(0, "name", "missing top-level channel name"))?
        .to_string();
    let posts = obj
        .get("messages")
        .and_then(Value::as_array)
        .ok_or_else(|| schema_err(0, "messages", "missing top-level messages array"))?;

    let mut out = Vec::new();
    for (i, post) in posts.iter().enumerate() {
        let post = post
            .as_object()
            .ok_or_else(|| schema_err(i, "<message>", "expected an object"))?;
        let id = post
            .get("id")
            .and_then(Value::as_i64)
            .ok_or_else(|| schema_err(i, "id", "missing or non-integer"))?;
        let date = post
            .get("date")
            .and_then(Value::as_str)
            .ok_or_else(|| schema_err(i, "date", "missing or non-string"))?;
        let text_value = post
            .get("text")
            .ok_or_else(|| schema_err(i, "text", "missing"))?;
        let content = flatten_text(text_value)
            .ok_or_else(|| schema_err(i, "text", "expected a string or an array of text runs"))?;
        if content.trim().is_empty() {
            continue; // media-only post
        }
        out.push(Message {
            id: id.to_string(),
            content,
            date: date.to_string(),
            group: group.clone(),
            label: None,
        });
    }
    Ok(out)
}

/// Text runs are either plain strings or objects with a `text` field; they
/// concatenate in order.
fn flatten_text(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Array(runs) => {
            let mut out = String::new();
            for run in runs {
                match run {
                    Value::String(s) => out.push_str(s),
                    Value::Object(o) => out.push_str(o.get("text")?.as_str()?),
                    _ => return None,
                }
            }
            Some(out)
        }
        _ => None,
    }
}

fn schema_err(record: usize, field: &str, message: &str) -> Error {
    Error::Schema {
        record,
        field: field.to_string(),
        message: message.to_string(),
    }
}

/// Translate serde_json's 1-based line/column into a byte offset.
fn json_byte_offset(input: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    let mut remaining = line.saturating_sub(1);
    for (i, b) in input.bytes().enumerate() {
        if remaining == 0 {
            break;
        }
        if b == b'\n' {
            remaining -= 1;
            offset = i + 1;
        }
    }
    offset + column.saturating_sub(1)
}

const LABELED_HEADER: [&str; 4] = ["content", "date", "group", "class"];
const MESSAGE_HEADER: [&str; 3] = ["content", "date", "group"];

/// Load a labeled CSV (`content,date,group,class`). Rows whose class is not
/// 0 or 1 are rejected with their 1-based data-row number.
pub fn load_labeled_csv(bytes: &[u8]) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    check_header(&mut reader, &LABELED_HEADER)?;
    let mut messages = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::LabeledData {
            row,
            message: e.to_string(),
        })?;
        if record.len() != 4 {
            return Err(Error::LabeledData {
                row,
                message: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let label = match record[3].trim() {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(Error::LabeledData {
                    row,
                    message: format!("class must be 0 or 1, got `{other}`"),
                })
            }
        };
        if record[0].trim().is_empty() {
            return Err(Error::LabeledData {
                row,
                message: "content is empty".to_string(),
            });
        }
        messages.push(Message {
            id: row.to_string(),
            content: record[0].to_string(),
            date: record[1].to_string(),
            group: record[2].to_string(),
            label: Some(label),
        });
    }
    LabeledDataset::new(messages)
}

/// Load an unlabeled message CSV (`content,date,group`), the `ingest` output
/// format and the `analyze` input format.
pub fn load_message_csv(bytes: &[u8]) -> Result<Vec<Message>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    check_header(&mut reader, &MESSAGE_HEADER)?;
    let mut messages = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::LabeledData {
            row,
            message: e.to_string(),
        })?;
        if record.len() != 3 {
            return Err(Error::LabeledData {
                row,
                message: format!("expected 3 fields, got {}", record.len()),
            });
        }
        messages.push(Message {
            id: row.to_string(),
            content: record[0].to_string(),
            date: record[1].to_string(),
            group: record[2].to_string(),
            label: None,
        });
    }
    Ok(messages)
}

/// Serialize unlabeled messages to the three-column message CSV.
pub fn messages_to_csv(messages: &[Message]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(MESSAGE_HEADER)
        .map_err(|e| Error::Format(e.to_string()))?;
    for m in messages {
        writer
            .write_record([m.content.as_str(), m.date.as_str(), m.group.as_str()])
            .map_err(|e| Error::Format(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

fn check_header<R: std::io::Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("cannot read CSV header: {e}")))?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    let mut names = BTreeSet::new();
    for name in &got {
        if !names.insert(*name) {
            return Err(Error::Format(format!("duplicate header column `{name}`")));
        }
    }
    if got != expected {
        return Err(Error::Format(format!(
            "expected header {:?}, got {:?}",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}
