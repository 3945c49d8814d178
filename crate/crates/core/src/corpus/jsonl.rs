//! Line-delimited JSON record files.
//!
//! One object per line; blank lines are skipped. The first line may be a
//! provenance header of the form `{"_provenance": {...}}`, which readers skip
//! and expose separately.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub const PROVENANCE_KEY: &str = "_provenance";

#[derive(Debug, Clone, PartialEq)]
pub struct RecordFile<T> {
    pub provenance: Option<Value>,
    /// Records paired with their 1-based line numbers.
    pub records: Vec<(usize, T)>,
}

impl<T> RecordFile<T> {
    pub fn into_records(self) -> Vec<T> {
        self.records.into_iter().map(|(_, r)| r).collect()
    }
}

fn provenance_of(line: &str) -> Option<Value> {
    let value: Value = serde_json::from_str(line).ok()?;
    let obj = value.as_object()?;
    if obj.len() == 1 {
        obj.get(PROVENANCE_KEY).cloned()
    } else {
        None
    }
}

pub fn parse_records<T: DeserializeOwned>(text: &str, file: &str) -> Result<RecordFile<T>> {
    let mut provenance = None;
    let mut records = Vec::new();
    let mut seen_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if !seen_content {
            seen_content = true;
            if let Some(p) = provenance_of(line) {
                provenance = Some(p);
                continue;
            }
        }
        let record = serde_json::from_str(line).map_err(|e| Error::malformed(file, line_no, e.to_string()))?;
        records.push((line_no, record));
    }
    Ok(RecordFile { provenance, records })
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<RecordFile<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text, &path.display().to_string())
}

pub fn render_records<T: Serialize>(records: &[T], provenance: Option<&Value>) -> Result<String> {
    let mut out = String::new();
    if let Some(p) = provenance {
        let header = serde_json::json!({ PROVENANCE_KEY: p });
        out.push_str(&header.to_string());
        out.push('\n');
    }
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| Error::Output(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_records<T: Serialize>(path: &Path, records: &[T], provenance: Option<&Value>) -> Result<()> {
    let body = render_records(records, provenance)?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PromptRecord;

    #[test]
    fn skips_provenance_and_blank_lines() {
        let text =
            "{\"_provenance\":{\"kind\":\"shuffle_text\"}}\n\n{\"id\":\"p1\",\"dataset\":\"coco\",\"text\":\"a\"}\n";
        let file: RecordFile<PromptRecord> = parse_records(text, "t").unwrap();
        assert_eq!(file.records.len(), 1);
        assert_eq!(file.records[0].0, 3);
        assert_eq!(file.provenance.unwrap()["kind"], "shuffle_text");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"id\":\"p1\",\"dataset\":\"coco\",\"text\":\"a\"}\n{\"id\": 3\n";
        let err = parse_records::<PromptRecord>(text, "prompts.jsonl").unwrap_err();
        match err {
            Error::Malformed { line, file, .. } => {
                assert_eq!(line, 2);
                assert_eq!(file, "prompts.jsonl");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
