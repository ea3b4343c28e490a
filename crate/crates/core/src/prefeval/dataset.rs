use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("{source_name}:{line}: record {}: {message}", id.as_deref().unwrap_or("?"))]
pub struct DatasetError {
    pub source_name: String,
    pub line: usize,
    pub id: Option<String>,
    pub message: String,
}

/// One question with four user descriptions and their matching answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceItem {
    pub id: String,
    pub domain: String,
    pub question: String,
    pub preferences: [String; 4],
    pub answers: [String; 4],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawItem {
    id: String,
    domain: String,
    question: String,
    preferences: Vec<String>,
    answers: Vec<String>,
}

fn four(field: &str, v: Vec<String>) -> Result<[String; 4], String> {
    let n = v.len();
    let arr: [String; 4] = v
        .try_into()
        .map_err(|_| format!("expected exactly 4 {field}, found {n}"))?;
    if let Some(i) = arr.iter().position(|s| s.trim().is_empty()) {
        return Err(format!("{field}[{i}] is empty"));
    }
    Ok(arr)
}

impl TryFrom<RawItem> for PreferenceItem {
    type Error = String;

    fn try_from(raw: RawItem) -> Result<Self, String> {
        if raw.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if raw.domain.trim().is_empty() {
            return Err("empty domain".into());
        }
        if raw.question.trim().is_empty() {
            return Err("empty question".into());
        }
        Ok(Self {
            preferences: four("preferences", raw.preferences)?,
            answers: four("answers", raw.answers)?,
            id: raw.id,
            domain: raw.domain,
            question: raw.question,
        })
    }
}

/// Parse JSON-lines records. Blank lines are skipped; ids must be unique.
pub fn parse_dataset(text: &str, source_name: &str) -> Result<Vec<PreferenceItem>, DatasetError> {
    let mut items = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |id: Option<String>, message: String| DatasetError {
            source_name: source_name.to_string(),
            line: n + 1,
            id,
            message,
        };
        let raw: RawItem = serde_json::from_str(line).map_err(|e| {
            // Recover the id for the message when the record is otherwise broken.
            let id = serde_json::from_str::<serde_json::Value>(line)
                .ok()
                .and_then(|v| v.get("id").and_then(|i| i.as_str()).map(String::from));
            err(id, e.to_string())
        })?;
        let id = raw.id.clone();
        let item = PreferenceItem::try_from(raw).map_err(|m| err(Some(id.clone()), m))?;
        if !ids.insert(item.id.clone()) {
            return Err(err(Some(id), "duplicate id".into()));
        }
        items.push(item);
    }
    Ok(items)
}

pub fn load_dataset(path: impl AsRef<Path>) -> crate::Result<Vec<PreferenceItem>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| crate::Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_dataset(&text, &path.display().to_string())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, answers: usize) -> String {
        let answers: Vec<String> = (0..answers).map(|i| format!("answer {i}")).collect();
        serde_json::json!({
            "id": id,
            "domain": "Diet",
            "question": "q?",
            "preferences": ["p0", "p1", "p2", "p3"],
            "answers": answers,
        })
        .to_string()
    }

    #[test]
    fn wrong_cardinality_names_record_and_line() {
        let text = format!("{}\n\n{}\n", record("ok-1", 4), record("bad-7", 3));
        let err = parse_dataset(&text, "mem").unwrap_err();
        assert_eq!(err.line, 3);
        assert_eq!(err.id.as_deref(), Some("bad-7"));
        assert!(err.to_string().contains("bad-7"));
        assert!(err.message.contains("exactly 4 answers"), "{}", err.message);
    }

    #[test]
    fn empty_question_rejected() {
        let line = record("x", 4).replace("\"q?\"", "\"  \"");
        let err = parse_dataset(&line, "mem").unwrap_err();
        assert!(err.message.contains("empty question"));
    }

    #[test]
    fn malformed_json_and_unknown_fields() {
        assert!(parse_dataset("{not json", "mem").is_err());
        let line = record("x", 4).replace("\"id\"", "\"extra\": 1, \"id\"");
        assert!(parse_dataset(&line, "mem").is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = format!("{}\n{}", record("a", 4), record("a", 4));
        assert!(parse_dataset(&text, "mem").unwrap_err().message.contains("duplicate"));
    }
}
