use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::exit::{to_json, write_file, CmdResult, Failure};

/// Record of one invocation. `args` replays it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub backend: serde_json::Value,
    pub timestamp: String,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, args: &[String], config: impl Serialize, seed: u64, backend: impl Serialize) -> Self {
        Self {
            command: command.to_string(),
            args: args.to_vec(),
            config: serde_json::to_value(config).expect("serializable config"),
            seed,
            backend: serde_json::to_value(backend).expect("serializable backend"),
            timestamp: timestamp(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn write(&self, path: &Path) -> CmdResult {
        write_file(path, &to_json(self))
    }

    pub fn read(path: &Path) -> CmdResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }
}

/// RFC 3339 time of the run, pinned by `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> String {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0));
    pinned
        .unwrap_or_else(Utc::now)
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let m = RunManifest::new("verify", &["verify".into()], serde_json::json!({"a": 1}), 3, "none");
        let back: RunManifest = serde_json::from_str(&to_json(&m)).unwrap();
        assert_eq!(back, m);
        assert!(m.timestamp.ends_with('Z'));
    }
}
