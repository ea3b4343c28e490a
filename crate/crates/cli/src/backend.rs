use std::collections::HashMap;
use std::path::PathBuf;

use linalign::backend::{HttpBackend, LogitsBackend, ToyModel};
use linalign::prefeval::ScriptedResponder;
use serde::Serialize;

use crate::exit::{CmdResult, Failure};

/// A parsed `--backend` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Toy(PathBuf),
    Http(String),
    /// Canned eval replies: a JSON object from item id to reply, with `"*"`
    /// as the fallback.
    Scripted(PathBuf),
}

impl std::str::FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(BackendSpec::Http(s.to_string()));
        }
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("expected toy:<path>, http:<url> or scripted:<path>, got {s:?}"))?;
        if rest.is_empty() {
            return Err(format!("missing location after {kind:?}"));
        }
        match kind {
            "toy" => Ok(BackendSpec::Toy(rest.into())),
            "http" if rest.starts_with("http://") || rest.starts_with("https://") => {
                Ok(BackendSpec::Http(rest.to_string()))
            }
            "http" if rest.starts_with("//") => Ok(BackendSpec::Http(format!("http:{rest}"))),
            "http" => Ok(BackendSpec::Http(format!("http://{rest}"))),
            "scripted" => Ok(BackendSpec::Scripted(rest.into())),
            other => Err(format!("unknown backend kind {other:?}")),
        }
    }
}

impl std::fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendSpec::Toy(p) => write!(f, "toy:{}", p.display()),
            BackendSpec::Http(u) => write!(f, "http:{u}"),
            BackendSpec::Scripted(p) => write!(f, "scripted:{}", p.display()),
        }
    }
}

/// What the manifest records about the backend.
#[derive(Debug, Clone, Serialize)]
pub struct BackendDescriptor {
    pub spec: String,
    pub model_id: Option<String>,
    pub vocab_size: Option<usize>,
}

pub fn open_model(spec: &BackendSpec) -> CmdResult<Box<dyn LogitsBackend>> {
    match spec {
        BackendSpec::Toy(path) => {
            let model = ToyModel::load(path).map_err(|e| Failure::Config(e.to_string()))?;
            Ok(Box::new(model))
        }
        BackendSpec::Http(url) => Ok(Box::new(HttpBackend::connect(url)?)),
        BackendSpec::Scripted(_) => Err(Failure::Config("scripted backends only answer evaluation items".into())),
    }
}

pub fn describe(spec: &BackendSpec, model: Option<&dyn LogitsBackend>) -> BackendDescriptor {
    BackendDescriptor {
        spec: spec.to_string(),
        model_id: model.map(|m| m.meta().model_id.clone()),
        vocab_size: model.map(|m| m.meta().vocab_size),
    }
}

pub fn load_scripted(path: &std::path::Path) -> CmdResult<ScriptedResponder> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let replies: HashMap<String, String> =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut responder = match replies.get("*") {
        Some(fallback) => ScriptedResponder::constant(fallback.as_str()),
        None => ScriptedResponder::default(),
    };
    for (id, reply) in replies.into_iter().filter(|(id, _)| id != "*") {
        responder = responder.with_reply(id, reply);
    }
    Ok(responder)
}
