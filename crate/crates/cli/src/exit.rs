use std::fmt;
use std::process::ExitCode;

use linalign::Error;

/// Why a command stopped, and the process status that goes with it.
#[derive(Debug)]
pub enum Failure {
    /// A check ran and did not pass.
    Check(String),
    Config(String),
    Backend(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Check(_) => 1,
            Failure::Config(_) => 2,
            Failure::Backend(_) => 3,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Backend(m) => write!(f, "backend error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_backend() {
            return Failure::Backend(e.to_string());
        }
        match e {
            Error::Config(m) => Failure::Config(m),
            Error::Sampling(_) | Error::NoConvergence { .. } => Failure::Check(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<linalign::backend::BackendError> for Failure {
    fn from(e: linalign::backend::BackendError) -> Self {
        Failure::Backend(e.to_string())
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

/// Write `contents` to `path`, creating parent directories.
pub fn write_file(path: &std::path::Path, contents: &str) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}
