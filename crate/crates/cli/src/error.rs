//! CLI failure modes and their process exit codes.

use qkd_sync::engine::EngineError;
use qkd_sync::scan::ScanError;
use std::fmt;
use std::path::Path;

/// Exit codes: 0 success, 2 usage, 3 unreadable input, 4 invalid
/// configuration, 5 infeasible schedule.
#[derive(Debug)]
pub enum CliError {
    /// Bad command-line usage (unknown key, malformed override, zero
    /// trials).
    Usage(String),
    /// The input file could not be read or the output could not be
    /// written.
    Io(String),
    /// The configuration parsed but is physically or structurally
    /// invalid.
    Config(String),
    /// The configuration is valid but no feasible scan schedule exists.
    Schedule(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Config(_) => 4,
            CliError::Schedule(_) => 5,
        }
    }

    pub fn read_failure(path: &Path, err: &std::io::Error) -> Self {
        CliError::Io(format!("cannot read {}: {err}", path.display()))
    }

    pub fn write_failure(path: &Path, err: &std::io::Error) -> Self {
        CliError::Io(format!("cannot write {}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Io(msg) => write!(f, "{msg}"),
            CliError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Schedule(msg) => write!(f, "infeasible schedule: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Engine failures split into schedule problems (exit 5) and everything
/// else (exit 4), keeping the field-level message.
pub fn from_engine(err: EngineError) -> CliError {
    match &err {
        EngineError::Scan(ScanError::InfeasibleSpacing { .. }) => {
            CliError::Schedule(err.to_string())
        }
        _ => CliError::Config(err.to_string()),
    }
}
