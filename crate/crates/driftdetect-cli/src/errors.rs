//! Structured command-line error reporting.
//!
//! Every failure is reported on stderr as a single JSON object naming the
//! stage that failed, a message, and — when the failure concerns a file —
//! the offending path and line. Validation problems (bad flags, bad
//! configuration, malformed or inconsistent input data) exit with code 1;
//! failures during execution (IO, serialisation) exit with code 2.

use std::fmt;
use std::path::Path;

use serde::Serialize;

/// Machine-readable error report printed to stderr.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    /// Pipeline stage that failed, e.g. `config`, `read-events`, `detect`.
    pub stage: &'static str,
    /// Human-readable description.
    pub message: String,
    /// Offending file, when the failure concerns one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// 1-based line within the offending file, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u64>,
}

/// A command failure carrying its exit class.
#[derive(Debug, Clone)]
pub enum CliError {
    /// Inputs were rejected before or during validation (exit code 1).
    Validation(ErrorReport),
    /// The command failed while executing on valid inputs (exit code 2).
    Runtime(ErrorReport),
}

/// Shorthand result for command-line operations.
pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    /// A validation failure (exit code 1).
    pub fn validation(stage: &'static str, message: impl fmt::Display) -> Self {
        CliError::Validation(ErrorReport {
            stage,
            message: message.to_string(),
            path: None,
            line: None,
        })
    }

    /// A runtime failure (exit code 2).
    pub fn runtime(stage: &'static str, message: impl fmt::Display) -> Self {
        CliError::Runtime(ErrorReport {
            stage,
            message: message.to_string(),
            path: None,
            line: None,
        })
    }

    /// Attaches the offending path.
    #[must_use]
    pub fn with_path(mut self, path: &Path) -> Self {
        self.report_mut().path = Some(path.display().to_string());
        self
    }

    /// Attaches the offending 1-based line.
    #[must_use]
    pub fn with_line(mut self, line: u64) -> Self {
        self.report_mut().line = Some(line);
        self
    }

    /// The inner report.
    pub fn report(&self) -> &ErrorReport {
        match self {
            CliError::Validation(r) | CliError::Runtime(r) => r,
        }
    }

    fn report_mut(&mut self) -> &mut ErrorReport {
        match self {
            CliError::Validation(r) | CliError::Runtime(r) => r,
        }
    }

    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.report();
        write!(f, "[{}] {}", r.stage, r.message)?;
        if let Some(p) = &r.path {
            write!(f, " ({p}")?;
            if let Some(l) = r.line {
                write!(f, ":{l}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}
