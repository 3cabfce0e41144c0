use std::fmt;

use serde::Serialize;

/// Machine-readable failure: the module that raised it, the operation,
/// and the message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub module: String,
    pub operation: String,
    pub message: String,
}

impl CliError {
    pub fn new(module: impl Into<String>, operation: impl Into<String>, message: impl Into<String>) -> Self {
        CliError { module: module.into(), operation: operation.into(), message: message.into() }
    }

    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        CliError::new("cli", "write", format!("{}: {e}", path.display()))
    }

    pub fn is_config(&self) -> bool {
        self.module == "cli" && self.operation == "config"
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            2
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&serde_json::json!({ "error": self })).expect("strings serialize")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}: {}", self.module, self.operation, self.message)
    }
}

impl std::error::Error for CliError {}

/// Wraps a module error with where it came from.
pub fn from_module<E: fmt::Display>(module: &'static str, operation: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::new(module, operation, e.to_string())
}
