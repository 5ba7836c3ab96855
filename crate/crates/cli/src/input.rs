//! JSON arguments given inline or as file paths.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

/// Parses `arg` as JSON, or reads it as a path when it does not parse.
pub fn json_arg<T: DeserializeOwned>(name: &str, arg: &str) -> CliResult<T> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with(['[', '{', '-']) || trimmed.starts_with(|c: char| c.is_ascii_digit()) {
        return serde_json::from_str(arg).map_err(|e| CliError::config(name, e.to_string()));
    }
    json_file(name, Path::new(arg))
}

pub fn json_file<T: DeserializeOwned>(name: &str, path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{name} ({})", path.display()), e.to_string()))
}
