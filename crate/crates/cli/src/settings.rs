//! Optional JSON settings files merged under command-line flags.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use crate::Failure;

pub fn version_line() -> &'static str {
    let line = format!(
        "{} (dataset schema {}, predictions schema {})",
        latticepose::VERSION,
        latticepose::datagen::DATASET_SCHEMA,
        latticepose::pipeline::PREDICTIONS_SCHEMA
    );
    Box::leak(line.into_boxed_str())
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("invalid {what} {}: {e}", path.display())))
}

/// Settings file, or defaults when none is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    path.map_or_else(|| Ok(T::default()), |p| read_json(p, "settings file"))
}

/// Flag value if given, else the settings value, else an error naming the flag.
pub fn require<T>(flag: Option<T>, setting: Option<T>, name: &str) -> Result<T, Failure> {
    flag.or(setting)
        .ok_or_else(|| Failure::input(format!("missing required --{name} (flag or settings key)")))
}

/// Resolves `path` against `base` unless it is absolute.
pub fn relative_to(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new("")).join(path)
    }
}
