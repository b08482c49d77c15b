//! Optional JSON config files, environment defaults and resolved-config
//! output.
//!
//! A config file is a flat JSON object keyed by long option names with `-`
//! replaced by `_` (`{"seed": 7, "workers": 4}`). Flags beat config values.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Default master seed when neither a flag nor a config value sets one.
pub const SEED_ENV: &str = "SHADOWFORGE_SEED";

#[derive(Debug, Default)]
pub(crate) struct ConfigFile {
    path: Option<PathBuf>,
    values: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = read_input(path)?;
        let values = match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(map)) => map,
            Ok(_) => {
                return Err(CliError::Usage(format!(
                    "{}: config must be a JSON object",
                    path.display()
                )))
            }
            Err(e) => return Err(CliError::Usage(format!("{}: {e}", path.display()))),
        };
        Ok(Self {
            path: Some(path.to_path_buf()),
            values,
        })
    }

    fn type_error(&self, key: &str, expected: &str) -> CliError {
        let origin = self
            .path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        CliError::Usage(format!("{origin}: {key:?} must be {expected}"))
    }

    pub fn value(&self, key: &str) -> Option<&Value> {
        self.values.get(key).filter(|v| !v.is_null())
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.value(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.type_error(key, "a string")),
        }
    }

    pub fn path(&self, key: &str) -> Result<Option<PathBuf>, CliError> {
        Ok(self.string(key)?.map(PathBuf::from))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.value(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(Some)
                .ok_or_else(|| self.type_error(key, "a non-negative integer")),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.value(key) {
            None => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| self.type_error(key, "a number")),
        }
    }
}

pub(crate) fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={s:?} is not an unsigned 64-bit integer"))),
        Err(_) => Ok(None),
    }
}

/// Read a user-supplied input; a missing file is a usage error.
pub(crate) fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => CliError::Usage(format!("{}: no such file", path.display())),
        _ => CliError::io(path.display(), e),
    })
}

pub(crate) fn read_input_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => CliError::Usage(format!("{}: no such file", path.display())),
        _ => CliError::io(path.display(), e),
    })
}

pub(crate) fn write_output(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent.display(), e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path.display(), e))
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    write_output(path, shadowforge_core::to_sorted_json(value))
}

/// `dir/report.json` -> `dir/report.resolved-config.json`.
pub(crate) fn resolved_config_path(output_file: &Path) -> PathBuf {
    let stem = output_file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    output_file.with_file_name(format!("{stem}.resolved-config.json"))
}
