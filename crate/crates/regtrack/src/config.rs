//! Config files: `key = value` lines over the defaults in [`KEYS`].

use std::fmt::Write as _;
use std::path::Path;

use regtrack_core::config::{Config, KEYS};
use regtrack_core::Error as CoreError;

use crate::error::{read_to_string, Error, Result};

/// Loads a config file. An empty file yields the defaults; unknown keys and
/// unparsable values are errors naming the file, line and key.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = read_to_string(path)?;
    let mut cfg = Config::default();
    for (no, line) in text.lines().enumerate() {
        cfg.apply_line(line).map_err(|e| {
            let msg = match e {
                CoreError::Config(m) => m,
                other => other.to_string(),
            };
            Error::parse(path, no + 1, msg)
        })?;
    }
    Ok(cfg)
}

/// Aligned `key  default  description` table of every config key.
pub fn keys_table() -> String {
    let width = KEYS.iter().map(|k| k.name.len()).max().unwrap_or(0);
    let dwidth = KEYS.iter().map(|k| k.default.len()).max().unwrap_or(0);
    let mut out = String::new();
    for k in KEYS {
        let _ = writeln!(out, "  {:width$}  {:dwidth$}  {}", k.name, k.default, k.help);
    }
    out
}
