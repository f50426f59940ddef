//! Plain-text experiment configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment; blank lines are
//! ignored. Keys mirror the CLI flags and CLI flags win over file values:
//!
//! ```text
//! # example experiment config
//! seed          = 42
//! trials        = 100000
//! snr_grid      = 0,2,4,6,8,10,12,14
//! csi_error_var = 0.01
//! channel       = quantized
//! loss          = local
//! out           = results.csv
//! ```

use std::path::Path;

use crate::error::{Error, Result};

/// Keys understood by the experiment driver.
pub const KNOWN_KEYS: [&str; 7] = [
    "seed",
    "trials",
    "snr_grid",
    "csi_error_var",
    "channel",
    "loss",
    "out",
];

/// Parsed key-value configuration; raw strings, typed by the consumer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: Vec<(String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Malformed(format!(
                    "config line {}: expected `key = value`, got `{raw}`",
                    idx + 1
                )));
            };
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Malformed(format!(
                    "config line {}: unknown key `{key}` (known: {})",
                    idx + 1,
                    KNOWN_KEYS.join(", ")
                )));
            }
            if entries.iter().any(|(k, _)| *k == key) {
                return Err(Error::Malformed(format!(
                    "config line {}: duplicate key `{key}`",
                    idx + 1
                )));
            }
            entries.push((key, value));
        }
        Ok(ConfigFile { entries })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Malformed(msg) => Error::Malformed(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_example_config() {
        let text = "# comment\nseed = 42\n\nsnr_grid = 0,2,4 # inline comment\nchannel=quantized\n";
        let cfg = ConfigFile::parse(text).unwrap();
        assert_eq!(cfg.get("seed"), Some("42"));
        assert_eq!(cfg.get("snr_grid"), Some("0,2,4"));
        assert_eq!(cfg.get("channel"), Some("quantized"));
        assert_eq!(cfg.get("out"), None);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(ConfigFile::parse("bogus = 1\n").is_err());
        assert!(ConfigFile::parse("seed = 1\nseed = 2\n").is_err());
        assert!(ConfigFile::parse("just some words\n").is_err());
    }

    #[test]
    fn empty_and_comment_only_files_are_fine() {
        assert!(ConfigFile::parse("").unwrap().is_empty());
        assert!(ConfigFile::parse("# nothing here\n\n").unwrap().is_empty());
    }
}
