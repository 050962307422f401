//! `key = value` run files.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

pub const KNOWN_KEYS: [&str; 11] = [
    "alpha",
    "n",
    "precision",
    "engine",
    "out",
    "format",
    "workers",
    "no-timing",
    "kind",
    "step",
    "positions",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// Parsed settings; values stay as text until the command consumes them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("unknown key `{key}`"),
                });
            }
            let value = value.trim();
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("empty value for `{key}`"),
                });
            }
            if values.insert(key.clone(), value.to_string()).is_some() {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("`{key}` set twice"),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Boolean keys accept `true`/`false`, `yes`/`no`, `1`/`0`.
    pub fn flag(&self, key: &str) -> Result<Option<bool>, String> {
        self.get(key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(format!("`{key}` expects true or false, got `{v}`")),
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let c = Config::parse("# run\nalpha = 0:1:0.05\n\nn = 4..10  # inclusive\nno_timing = yes\n")
            .unwrap();
        assert_eq!(c.get("alpha"), Some("0:1:0.05"));
        assert_eq!(c.get("n"), Some("4..10"));
        assert_eq!(c.flag("no-timing").unwrap(), Some(true));
        assert_eq!(c.get("engine"), None);
    }

    #[test]
    fn errors_name_the_line() {
        let e = Config::parse("alpha = 0.5\nbogus\n").unwrap_err();
        assert_eq!(e.to_string(), "line 2: expected `key = value`, got `bogus`");
        let e = Config::parse("\n\ncolour = red").unwrap_err();
        assert!(e.to_string().starts_with("line 3: unknown key"));
        let e = Config::parse("n = 4\nn = 5").unwrap_err();
        assert!(e.to_string().contains("set twice"));
        assert!(Config::parse("n =").is_err());
    }

    #[test]
    fn bad_flag_values_are_rejected() {
        let c = Config::parse("no-timing = maybe").unwrap();
        assert!(c.flag("no-timing").is_err());
    }
}
