//! Service configuration.
//!
//! The file is `key = value` lines; blank lines and `#` comments are
//! ignored. Recognised keys:
//!
//! ```text
//! listen = 127.0.0.1:8080
//! store = /var/lib/dsage
//! cors_origin = http://localhost:5173
//! ```
//!
//! Each key can be overridden by an environment variable of the same name
//! upper-cased and prefixed with `DSAGE_` (e.g. `DSAGE_LISTEN`).

use std::net::SocketAddr;
use std::path::PathBuf;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
pub const DEFAULT_STORE: &str = "dsage-store";
const KEYS: [&str; 3] = ["listen", "store", "cors_origin"];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub listen: SocketAddr,
    pub store: PathBuf,
    pub cors_origin: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            listen: DEFAULT_LISTEN.parse().unwrap(),
            store: PathBuf::from(DEFAULT_STORE),
            cors_origin: None,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{key}: {message}")]
    Value { key: String, message: String },
}

impl Config {
    /// Parses configuration text on top of the defaults.
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut config = Config::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n + 1,
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::Syntax {
                    line: n + 1,
                    message: format!("unknown key `{key}`"),
                });
            }
            config.set(key, value.trim())?;
        }
        Ok(config)
    }

    /// Applies `DSAGE_*` overrides from `vars`.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in vars {
            let Some(key) = k.as_ref().strip_prefix("DSAGE_") else {
                continue;
            };
            let key = key.to_ascii_lowercase();
            if KEYS.contains(&key.as_str()) {
                self.set(&key, v.as_ref())?;
            }
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "listen" => {
                self.listen = value.parse().map_err(|e| ConfigError::Value {
                    key: key.into(),
                    message: format!("`{value}`: {e}"),
                })?
            }
            "store" => self.store = PathBuf::from(value),
            "cors_origin" => {
                self.cors_origin = (!value.is_empty()).then(|| value.to_string())
            }
            _ => unreachable!("keys are checked by the callers"),
        }
        Ok(())
    }
}
