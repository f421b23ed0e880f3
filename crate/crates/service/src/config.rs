//! Service configuration: a `key = value` file plus `TERMREC_*`
//! environment overrides.

use std::path::{Path, PathBuf};
use std::time::Duration;

use termrec_core::oai::RetryPolicy;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("invalid value for '{key}': {message}")]
    InvalidValue { key: String, message: String },
    #[error("line {0}: expected key = value")]
    Syntax(usize),
    #[error("cannot read config file {path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub bind: String,
    pub port: u16,
    pub store_path: PathBuf,
    /// Harvest/build jobs running at the same time, across repositories.
    pub job_parallelism: usize,
    pub retry_max_attempts: u32,
    pub retry_base_delay_ms: u64,
    pub retry_max_delay_secs: u64,
    pub argon2_memory_kib: u32,
    pub argon2_iterations: u32,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            bind: "127.0.0.1".into(),
            port: 8080,
            store_path: PathBuf::from("termrec.db"),
            job_parallelism: 2,
            retry_max_attempts: 5,
            retry_base_delay_ms: 1000,
            retry_max_delay_secs: 60,
            argon2_memory_kib: 19 * 1024,
            argon2_iterations: 2,
        }
    }
}

pub const KEYS: [&str; 9] = [
    "bind",
    "port",
    "store_path",
    "job_parallelism",
    "retry_max_attempts",
    "retry_base_delay_ms",
    "retry_max_delay_secs",
    "argon2_memory_kib",
    "argon2_iterations",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue { key: key.to_string(), message: e.to_string() })
}

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "bind" => self.bind = value.to_string(),
            "port" => self.port = parse(key, value)?,
            "store_path" => self.store_path = PathBuf::from(value),
            "job_parallelism" => self.job_parallelism = parse(key, value)?,
            "retry_max_attempts" => self.retry_max_attempts = parse(key, value)?,
            "retry_base_delay_ms" => self.retry_base_delay_ms = parse(key, value)?,
            "retry_max_delay_secs" => self.retry_max_delay_secs = parse(key, value)?,
            "argon2_memory_kib" => self.argon2_memory_kib = parse(key, value)?,
            "argon2_iterations" => self.argon2_iterations = parse(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the current values. Blank
    /// lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax(n + 1))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Applies `TERMREC_<KEY>` variables, e.g. `TERMREC_PORT=9000`.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        for (name, value) in vars {
            let Some(key) = name.strip_prefix("TERMREC_") else {
                continue;
            };
            let key = key.to_ascii_lowercase();
            if KEYS.contains(&key.as_str()) {
                self.set(&key, &value)?;
            }
        }
        Ok(())
    }

    /// Defaults, then the file (if any), then the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = Config::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
            config.apply_text(&text)?;
        }
        config.apply_env(std::env::vars())?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: &str| ConfigError::InvalidValue { key: key.into(), message: message.into() };
        if self.job_parallelism == 0 {
            return Err(invalid("job_parallelism", "must be at least 1"));
        }
        if self.retry_max_attempts == 0 {
            return Err(invalid("retry_max_attempts", "must be at least 1"));
        }
        if self.argon2_iterations == 0 || self.argon2_memory_kib < 8 {
            return Err(invalid("argon2_memory_kib", "work factor too small"));
        }
        Ok(())
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_attempts: self.retry_max_attempts,
            base_delay: Duration::from_millis(self.retry_base_delay_ms),
            max_delay: Duration::from_secs(self.retry_max_delay_secs),
        }
    }
}
