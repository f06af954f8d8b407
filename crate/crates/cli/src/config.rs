//! Settings resolved with the precedence flags > `SCA_*` environment > config file.
//!
//! The config file holds one `key = value` pair per line; blank lines and
//! lines starting with `#` are ignored. Environment variables use the key in
//! upper case with an `SCA_` prefix, e.g. `SCA_MODEL` for `model`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub const KEYS: &[(&str, &str)] = &[
    ("endpoint", "chat-completions base URL"),
    ("api_key_env", "environment variable holding the provider token"),
    ("model", "chat model id"),
    ("embedding_model", "embedding model id"),
    ("requests_per_minute", "provider rate limit"),
    ("accepts_images", "whether the chat model takes images directly (true/false)"),
    ("google_api_key", "Programmable Search API key"),
    ("google_engine_id", "Programmable Search engine id"),
    ("profiles_dir", "profile store directory"),
    ("knowledge_dir", "knowledge base directory"),
    ("data_dir", "service data directory"),
    ("seed", "run seed"),
    ("parallelism", "concurrent model calls"),
    ("token", "shared bearer token for the API"),
    ("describe_model", "vision model id used to describe images for text-only chat models"),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse_file(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{origin}:{}: expected key = value", i + 1)))?;
            let key = key.trim().to_ascii_lowercase();
            if !KEYS.iter().any(|(k, _)| *k == key) {
                return Err(CliError::Usage(format!("{origin}:{}: unknown key {key:?}", i + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    /// File values overlaid with `SCA_*` variables from `env`.
    pub fn load<I>(file: Option<&Path>, env: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut settings = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                Self::parse_file(&text, &path.display().to_string())?
            }
            None => Self::default(),
        };
        for (name, value) in env {
            let Some(key) = name.strip_prefix("SCA_") else { continue };
            let key = key.to_ascii_lowercase();
            if KEYS.iter().any(|(k, _)| *k == key) {
                settings.values.insert(key, value);
            }
        }
        Ok(settings)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The flag value if given, else the setting parsed as `T`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("setting {key} has an invalid value {v:?}"))),
            None => Ok(None),
        }
    }

    pub fn pick_or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }
}
