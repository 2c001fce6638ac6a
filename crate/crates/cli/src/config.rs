use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Resolves parameters with precedence flag > config file > default, and
/// records every resolved value for the manifest.
pub struct Resolver {
    config: Map<String, Value>,
    pub source: Option<PathBuf>,
    resolved: Map<String, Value>,
}

impl Resolver {
    pub fn new(path: Option<&Path>) -> CliResult<Self> {
        let config = match path {
            None => Map::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => return Err(CliError::Config(format!("{} is not a JSON object", p.display()))),
                    Err(e) => return Err(CliError::Config(format!("{}: {e}", p.display()))),
                }
            }
        };
        Ok(Self {
            config,
            source: path.map(Path::to_path_buf),
            resolved: Map::new(),
        })
    }

    fn lookup<T: DeserializeOwned>(&self, key: &str) -> CliResult<Option<T>> {
        let alt = key.replace('-', "_");
        match self.config.get(key).or_else(|| self.config.get(&alt)) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::Config(format!("config key `{key}`: {e}"))),
        }
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T>
    where
        T: DeserializeOwned + serde::Serialize,
    {
        let v = match flag {
            Some(v) => v,
            None => self.lookup(key)?.unwrap_or(default),
        };
        self.resolved.insert(key.to_string(), serde_json::to_value(&v).unwrap_or(Value::Null));
        Ok(v)
    }

    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T: DeserializeOwned + serde::Serialize,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.lookup(key)?,
        };
        if let Some(x) = &v {
            self.resolved.insert(key.to_string(), serde_json::to_value(x).unwrap_or(Value::Null));
        }
        Ok(v)
    }

    /// Parses a string-valued parameter with `FromStr`.
    pub fn parsed<T: std::str::FromStr>(&mut self, key: &str, flag: Option<String>, default: &str) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        let s: String = self.get(key, flag, default.to_string())?;
        s.parse::<T>().map_err(|e| CliError::Config(format!("`{key}` = {s:?}: {e}")))
    }

    pub fn resolved(&self) -> &Map<String, Value> {
        &self.resolved
    }
}
