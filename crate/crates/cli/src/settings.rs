//! `key=value` settings from `--config` files and `--set` flags, applied on
//! top of a model's JSON-serializable configuration.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    pub entries: Vec<(String, String)>,
}

impl Settings {
    /// One `key=value` per line; `#` starts a comment, blank lines are ignored.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            entries.push(parse_pair(line).map_err(|m| CliError::Usage(format!("{origin}:{}: {m}", i + 1)))?);
        }
        Ok(Settings { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| sentrep::Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn push_flag(&mut self, flag: &str) -> Result<(), CliError> {
        self.entries
            .push(parse_pair(flag).map_err(|m| CliError::Usage(format!("--set {flag}: {m}")))?);
        Ok(())
    }

    /// Removes and returns the last value given for `key`.
    pub fn take(&mut self, key: &str) -> Option<String> {
        let last = self.entries.iter().rposition(|(k, _)| k == key)?;
        let value = self.entries[last].1.clone();
        self.entries.retain(|(k, _)| k != key);
        Some(value)
    }

    pub fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.take(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("{key}={v}: {e}"))))
            .transpose()
    }

    /// Overwrites fields of `config` named by the remaining keys. Dotted keys
    /// reach nested fields; a bare key also matches a unique nested field.
    pub fn apply<C: Serialize + DeserializeOwned>(&self, config: &C) -> Result<C, CliError> {
        let mut value = serde_json::to_value(config).expect("configs serialize to JSON");
        for (key, raw) in &self.entries {
            let slot = locate(&mut value, key).ok_or_else(|| CliError::Usage(format!("unknown setting `{key}`")))?;
            *slot = match serde_json::from_str::<Value>(raw) {
                Ok(v) if !v.is_string() => v,
                _ => Value::String(raw.clone()),
            };
        }
        serde_json::from_value(value).map_err(|e| CliError::Usage(format!("invalid setting: {e}")))
    }
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or("expected key=value")?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err("empty key".into());
    }
    Ok((k.to_string(), v.to_string()))
}

fn locate<'a>(value: &'a mut Value, key: &str) -> Option<&'a mut Value> {
    if key.contains('.') {
        return key
            .split('.')
            .try_fold(value, |v, part| v.as_object_mut()?.get_mut(part));
    }
    let obj = value.as_object_mut()?;
    if obj.contains_key(key) {
        return obj.get_mut(key);
    }
    let mut nested = obj
        .values_mut()
        .filter_map(|v| v.as_object_mut())
        .filter(|o| o.contains_key(key));
    let found = nested.next()?;
    if nested.next().is_some() {
        return None;
    }
    found.get_mut(key)
}
