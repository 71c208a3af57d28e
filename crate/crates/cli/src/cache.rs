//! Content-addressed store for Monte Carlo results.
//!
//! The key is the SHA-256 of the canonical JSON of the resolved parameters
//! (worker count excluded, since it cannot change the result).

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::output::CliError;

pub struct Cache {
    dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    Off,
    Hit,
    Miss,
}

impl Lookup {
    pub fn label(self) -> &'static str {
        match self {
            Lookup::Off => "off",
            Lookup::Hit => "hit",
            Lookup::Miss => "miss",
        }
    }
}

impl Cache {
    pub fn open(dir: Option<&Path>) -> Option<Self> {
        dir.map(|d| Self { dir: d.to_path_buf() })
    }

    pub fn key<P: Serialize>(kind: &str, params: &P) -> String {
        let body = serde_json::json!({
            "kind": kind,
            "version": env!("CARGO_PKG_VERSION"),
            "params": params,
        });
        let bytes = serde_json::to_vec(&body).expect("parameters serialize");
        hex::encode(Sha256::digest(&bytes))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Unreadable or stale entries count as misses.
    pub fn get<R: DeserializeOwned>(&self, key: &str) -> Option<R> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put<R: Serialize>(&self, key: &str, value: &R) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&format!("cannot create {}", self.dir.display()), e))?;
        let text = serde_json::to_string(value).map_err(|e| CliError::io("cannot serialize a cache entry", e))?;
        let tmp = self.dir.join(format!("{key}.tmp"));
        fs::write(&tmp, text).map_err(|e| CliError::io(&format!("cannot write {}", tmp.display()), e))?;
        let dst = self.path(key);
        fs::rename(&tmp, &dst).map_err(|e| CliError::io(&format!("cannot write {}", dst.display()), e))
    }
}

/// Runs `compute` unless `cache` already holds a result under `key`.
pub fn cached<R, F>(cache: Option<&Cache>, key: &str, compute: F) -> Result<(R, Lookup), CliError>
where
    R: Serialize + DeserializeOwned,
    F: FnOnce() -> Result<R, CliError>,
{
    let Some(cache) = cache else {
        return Ok((compute()?, Lookup::Off));
    };
    if let Some(hit) = cache.get(key) {
        return Ok((hit, Lookup::Hit));
    }
    let value = compute()?;
    cache.put(key, &value)?;
    Ok((value, Lookup::Miss))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_depend_on_every_parameter() {
        let a = Cache::key("tail", &(1, 2.0));
        assert_eq!(a, Cache::key("tail", &(1, 2.0)));
        assert_ne!(a, Cache::key("tail", &(1, 2.5)));
        assert_ne!(a, Cache::key("trunc", &(1, 2.0)));
        assert_eq!(a.len(), 64);
    }
}
