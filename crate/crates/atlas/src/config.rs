//! Service configuration: a JSON file, with `ATLAS_PORT` / `ATLAS_DATA_DIR`
//! taking precedence when set. Relative paths resolve against the directory
//! holding the config file.

use std::path::{Path, PathBuf};

use atlas_core::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::boundaries::{Boundaries, BoundaryError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid {name}: {value}")]
    Env { name: &'static str, value: String },
    #[error("port must be in 1..=65535")]
    Port,
    #[error(transparent)]
    Boundaries(#[from] BoundaryError),
}

fn default_port() -> u16 {
    8080
}

fn default_bind() -> String {
    "127.0.0.1".into()
}

fn default_reload_ms() -> u64 {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiConfig {
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default = "default_bind")]
    pub bind: String,
    pub data_dir: PathBuf,
    /// County (or state) boundaries as a GeoJSON FeatureCollection whose
    /// features carry a `fips` property.
    pub boundaries: PathBuf,
    #[serde(default)]
    pub default_from: Option<NaiveDate>,
    #[serde(default)]
    pub default_to: Option<NaiveDate>,
    /// Built web client, served at `/` when present.
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
    /// How often to look for a snapshot written by `atlas ingest`.
    #[serde(default = "default_reload_ms")]
    pub reload_interval_ms: u64,
}

impl ApiConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::load_with_env(path, |k| std::env::var(k).ok())
    }

    pub fn load_with_env(path: &Path, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.into(),
            source,
        })?;
        let mut config: ApiConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.into(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.data_dir = base.join(&config.data_dir);
        config.boundaries = base.join(&config.boundaries);
        config.static_dir = config.static_dir.map(|d| base.join(d));
        if let Some(port) = env("ATLAS_PORT") {
            config.port = port.trim().parse().map_err(|_| ConfigError::Env {
                name: "ATLAS_PORT",
                value: port.clone(),
            })?;
        }
        if let Some(dir) = env("ATLAS_DATA_DIR") {
            config.data_dir = PathBuf::from(dir);
        }
        if config.port == 0 {
            return Err(ConfigError::Port);
        }
        Ok(config)
    }

    /// Load and validate the boundary file named by the config.
    pub fn boundaries(&self) -> Result<Boundaries, ConfigError> {
        Ok(Boundaries::load(&self.boundaries)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("config.json");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn relative_paths_and_env_override() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            r#"{"port": 9000, "data_dir": "data", "boundaries": "b.geojson"}"#,
        );
        let c = ApiConfig::load_with_env(&p, |_| None).unwrap();
        assert_eq!(c.port, 9000);
        assert_eq!(c.data_dir, dir.path().join("data"));
        let c = ApiConfig::load_with_env(&p, |k| match k {
            "ATLAS_PORT" => Some("9100".into()),
            "ATLAS_DATA_DIR" => Some("/srv/atlas".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(c.port, 9100);
        assert_eq!(c.data_dir, PathBuf::from("/srv/atlas"));
    }

    #[test]
    fn rejects_bad_ports() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), r#"{"port": 0, "data_dir": "d", "boundaries": "b"}"#);
        assert!(matches!(ApiConfig::load_with_env(&p, |_| None), Err(ConfigError::Port)));
        let p = write(dir.path(), r#"{"port": 70000, "data_dir": "d", "boundaries": "b"}"#);
        assert!(matches!(
            ApiConfig::load_with_env(&p, |_| None),
            Err(ConfigError::Parse { .. })
        ));
        let p = write(dir.path(), r#"{"data_dir": "d", "boundaries": "b"}"#);
        assert!(matches!(
            ApiConfig::load_with_env(&p, |k| (k == "ATLAS_PORT").then(|| "x".into())),
            Err(ConfigError::Env { .. })
        ));
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), r#"{"data_dir": "d", "boundaries": "b", "prot": 1}"#);
        assert!(ApiConfig::load_with_env(&p, |_| None).is_err());
    }
}
