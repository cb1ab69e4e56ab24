use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use evtrack_core::analysis::AnalysisOptions;
use evtrack_core::evidence_map::MapParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            ConfigError::Read { .. } => None,
        }
    }
}

/// Service settings, read from a JSON file and then overridden by
/// `EVTRACK_*` environment variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Largest report count analysed exactly.
    pub exact_limit: usize,
    pub beam_width: usize,
    /// Evidence map decay half-life; `None` disables decay.
    pub half_life_s: Option<f64>,
    /// Evidence map cell size; defaults to the map's own.
    pub cell_size_m: Option<f64>,
    /// Base directory for map files referenced by uploaded scenarios.
    pub scenario_dir: Option<PathBuf>,
    /// Responses kept in the read cache.
    pub cache_entries: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let params = MapParams::default();
        let opts = AnalysisOptions::default();
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            exact_limit: opts.exact_limit,
            beam_width: opts.beam_width,
            half_life_s: params.half_life_s,
            cell_size_m: params.cell_size_m,
            scenario_dir: None,
            cache_entries: 256,
        }
    }
}

fn parse_env<T: std::str::FromStr>(field: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Invalid {
        field: field.into(),
        message: format!("cannot parse `{value}`"),
    })
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde::Deserialize::deserialize(de).map_err(|e| ConfigError::Invalid {
            field: "config".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies overrides from `vars`, typically `std::env::vars()`.
    pub fn with_env(mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<Self, ConfigError> {
        for (key, value) in vars {
            match key.as_str() {
                "EVTRACK_HOST" => self.host = value,
                "EVTRACK_PORT" => self.port = parse_env("port", &value)?,
                "EVTRACK_EXACT_LIMIT" => self.exact_limit = parse_env("exact_limit", &value)?,
                "EVTRACK_BEAM_WIDTH" => self.beam_width = parse_env("beam_width", &value)?,
                "EVTRACK_HALF_LIFE_S" => {
                    self.half_life_s = match value.trim() {
                        "" | "none" | "off" => None,
                        v => Some(parse_env("half_life_s", v)?),
                    }
                }
                "EVTRACK_CELL_SIZE_M" => self.cell_size_m = Some(parse_env("cell_size_m", &value)?),
                "EVTRACK_SCENARIO_DIR" => self.scenario_dir = Some(PathBuf::from(value)),
                "EVTRACK_CACHE_ENTRIES" => self.cache_entries = parse_env("cache_entries", &value)?,
                _ => {}
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, message: &str| {
            Err(ConfigError::Invalid {
                field: field.into(),
                message: message.into(),
            })
        };
        if self.beam_width == 0 {
            return bad("beam_width", "must be at least 1");
        }
        if self.half_life_s.is_some_and(|h| !(h > 0.0)) {
            return bad("half_life_s", "must be positive");
        }
        if self.cell_size_m.is_some_and(|c| !(c > 0.0)) {
            return bad("cell_size_m", "must be positive");
        }
        Ok(())
    }

    pub fn addr(&self) -> Result<SocketAddr, ConfigError> {
        format!("{}:{}", self.host, self.port).parse().map_err(|_| ConfigError::Invalid {
            field: "host".into(),
            message: format!("`{}` is not an IP address", self.host),
        })
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            exact_limit: self.exact_limit,
            beam_width: self.beam_width,
            ..AnalysisOptions::default()
        }
    }

    pub fn map_params(&self) -> MapParams {
        MapParams {
            half_life_s: self.half_life_s,
            cell_size_m: self.cell_size_m,
            ..MapParams::default()
        }
    }
}
