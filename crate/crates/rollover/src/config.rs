//! Run configuration read from TOML.
//!
//! ```toml
//! workers = 0
//!
//! [calibration]
//! seed = 7
//! factors = 3
//!
//! [mc]
//! n_paths = 100000
//! scheme = "exact"
//! ```
//!
//! Every key is optional; missing keys take their defaults.

use std::fs;
use std::path::Path;

use rollover_core::calibration::CalibrationConfig;
use serde::{Deserialize, Serialize};

use crate::mc::McConfig;

/// Complete run configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Calibration settings.
    pub calibration: CalibrationConfig,
    /// Monte Carlo settings.
    pub mc: McConfig,
    /// Worker threads for calibration; `0` uses every available core.
    pub workers: usize,
}

/// Failures while reading a configuration.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    /// File could not be read.
    #[error("{path}: {source}")]
    Io {
        /// File involved.
        path: String,
        /// Cause.
        #[source]
        source: std::io::Error,
    },
    /// Malformed TOML or unknown key.
    #[error("{path}: {source}")]
    Parse {
        /// File involved.
        path: String,
        /// Cause.
        #[source]
        source: toml::de::Error,
    },
}

impl Config {
    /// Parses TOML text.
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads a TOML file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Config::from_toml(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    /// Sets both the calibration and the Monte Carlo seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.calibration.seed = seed;
        self.mc.seed = seed;
        self
    }
}
