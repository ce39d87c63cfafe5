//! Service configuration, loadable from the JSON file named by
//! `CLDFORGE_CONFIG`.
//!
//! ```json
//! {
//!   "listen": "127.0.0.1:8080",
//!   "provider": {"kind": "mock", "fixtures": "fixtures"},
//!   "corpus_path": null,
//!   "threshold": 0.8,
//!   "shots": 3,
//!   "body_limit_bytes": 1048576,
//!   "transcript_capacity": 256,
//!   "parallelism": 4
//! }
//! ```
//!
//! A live provider is `{"kind": "live", "endpoint": "...", "model_id": "...", ...}`
//! with the remaining [`ProviderConfig`] fields optional.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cldforge_core::{bundled_goldens, Corpus, Threshold};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus_file::{load_corpus, CorpusFileError};
use crate::llm::{CompletionProvider, LiveProvider, MockProvider, ProviderConfig, ProviderError};

pub const CONFIG_ENV: &str = "CLDFORGE_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Corpus(#[from] CorpusFileError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderSettings {
    Mock { fixtures: PathBuf },
    Live(ProviderConfig),
}

impl ProviderSettings {
    /// Live providers resolve their API key here. Must not be called from
    /// inside an async runtime.
    pub fn build(&self) -> Result<Arc<dyn CompletionProvider>, ConfigError> {
        Ok(match self {
            ProviderSettings::Mock { fixtures } => Arc::new(
                MockProvider::from_dir(fixtures).map_err(|e| ConfigError::Invalid(e.to_string()))?,
            ),
            ProviderSettings::Live(config) => Arc::new(LiveProvider::new(config.clone())?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub provider: ProviderSettings,
    /// Bundled goldens when unset.
    pub corpus_path: Option<PathBuf>,
    pub threshold: f64,
    pub shots: usize,
    pub body_limit_bytes: usize,
    pub transcript_capacity: usize,
    /// Concurrent provider calls across all requests.
    pub parallelism: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            provider: ProviderSettings::Mock {
                fixtures: PathBuf::from("fixtures"),
            },
            corpus_path: None,
            threshold: Threshold::DEFAULT.value(),
            shots: cldforge_core::DEFAULT_SHOTS,
            body_limit_bytes: 1 << 20,
            transcript_capacity: 256,
            parallelism: 4,
        }
    }
}

impl ServiceConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: Self =
            serde_json::from_str(&text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// The file named by `CLDFORGE_CONFIG`, if set.
    pub fn from_env() -> Result<Option<Self>, ConfigError> {
        match std::env::var_os(CONFIG_ENV) {
            Some(path) if !path.is_empty() => Self::from_file(Path::new(&path)).map(Some),
            _ => Ok(None),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.threshold()?;
        if self.body_limit_bytes == 0 {
            return Err(ConfigError::Invalid("body_limit_bytes must be positive".into()));
        }
        if self.transcript_capacity == 0 {
            return Err(ConfigError::Invalid("transcript_capacity must be positive".into()));
        }
        if self.parallelism == 0 {
            return Err(ConfigError::Invalid("parallelism must be at least 1".into()));
        }
        Ok(())
    }

    pub fn threshold(&self) -> Result<Threshold, ConfigError> {
        Threshold::new(self.threshold).ok_or_else(|| {
            ConfigError::Invalid(format!("threshold {} is outside (0, 1]", self.threshold))
        })
    }

    pub fn corpus(&self) -> Result<Corpus, ConfigError> {
        Ok(match &self.corpus_path {
            Some(path) => load_corpus(path)?,
            None => bundled_goldens(),
        })
    }
}
