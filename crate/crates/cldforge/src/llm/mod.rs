//! Completion providers.
//!
//! Every provider maps one prompt to one completion under greedy decoding.
//! [`MockProvider`] replays stored completions keyed by [`prompt_hash`];
//! [`LiveProvider`] talks JSON over HTTP through an [`HttpTransport`].

mod config;
mod live;
mod mock;

pub use config::{ApiStyle, Decoding, ProviderConfig, DEFAULT_API_KEY_ENV};
pub use live::{HttpRequest, HttpResponse, HttpTransport, LiveProvider, ReqwestTransport, TransportError};
pub use mock::{write_failure_fixture, write_fixture, MockFailure, MockProvider, RecordingProvider};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("request timed out")]
    Timeout,
    #[error("rate limited by provider")]
    RateLimited,
    #[error("provider error{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Provider { status: Option<u16>, message: String },
}

impl ProviderError {
    pub fn provider(message: impl Into<String>) -> Self {
        ProviderError::Provider {
            status: None,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Mock,
    Live,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Completion {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    /// Wall-clock time of the call; mocks leave it unset so records stay
    /// reproducible.
    pub latency_ms: Option<u64>,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            ..Self::default()
        }
    }
}

/// Must be callable from several threads at once.
pub trait CompletionProvider: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<Completion, ProviderError>;
    fn model_id(&self) -> &str;
    fn kind(&self) -> ProviderKind;
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for &P {
    fn complete(&self, prompt: &str) -> Result<Completion, ProviderError> {
        (**self).complete(prompt)
    }
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn kind(&self) -> ProviderKind {
        (**self).kind()
    }
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for Box<P> {
    fn complete(&self, prompt: &str) -> Result<Completion, ProviderError> {
        (**self).complete(prompt)
    }
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn kind(&self) -> ProviderKind {
        (**self).kind()
    }
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for std::sync::Arc<P> {
    fn complete(&self, prompt: &str) -> Result<Completion, ProviderError> {
        (**self).complete(prompt)
    }
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn kind(&self) -> ProviderKind {
        (**self).kind()
    }
}

/// Lowercase hex SHA-256 of the exact prompt bytes.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}
