use std::time::Duration;

use serde::{Deserialize, Serialize};

pub const DEFAULT_API_KEY_ENV: &str = "LLM_API_KEY";

/// Sampling is always off; this is the only mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoding {
    #[default]
    Greedy,
}

/// Request/response shape of the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApiStyle {
    /// `messages` in, `choices[0].message.content` out.
    #[default]
    Chat,
    /// `prompt` in, `choices[0].text` out.
    Completions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model_id: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub retry_base_delay_ms: u64,
    #[serde(default)]
    pub decoding: Decoding,
    #[serde(default)]
    pub api_style: ApiStyle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.to_string()
}

fn default_timeout_secs() -> u64 {
    60
}

fn default_max_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    1000
}

impl ProviderConfig {
    pub fn new(endpoint: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model_id: model_id.into(),
            api_key_env: default_key_env(),
            timeout_secs: default_timeout_secs(),
            max_retries: default_max_retries(),
            retry_base_delay_ms: default_backoff_ms(),
            decoding: Decoding::Greedy,
            api_style: ApiStyle::Chat,
            max_tokens: None,
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    /// Delay before retry number `retry` (1-based): base, 2x base, 4x base...
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64 << retry.saturating_sub(1).min(16);
        Duration::from_millis(self.retry_base_delay_ms.saturating_mul(factor))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c: ProviderConfig =
            serde_json::from_str(r#"{"endpoint": "http://x", "model_id": "m"}"#).unwrap();
        assert_eq!(c, ProviderConfig::new("http://x", "m"));
        assert_eq!(c.api_key_env, "LLM_API_KEY");
        assert_eq!(c.max_retries, 3);
    }

    #[test]
    fn exponential_backoff_from_one_second() {
        let c = ProviderConfig::new("http://x", "m");
        let delays: Vec<u64> = (1..=3).map(|r| c.backoff(r).as_millis() as u64).collect();
        assert_eq!(delays, [1000, 2000, 4000]);
    }

    #[test]
    fn unknown_decoding_rejected() {
        let r: Result<ProviderConfig, _> = serde_json::from_str(
            r#"{"endpoint": "http://x", "model_id": "m", "decoding": "nucleus"}"#,
        );
        assert!(r.is_err());
    }
}
