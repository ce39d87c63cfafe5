use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{ApiStyle, Completion, CompletionProvider, ProviderConfig, ProviderError, ProviderKind};

const EXCERPT_CHARS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    Timeout,
    Connection(String),
}

/// Sends one JSON POST. Implementations must be thread-safe.
pub trait HttpTransport: Send + Sync {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError>;
}

#[derive(Debug, Clone)]
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    /// Must not be called from inside an async runtime.
    pub fn new() -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| ProviderError::provider(format!("cannot build HTTP client: {e}")))?;
        Ok(Self { client })
    }
}

impl HttpTransport for ReqwestTransport {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let mut builder = self
            .client
            .post(&request.url)
            .timeout(request.timeout)
            .body(request.body.clone());
        for (name, value) in &request.headers {
            builder = builder.header(name, value);
        }
        let classify = |e: reqwest::Error| {
            if e.is_timeout() {
                TransportError::Timeout
            } else {
                TransportError::Connection(e.to_string())
            }
        };
        let response = builder.send().map_err(classify)?;
        let status = response.status().as_u16();
        let body = response.text().map_err(classify)?;
        Ok(HttpResponse { status, body })
    }
}

/// JSON-over-HTTP provider with greedy decoding and retry.
///
/// Timeouts, connection failures, 429 and 5xx responses are retried up to
/// `max_retries` times with exponential backoff.
pub struct LiveProvider<T = ReqwestTransport> {
    config: ProviderConfig,
    api_key: String,
    transport: T,
}

impl LiveProvider<ReqwestTransport> {
    /// Reads the API key from the configured environment variable.
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        let api_key = resolve_api_key(&config)?;
        Ok(Self::with_transport(config, api_key, ReqwestTransport::new()?))
    }
}

pub(crate) fn resolve_api_key(config: &ProviderConfig) -> Result<String, ProviderError> {
    match std::env::var(&config.api_key_env) {
        Ok(key) if !key.trim().is_empty() => Ok(key),
        _ => Err(ProviderError::Auth(format!(
            "environment variable {} is not set",
            config.api_key_env
        ))),
    }
}

impl<T: HttpTransport> LiveProvider<T> {
    pub fn with_transport(config: ProviderConfig, api_key: String, transport: T) -> Self {
        Self {
            config,
            api_key,
            transport,
        }
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    /// The serialized request for `prompt`.
    pub fn request_for(&self, prompt: &str) -> HttpRequest {
        let mut body = match self.config.api_style {
            ApiStyle::Chat => json!({
                "model": self.config.model_id,
                "messages": [{"role": "user", "content": prompt}],
            }),
            ApiStyle::Completions => json!({
                "model": self.config.model_id,
                "prompt": prompt,
            }),
        };
        body["temperature"] = json!(0);
        body["top_p"] = json!(1);
        body["n"] = json!(1);
        if let Some(max_tokens) = self.config.max_tokens {
            body["max_tokens"] = json!(max_tokens);
        }
        HttpRequest {
            url: self.config.endpoint.clone(),
            headers: vec![
                ("Content-Type".into(), "application/json".into()),
                ("Authorization".into(), format!("Bearer {}", self.api_key)),
            ],
            body: serde_json::to_vec(&body).expect("request JSON is serializable"),
            timeout: self.config.timeout(),
        }
    }

    /// One attempt; the flag says whether a failure may be retried.
    fn attempt(&self, request: &HttpRequest) -> Result<Completion, (ProviderError, bool)> {
        let started = Instant::now();
        let response = self.transport.post(request).map_err(|e| match e {
            TransportError::Timeout => (ProviderError::Timeout, true),
            TransportError::Connection(message) => (ProviderError::provider(message), true),
        })?;
        let latency_ms = started.elapsed().as_millis() as u64;
        match response.status {
            200..=299 => {}
            401 | 403 => return Err((ProviderError::Auth(excerpt(&response.body)), false)),
            408 => return Err((ProviderError::Timeout, true)),
            429 => return Err((ProviderError::RateLimited, true)),
            status => {
                return Err((
                    ProviderError::Provider {
                        status: Some(status),
                        message: excerpt(&response.body),
                    },
                    status >= 500,
                ))
            }
        }
        let mut completion = parse_response(&response.body, self.config.api_style).ok_or_else(|| {
            (
                ProviderError::Provider {
                    status: Some(response.status),
                    message: format!("unexpected response body: {}", excerpt(&response.body)),
                },
                false,
            )
        })?;
        completion.latency_ms = Some(latency_ms);
        Ok(completion)
    }
}

fn excerpt(body: &str) -> String {
    let mut out: String = body.chars().take(EXCERPT_CHARS).collect();
    if body.chars().nth(EXCERPT_CHARS).is_some() {
        out.push_str("...");
    }
    out
}

fn parse_response(body: &str, style: ApiStyle) -> Option<Completion> {
    let value: Value = serde_json::from_str(body).ok()?;
    let choice = value.get("choices")?.get(0)?;
    let text = match style {
        ApiStyle::Chat => choice.get("message")?.get("content")?.as_str()?,
        ApiStyle::Completions => choice.get("text")?.as_str()?,
    };
    let usage = value.get("usage");
    let tokens = |key: &str| usage.and_then(|u| u.get(key)).and_then(Value::as_u64);
    Some(Completion {
        text: text.to_string(),
        prompt_tokens: tokens("prompt_tokens"),
        completion_tokens: tokens("completion_tokens"),
        latency_ms: None,
    })
}

impl<T: HttpTransport> CompletionProvider for LiveProvider<T> {
    fn complete(&self, prompt: &str) -> Result<Completion, ProviderError> {
        let request = self.request_for(prompt);
        let mut retry = 0;
        loop {
            match self.attempt(&request) {
                Ok(completion) => return Ok(completion),
                Err((_, true)) if retry < self.config.max_retries => {
                    retry += 1;
                    std::thread::sleep(self.config.backoff(retry));
                }
                Err((error, _)) => return Err(error),
            }
        }
    }

    fn model_id(&self) -> &str {
        &self.config.model_id
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::Live
    }
}
