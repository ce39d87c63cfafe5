use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{prompt_hash, Completion, CompletionProvider, ProviderError, ProviderKind};

/// A failure to inject for a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockFailure {
    Timeout,
    RateLimited,
    Auth,
}

impl MockFailure {
    fn as_str(self) -> &'static str {
        match self {
            MockFailure::Timeout => "timeout",
            MockFailure::RateLimited => "rate-limited",
            MockFailure::Auth => "auth",
        }
    }

    fn error(self) -> ProviderError {
        match self {
            MockFailure::Timeout => ProviderError::Timeout,
            MockFailure::RateLimited => ProviderError::RateLimited,
            MockFailure::Auth => ProviderError::Auth("mock credentials rejected".into()),
        }
    }
}

#[derive(Debug, Clone)]
enum Reply {
    Text(String),
    Fail(MockFailure),
}

/// Replays stored completions.
///
/// Fixtures live in memory or in a directory as `<prompt hash>.txt` holding
/// the raw completion. A `<prompt hash>.error` file containing `timeout`,
/// `rate-limited` or `auth` makes that prompt fail instead; any other content
/// becomes a provider error message.
#[derive(Debug, Clone)]
pub struct MockProvider {
    dir: Option<PathBuf>,
    replies: HashMap<String, Reply>,
    model_id: String,
}

impl Default for MockProvider {
    fn default() -> Self {
        Self::new()
    }
}

impl MockProvider {
    pub fn new() -> Self {
        Self {
            dir: None,
            replies: HashMap::new(),
            model_id: "mock".to_string(),
        }
    }

    /// Directory fixtures are read on each call, so files added later are seen.
    pub fn from_dir(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(io::Error::new(
                io::ErrorKind::NotFound,
                format!("fixture directory {} does not exist", dir.display()),
            ));
        }
        Ok(Self {
            dir: Some(dir),
            ..Self::new()
        })
    }

    pub fn with_completion(mut self, prompt: &str, completion: impl Into<String>) -> Self {
        self.replies
            .insert(prompt_hash(prompt), Reply::Text(completion.into()));
        self
    }

    pub fn with_failure(mut self, prompt: &str, failure: MockFailure) -> Self {
        self.replies.insert(prompt_hash(prompt), Reply::Fail(failure));
        self
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn lookup_files(&self, hash: &str) -> Result<Option<Completion>, ProviderError> {
        let Some(dir) = &self.dir else {
            return Ok(None);
        };
        let read = |ext: &str| -> Result<Option<String>, ProviderError> {
            match fs::read_to_string(dir.join(format!("{hash}.{ext}"))) {
                Ok(text) => Ok(Some(text)),
                Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(ProviderError::provider(format!("cannot read fixture {hash}: {e}"))),
            }
        };
        if let Some(error) = read("error")? {
            let error = error.trim();
            return Err(
                [MockFailure::Timeout, MockFailure::RateLimited, MockFailure::Auth]
                    .into_iter()
                    .find(|f| f.as_str() == error)
                    .map(MockFailure::error)
                    .unwrap_or_else(|| ProviderError::provider(error.to_string())),
            );
        }
        Ok(read("txt")?.map(Completion::text))
    }
}

impl CompletionProvider for MockProvider {
    fn complete(&self, prompt: &str) -> Result<Completion, ProviderError> {
        let hash = prompt_hash(prompt);
        match self.replies.get(&hash) {
            Some(Reply::Text(text)) => return Ok(Completion::text(text.clone())),
            Some(Reply::Fail(failure)) => return Err(failure.error()),
            None => {}
        }
        self.lookup_files(&hash)?
            .ok_or_else(|| ProviderError::provider(format!("no fixture for prompt {hash}")))
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::Mock
    }
}

/// Writes `<hash>.txt` for `prompt` under `dir`, creating the directory.
pub fn write_fixture(dir: &Path, prompt: &str, completion: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.txt", prompt_hash(prompt)));
    fs::write(&path, completion)?;
    Ok(path)
}

pub fn write_failure_fixture(dir: &Path, prompt: &str, failure: MockFailure) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.error", prompt_hash(prompt)));
    fs::write(&path, failure.as_str())?;
    Ok(path)
}

/// Passes calls through and saves every completion as a mock fixture, so a
/// live session can be replayed later with [`MockProvider::from_dir`].
#[derive(Debug)]
pub struct RecordingProvider<P> {
    inner: P,
    dir: PathBuf,
}

impl<P: CompletionProvider> RecordingProvider<P> {
    pub fn new(inner: P, dir: impl Into<PathBuf>) -> Self {
        Self {
            inner,
            dir: dir.into(),
        }
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: CompletionProvider> CompletionProvider for RecordingProvider<P> {
    fn complete(&self, prompt: &str) -> Result<Completion, ProviderError> {
        let completion = self.inner.complete(prompt)?;
        write_fixture(&self.dir, prompt, &completion.text)
            .map_err(|e| ProviderError::provider(format!("cannot record fixture: {e}")))?;
        Ok(completion)
    }

    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn kind(&self) -> ProviderKind {
        self.inner.kind()
    }
}
