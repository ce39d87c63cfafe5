//! Causal loop diagram generation and evaluation: corpus files, language
//! model providers, the generation pipeline, the `cldforge` command line and
//! the HTTP service. The diagram model and metrics live in `cldforge_core`.

pub mod cli;
pub mod config;
pub mod corpus_file;
pub mod fixtures;
pub mod llm;
pub mod pipeline;
pub mod service;

pub use config::{ProviderSettings, ServiceConfig};
pub use corpus_file::{load_corpus, parse_corpus, save_corpus, CorpusFileError};
pub use llm::{CompletionProvider, LiveProvider, MockProvider, ProviderConfig, ProviderError};
pub use pipeline::{batch_generate, run_pipeline, GenerationRecord, PipelineError};
