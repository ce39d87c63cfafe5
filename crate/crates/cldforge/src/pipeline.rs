//! From a dynamic hypothesis to a generated diagram.
//!
//! Stages run in order. For two-stage prompting the first completion is read
//! as a variable list and injected into the second request. The last
//! completion is searched for a digraph block, which is parsed leniently.
//! Parse failures are recorded in the [`GenerationRecord`]; only provider
//! errors abort.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use cldforge_core::{
    build_prompt, emit_digraph, extract_digraph_block, parse_digraph, parse_variable_list,
    select_exemplars, CausalLoopDiagram, Corpus, DotError, ItemOutcome, ParseDiagnostic, ParseMode,
    ParsePlan, PromptBundle, PromptError, Severity, Strategy,
};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::llm::{Completion, CompletionProvider, ProviderError};

pub const NO_DIGRAPH_MESSAGE: &str = "no digraph found in completion";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("parallelism must be at least 1")]
    ZeroParallelism,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageTranscript {
    pub request: String,
    pub completion: String,
}

/// Summed over stages; a token count is present only if every stage
/// reported it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProviderMeta {
    pub model_id: String,
    pub latency_ms: Option<u64>,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

impl ProviderMeta {
    fn new(model_id: &str) -> Self {
        Self {
            model_id: model_id.to_string(),
            latency_ms: None,
            prompt_tokens: Some(0),
            completion_tokens: Some(0),
        }
    }

    fn add(&mut self, c: &Completion) {
        if let Some(ms) = c.latency_ms {
            self.latency_ms = Some(self.latency_ms.unwrap_or(0) + ms);
        }
        self.prompt_tokens = self.prompt_tokens.zip(c.prompt_tokens).map(|(a, b)| a + b);
        self.completion_tokens = self.completion_tokens.zip(c.completion_tokens).map(|(a, b)| a + b);
    }

    fn finish(&mut self, stages: usize) {
        if stages == 0 {
            self.prompt_tokens = None;
            self.completion_tokens = None;
        }
    }
}

/// Everything one generation produced. `diagram` serializes as canonical
/// digraph text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenerationRecord {
    pub item_id: Option<String>,
    pub strategy: Strategy,
    pub dh: String,
    pub stage_transcripts: Vec<StageTranscript>,
    /// Names read from the first two-stage completion.
    pub variables: Option<Vec<String>>,
    #[serde(serialize_with = "digraph_text")]
    pub diagram: Option<CausalLoopDiagram>,
    pub diagnostics: Vec<ParseDiagnostic>,
    pub provider_meta: ProviderMeta,
    /// Provider failure that cut the run short.
    pub error: Option<String>,
}

impl GenerationRecord {
    /// Finished without a provider error but produced no diagram.
    pub fn is_no_digraph(&self) -> bool {
        self.diagram.is_none() && self.error.is_none()
    }

    pub fn digraph(&self) -> Option<String> {
        self.diagram.as_ref().map(emit_digraph)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("records are serializable")
    }
}

fn digraph_text<S: Serializer>(d: &Option<CausalLoopDiagram>, s: S) -> Result<S::Ok, S::Error> {
    d.as_ref().map(emit_digraph).serialize(s)
}

fn diagnostic(message: &str) -> ParseDiagnostic {
    ParseDiagnostic {
        line: 1,
        column: 1,
        message: message.to_string(),
        severity: Severity::Error,
    }
}

/// The corpus item whose hypothesis is `dh`, kept out of the exemplars.
pub fn exclusion_for<'a>(corpus: &'a Corpus, dh: &str) -> Option<&'a str> {
    corpus
        .items()
        .iter()
        .find(|item| item.dh.trim() == dh.trim())
        .map(|item| item.id.as_str())
}

/// The prompts a generation sends. Baseline ignores `k`.
pub fn plan(
    strategy: Strategy,
    dh: &str,
    corpus: &Corpus,
    k: usize,
    exclude_id: Option<&str>,
) -> Result<PromptBundle, PromptError> {
    let exemplars = if strategy.uses_exemplars() {
        select_exemplars(corpus, exclude_id, k)?
    } else {
        Vec::new()
    };
    build_prompt(strategy, dh, &exemplars)
}

fn execute(
    provider: &dyn CompletionProvider,
    bundle: &PromptBundle,
    dh: &str,
    item_id: Option<&str>,
) -> (GenerationRecord, Option<ProviderError>) {
    let mut record = GenerationRecord {
        item_id: item_id.map(str::to_string),
        strategy: bundle.strategy,
        dh: dh.to_string(),
        stage_transcripts: Vec::new(),
        variables: None,
        diagram: None,
        diagnostics: Vec::new(),
        provider_meta: ProviderMeta::new(provider.model_id()),
        error: None,
    };
    let mut failure = None;
    let mut variables: Vec<String> = Vec::new();

    for stage in &bundle.stages {
        let request = stage.render(&variables);
        let completion = match provider.complete(&request) {
            Ok(c) => c,
            Err(e) => {
                record.error = Some(e.to_string());
                failure = Some(e);
                break;
            }
        };
        record.provider_meta.add(&completion);
        record.stage_transcripts.push(StageTranscript {
            request,
            completion: completion.text.clone(),
        });

        match stage.parse_plan() {
            ParsePlan::ExpectVariableList => match parse_variable_list(&completion.text) {
                Ok(names) => {
                    variables = names.clone();
                    record.variables = Some(names);
                }
                Err(e) => {
                    record.diagnostics.push(diagnostic(&e.to_string()));
                    break;
                }
            },
            ParsePlan::ExpectDigraph => {
                match extract_digraph_block(&completion.text)
                    .and_then(|block| parse_digraph(block, ParseMode::Lenient))
                {
                    Ok(parsed) => {
                        record.diagram = Some(parsed.diagram);
                        record.diagnostics.extend(parsed.diagnostics);
                    }
                    Err(DotError::Syntax(d)) => record.diagnostics.push(d),
                    Err(DotError::NoDigraphFound) => {
                        record.diagnostics.push(diagnostic(NO_DIGRAPH_MESSAGE))
                    }
                }
            }
        }
    }
    record.provider_meta.finish(record.stage_transcripts.len());
    (record, failure)
}

/// Generates a diagram for `dh`, trimmed of surrounding whitespace. A corpus
/// item with the same hypothesis is excluded from the exemplars.
pub fn run_pipeline(
    provider: &dyn CompletionProvider,
    strategy: Strategy,
    dh: &str,
    corpus: &Corpus,
    k: usize,
) -> Result<GenerationRecord, PipelineError> {
    let dh = dh.trim();
    let bundle = plan(strategy, dh, corpus, k, exclusion_for(corpus, dh))?;
    match execute(provider, &bundle, dh, None) {
        (_, Some(error)) => Err(error.into()),
        (record, None) => Ok(record),
    }
}

/// One record per corpus item, in corpus order, each generated with that
/// item left out of the exemplars. At most `parallelism` provider calls are
/// in flight. Provider failures are noted in the item's record.
pub fn batch_generate(
    provider: &dyn CompletionProvider,
    strategy: Strategy,
    corpus: &Corpus,
    k: usize,
    parallelism: usize,
) -> Result<Vec<GenerationRecord>, PipelineError> {
    if parallelism == 0 {
        return Err(PipelineError::ZeroParallelism);
    }
    let bundles = corpus
        .items()
        .iter()
        .map(|item| plan(strategy, item.dh.trim(), corpus, k, Some(&item.id)))
        .collect::<Result<Vec<_>, _>>()?;

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<GenerationRecord>>> =
        bundles.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..parallelism.min(bundles.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(bundle) = bundles.get(i) else { break };
                let item = &corpus.items()[i];
                let (record, _) = execute(provider, bundle, item.dh.trim(), Some(&item.id));
                *slots[i].lock().unwrap() = Some(record);
            });
        }
    });
    Ok(slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every item is processed"))
        .collect())
}

/// Views for [`cldforge_core::batch_report`].
pub fn item_outcomes(records: &[GenerationRecord]) -> Vec<ItemOutcome<'_>> {
    records
        .iter()
        .map(|r| ItemOutcome {
            id: r.item_id.as_deref().unwrap_or(""),
            diagram: r.diagram.as_ref(),
            error: r.error.as_deref(),
        })
        .collect()
}
