//! Mock fixtures that answer each corpus item with its own ground truth.

use std::io;
use std::path::Path;

use cldforge_core::{emit_digraph, parse_variable_list, Corpus, PromptError, Strategy};
use thiserror::Error;

use crate::llm::write_fixture;
use crate::pipeline::plan;

/// Final-stage completion for items seeded as prose.
pub const PROSE_COMPLETION: &str = "This hypothesis describes variables that influence each other \
over time. As one grows, it drives the others, which in turn feed back on it.";

#[derive(Debug, Error)]
pub enum SeedError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("cannot write fixture: {0}")]
    Io(#[from] io::Error),
}

/// Writes fixtures so that batch generation over `corpus` with `k` shots
/// reproduces every ground truth under each strategy. Items listed in
/// `prose_ids` get [`PROSE_COMPLETION`] as their final completion instead.
/// Returns the number of files written.
pub fn seed_golden_fixtures(
    dir: &Path,
    corpus: &Corpus,
    strategies: &[Strategy],
    k: usize,
    prose_ids: &[&str],
) -> Result<usize, SeedError> {
    let mut written = 0;
    for strategy in strategies {
        for item in corpus.items() {
            let bundle = plan(*strategy, item.dh.trim(), corpus, k, Some(&item.id))?;
            let final_text = if prose_ids.contains(&item.id.as_str()) {
                PROSE_COMPLETION.to_string()
            } else {
                emit_digraph(&item.ground_truth)
            };
            let mut variables = Vec::new();
            let last = bundle.stages.len() - 1;
            for (i, stage) in bundle.stages.iter().enumerate() {
                let prompt = stage.render(&variables);
                if i == last {
                    write_fixture(dir, &prompt, &final_text)?;
                } else {
                    let listing: String = item
                        .ground_truth
                        .variables()
                        .iter()
                        .map(|v| format!("- {}\n", v.raw()))
                        .collect();
                    variables = parse_variable_list(&listing)?;
                    write_fixture(dir, &prompt, &listing)?;
                }
                written += 1;
            }
        }
    }
    Ok(written)
}
