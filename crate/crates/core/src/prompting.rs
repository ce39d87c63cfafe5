//! Prompt assembly for the four generation strategies.
//!
//! Instruction texts live in `prompts/*.txt` and are compiled in verbatim,
//! typos included, so that requests are byte-stable.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusItem};
use crate::dot::{emit_digraph, parse_digraph, ParseMode};
use crate::name::normalize_name;

const BASELINE_TASK: &str = include_str!("../prompts/baseline.txt");
const GUIDED_INSTRUCTION: &str = include_str!("../prompts/guided.txt");
const TWO_STAGE_VARIABLES: &str = include_str!("../prompts/two_stage_variables.txt");
const TWO_STAGE_LINKS: &str = include_str!("../prompts/two_stage_links.txt");

/// Default number of exemplars for few-shot strategies.
pub const DEFAULT_SHOTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Zero-shot: a task sentence and the hypothesis.
    Baseline,
    /// Few-shot exemplars only, no instructions.
    #[serde(rename = "minimal")]
    MinimalContext,
    /// Few-shot exemplars preceded by the guided instruction.
    #[serde(rename = "guided")]
    GuidedPrompts,
    /// Variables first, then links given those variables.
    TwoStage,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Baseline,
        Strategy::MinimalContext,
        Strategy::GuidedPrompts,
        Strategy::TwoStage,
    ];

    /// Wire name.
    pub fn slug(self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::MinimalContext => "minimal",
            Strategy::GuidedPrompts => "guided",
            Strategy::TwoStage => "two-stage",
        }
    }

    pub fn uses_exemplars(self) -> bool {
        self != Strategy::Baseline
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Strategy {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.slug() == s)
            .ok_or_else(|| PromptError::UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("unknown strategy {0:?} (expected baseline, minimal, guided or two-stage)")]
    UnknownStrategy(String),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("need {requested} exemplars but only {available} are available")]
    NotEnoughExemplars { requested: usize, available: usize },
    #[error("exemplar digraph does not parse: {0}")]
    InvalidExemplar(String),
    #[error("no variable names found in completion")]
    EmptyVariableList,
}

/// An input/output demonstration pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exemplar {
    dh: String,
    digraph: String,
}

impl Exemplar {
    /// The digraph must parse strictly.
    pub fn new(dh: &str, digraph: &str) -> Result<Self, PromptError> {
        parse_digraph(digraph, ParseMode::Strict)
            .map_err(|e| PromptError::InvalidExemplar(e.to_string()))?;
        Ok(Self {
            dh: dh.to_string(),
            digraph: digraph.to_string(),
        })
    }

    pub fn from_item(item: &CorpusItem) -> Self {
        Self {
            dh: item.dh.clone(),
            digraph: emit_digraph(&item.ground_truth),
        }
    }

    pub fn dh(&self) -> &str {
        &self.dh
    }

    pub fn digraph(&self) -> &str {
        &self.digraph
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParsePlan {
    ExpectDigraph,
    ExpectVariableList,
}

/// One request of a bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageRequest {
    system_preamble: String,
    body: String,
    parse_plan: ParsePlan,
    /// Byte offset in `body` where earlier-stage variables get inserted.
    variable_slot: Option<usize>,
}

impl StageRequest {
    pub fn system_preamble(&self) -> &str {
        &self.system_preamble
    }

    /// Body text; for a stage with a variable slot the slot is left empty.
    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn parse_plan(&self) -> ParsePlan {
        self.parse_plan
    }

    pub fn has_variable_slot(&self) -> bool {
        self.variable_slot.is_some()
    }

    /// The text sent to a completion provider. `variables` fills the slot
    /// (ignored for stages without one).
    pub fn render(&self, variables: &[String]) -> String {
        let mut body = self.body.clone();
        if let Some(at) = self.variable_slot {
            body.insert_str(at, &variable_block(variables));
        }
        if self.system_preamble.is_empty() {
            body
        } else {
            format!("{}\n\n{}", self.system_preamble, body)
        }
    }
}

/// The ordered requests for one strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub strategy: Strategy,
    pub stages: Vec<StageRequest>,
}

pub fn guided_instruction() -> &'static str {
    GUIDED_INSTRUCTION
}

/// `(variable-listing prompt, link-drawing prompt)`
pub fn two_stage_instructions() -> (&'static str, &'static str) {
    (TWO_STAGE_VARIABLES, TWO_STAGE_LINKS)
}

pub fn baseline_task() -> &'static str {
    BASELINE_TASK
}

/// First `k` items in corpus order, skipping `exclude_id`.
pub fn select_exemplars(
    corpus: &Corpus,
    exclude_id: Option<&str>,
    k: usize,
) -> Result<Vec<Exemplar>, PromptError> {
    let pool: Vec<&CorpusItem> = corpus
        .items()
        .iter()
        .filter(|item| Some(item.id.as_str()) != exclude_id)
        .collect();
    if pool.len() < k {
        return Err(PromptError::NotEnoughExemplars {
            requested: k,
            available: pool.len(),
        });
    }
    Ok(pool.into_iter().take(k).map(Exemplar::from_item).collect())
}

fn exemplar_block(dh: &str, digraph: &str) -> String {
    format!("Dynamic hypothesis:\n{dh}\nDOT:\n{digraph}\n\n")
}

fn variable_block(names: &[String]) -> String {
    let mut out = String::from("Variable names:\n");
    for name in names {
        out.push_str("- ");
        out.push_str(name);
        out.push('\n');
    }
    out.push('\n');
    out
}

fn stage(body: String, parse_plan: ParsePlan, variable_slot: Option<usize>) -> StageRequest {
    StageRequest {
        system_preamble: String::new(),
        body,
        parse_plan,
        variable_slot,
    }
}

pub fn build_prompt(
    strategy: Strategy,
    dh: &str,
    exemplars: &[Exemplar],
) -> Result<PromptBundle, PromptError> {
    if dh.trim().is_empty() {
        return Err(PromptError::PreconditionViolation(
            "dynamic hypothesis is empty".to_string(),
        ));
    }
    match strategy {
        Strategy::Baseline if !exemplars.is_empty() => {
            return Err(PromptError::PreconditionViolation(
                "baseline prompts take no exemplars".to_string(),
            ))
        }
        Strategy::MinimalContext | Strategy::GuidedPrompts if exemplars.is_empty() => {
            return Err(PromptError::PreconditionViolation(format!(
                "{strategy} prompts need at least one exemplar"
            )))
        }
        _ => {}
    }

    let shots: String = exemplars
        .iter()
        .map(|e| exemplar_block(&e.dh, &e.digraph))
        .collect();
    let stages = match strategy {
        Strategy::Baseline => vec![stage(
            format!("{BASELINE_TASK}\n\n{dh}\n"),
            ParsePlan::ExpectDigraph,
            None,
        )],
        Strategy::MinimalContext => vec![stage(
            format!("{shots}Dynamic hypothesis:\n{dh}\nDOT:\n"),
            ParsePlan::ExpectDigraph,
            None,
        )],
        Strategy::GuidedPrompts => vec![stage(
            format!("{GUIDED_INSTRUCTION}\n\n{shots}Dynamic hypothesis:\n{dh}\nDOT:\n"),
            ParsePlan::ExpectDigraph,
            None,
        )],
        Strategy::TwoStage => {
            let first = format!(
                "{TWO_STAGE_VARIABLES}\n\nDynamic hypothesis:\n{dh}\n\nVariable names:\n"
            );
            let second = format!(
                "{shots}Dynamic hypothesis:\n{dh}\n\n{TWO_STAGE_LINKS}\nDOT:\n"
            );
            vec![
                stage(first, ParsePlan::ExpectVariableList, None),
                stage(second, ParsePlan::ExpectDigraph, Some(shots.len())),
            ]
        }
    };
    Ok(PromptBundle { strategy, stages })
}

fn strip_list_marker(line: &str) -> &str {
    let mut rest = line.trim();
    loop {
        let before = rest;
        if let Some(r) = rest
            .strip_prefix('-')
            .or_else(|| rest.strip_prefix('*'))
            .or_else(|| rest.strip_prefix('•'))
        {
            rest = r.trim_start();
        }
        let digits = rest.len() - rest.trim_start_matches(|c: char| c.is_ascii_digit()).len();
        if digits > 0 {
            let after = &rest[digits..];
            if let Some(r) = after.strip_prefix('.').or_else(|| after.strip_prefix(')')) {
                if r.is_empty() || r.starts_with(char::is_whitespace) {
                    rest = r.trim_start();
                }
            }
        }
        if rest == before {
            return rest;
        }
    }
}

fn strip_quotes(s: &str) -> &str {
    let quotes: &[char] = &['"', '\'', '`', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}'];
    s.trim_matches(quotes).trim()
}

/// Reads one variable name per line, dropping list markers, quotes, header
/// lines ending in `:` and repeats of an already-seen normalized name.
pub fn parse_variable_list(completion: &str) -> Result<Vec<String>, PromptError> {
    let mut seen = BTreeSet::new();
    let mut names = Vec::new();
    for line in completion.lines() {
        let name = strip_quotes(strip_list_marker(line));
        if name.is_empty() || name.ends_with(':') {
            continue;
        }
        let key = normalize_name(name);
        if key.is_empty() || !seen.insert(key) {
            continue;
        }
        names.push(name.to_string());
    }
    if names.is_empty() {
        return Err(PromptError::EmptyVariableList);
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::bundled_goldens;

    #[test]
    fn strategy_slugs_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.slug().parse::<Strategy>().unwrap(), s);
        }
        assert!("zero-shot".parse::<Strategy>().is_err());
    }

    #[test]
    fn guided_instruction_is_stable() {
        assert!(guided_instruction().starts_with("First, Render a list of variable names"));
        assert!(guided_instruction().contains("[vee]"));
        assert!(guided_instruction().contains("[tee]"));
        assert!(guided_instruction().contains("for which the the meaning"));
        assert_eq!(guided_instruction(), guided_instruction());
    }

    #[test]
    fn two_stage_texts() {
        let (first, second) = two_stage_instructions();
        assert!(first.contains("nouns or nouns phrases"));
        assert!(second.contains("Step 2: [arrowhead=vee] indicates a positive relationship."));
        assert!(second.ends_with("based on the cause-effect relationship."));
    }

    #[test]
    fn exemplar_selection_is_leave_one_out() {
        let goldens = bundled_goldens();
        let picked = select_exemplars(&goldens, Some("rabbit-population"), 2).unwrap();
        assert_eq!(picked.len(), 2);
        assert_eq!(picked[0].dh(), goldens.items()[1].dh);
        assert_eq!(picked[1].dh(), goldens.items()[2].dh);
        assert!(select_exemplars(&goldens, None, 0).unwrap().is_empty());
        assert_eq!(
            select_exemplars(&goldens, Some("rabbit-population"), 4),
            Err(PromptError::NotEnoughExemplars {
                requested: 4,
                available: 3
            })
        );
    }

    #[test]
    fn minimal_context_has_one_block_per_exemplar() {
        let goldens = bundled_goldens();
        let shots = select_exemplars(&goldens, Some("rabbit-population"), 2).unwrap();
        let bundle = build_prompt(Strategy::MinimalContext, "target dh", &shots).unwrap();
        assert_eq!(bundle.stages.len(), 1);
        let body = bundle.stages[0].body();
        assert_eq!(body.matches("Dynamic hypothesis:").count(), 3);
        assert!(body.ends_with("Dynamic hypothesis:\ntarget dh\nDOT:\n"));
        assert!(!body.contains(guided_instruction()));
    }

    #[test]
    fn baseline_has_no_exemplar_blocks() {
        let bundle = build_prompt(Strategy::Baseline, "some dh", &[]).unwrap();
        assert_eq!(bundle.stages.len(), 1);
        assert!(!bundle.stages[0].body().contains("DOT:"));
        assert!(bundle.stages[0].body().starts_with(baseline_task()));
        let goldens = bundled_goldens();
        let shots = select_exemplars(&goldens, None, 1).unwrap();
        assert!(matches!(
            build_prompt(Strategy::Baseline, "dh", &shots),
            Err(PromptError::PreconditionViolation(_))
        ));
    }

    #[test]
    fn few_shot_strategies_need_exemplars_and_dh() {
        for s in [Strategy::MinimalContext, Strategy::GuidedPrompts] {
            assert!(matches!(
                build_prompt(s, "dh", &[]),
                Err(PromptError::PreconditionViolation(_))
            ));
        }
        assert!(matches!(
            build_prompt(Strategy::TwoStage, " \n", &[]),
            Err(PromptError::PreconditionViolation(_))
        ));
    }

    #[test]
    fn two_stage_fills_variables_into_second_stage() {
        let goldens = bundled_goldens();
        let shots = select_exemplars(&goldens, Some("new-car-inventory"), 1).unwrap();
        let bundle = build_prompt(Strategy::TwoStage, "the dh", &shots).unwrap();
        assert_eq!(bundle.stages.len(), 2);
        assert_eq!(bundle.stages[0].parse_plan(), ParsePlan::ExpectVariableList);
        assert_eq!(bundle.stages[1].parse_plan(), ParsePlan::ExpectDigraph);
        assert!(bundle.stages[0].body().starts_with(two_stage_instructions().0));
        let names = vec!["inventory".to_string(), "market price".to_string()];
        let text = bundle.stages[1].render(&names);
        let vars = text.find("Variable names:\n- inventory\n- market price\n").unwrap();
        let target = text.find("Dynamic hypothesis:\nthe dh").unwrap();
        let shot = text.find(shots[0].digraph()).unwrap();
        assert!(shot < vars && vars < target);
        assert!(text.contains(two_stage_instructions().1));
    }

    #[test]
    fn preamble_is_prefixed_when_set() {
        let mut bundle = build_prompt(Strategy::Baseline, "dh", &[]).unwrap();
        bundle.stages[0].system_preamble = "You are a modeler.".to_string();
        assert!(bundle.stages[0].render(&[]).starts_with("You are a modeler.\n\n"));
    }

    #[test]
    fn variable_list_parsing() {
        assert_eq!(
            parse_variable_list("1. Smoking\n2. Need for cigarettes\n3. Addiction time").unwrap(),
            ["Smoking", "Need for cigarettes", "Addiction time"]
        );
        assert_eq!(parse_variable_list("- inventory\n- Inventory\n").unwrap(), ["inventory"]);
        assert_eq!(parse_variable_list(""), Err(PromptError::EmptyVariableList));
        assert_eq!(
            parse_variable_list("Variable names:\n* \"work pressure\"\n2) due date\n\n   \n").unwrap(),
            ["work pressure", "due date"]
        );
        assert_eq!(parse_variable_list("2020 sales").unwrap(), ["2020 sales"]);
    }
}
