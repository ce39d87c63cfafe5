//! Causal loop diagrams generated from dynamic hypotheses.
//!
//! This crate is `no_std` (it needs `alloc`) and holds everything that does
//! not touch the outside world: the diagram model, feedback loop analysis,
//! the digraph text format, the golden corpus, prompt assembly and the
//! evaluation metrics. The `cldforge` crate adds file formats, the model
//! client, the CLI and the HTTP service.
#![no_std]
extern crate alloc;

pub mod corpus;
pub mod diagram;
pub mod dot;
pub mod eval;
pub mod loops;
pub mod name;
pub mod prompting;

pub use corpus::{
    bundled_goldens, Corpus, CorpusError, CorpusItem, ASSIGNMENT_BACKLOG_DH, CAR_INVENTORY_DH, CIGARETTE_DH,
    RABBIT_DH, RABBIT_DIGRAPH,
};
pub use diagram::{build_diagram, exogenous_variables, CausalLoopDiagram, DiagramError, Link, Polarity};
pub use dot::{
    emit_digraph, emit_render_dot, extract_digraph_block, parse_digraph, DotError, ParseDiagnostic,
    ParseMode, ParsedDigraph, Severity,
};
pub use eval::{
    batch_report, evaluate, match_nodes, name_similarity, AggregateMetrics, AggregateReport, AlignmentError,
    EvalReport, ItemOutcome, ItemReport, NodeMatching, Prf, Threshold,
};
pub use loops::{
    classify_loop, enumerate_loops, enumerate_loops_bounded, FeedbackLoop, LoopError, LoopKind, DEFAULT_MAX_LOOPS,
};
pub use name::{normalize_name, VariableName};
pub use prompting::{
    baseline_task, build_prompt, guided_instruction, parse_variable_list, select_exemplars,
    two_stage_instructions, Exemplar, ParsePlan, PromptBundle, PromptError, StageRequest, Strategy,
    DEFAULT_SHOTS,
};
