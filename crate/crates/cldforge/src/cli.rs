//! The `cldforge` command line.
//!
//! Exit codes: 0 success, 1 operational error (bad flags, unreadable input,
//! provider failure), 2 generation finished without a digraph.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cldforge_core::{
    batch_report, emit_digraph, emit_render_dot, enumerate_loops, evaluate, extract_digraph_block,
    parse_digraph, CausalLoopDiagram, Corpus, DotError, EvalReport, ParseMode, Prf, Severity,
    Strategy, Threshold, DEFAULT_SHOTS,
};
use serde_json::{json, Map, Value};

use crate::config::{ProviderSettings, ServiceConfig};
use crate::corpus_file::{corpus_to_string, load_corpus};
use crate::fixtures::seed_golden_fixtures;
use crate::llm::{ApiStyle, CompletionProvider, ProviderConfig, RecordingProvider};
use crate::pipeline::{batch_generate, item_outcomes, run_pipeline, NO_DIGRAPH_MESSAGE};
use crate::service::{corpus_item_json, serve, AppState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_DIGRAPH: i32 = 2;

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";

const STRATEGY_SLUGS: [&str; 4] = ["baseline", "minimal", "guided", "two-stage"];

#[derive(Debug, Parser)]
#[command(name = "cldforge", version, about = "Causal loop diagrams from dynamic hypotheses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a diagram for one dynamic hypothesis.
    Generate(GenerateArgs),
    /// Score a generated diagram against ground truth.
    Evaluate(EvaluateArgs),
    /// Generate and score every corpus item under one or more strategies.
    Batch(BatchArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Inspect, validate or export a corpus.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Manage mock provider fixtures.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
    /// Print loop-annotated DOT for an external renderer.
    Render(RenderArgs),
    /// List variables, exogenous variables and feedback loops of a digraph.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderChoice {
    Mock,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StyleChoice {
    Chat,
    Completions,
}

#[derive(Debug, Args)]
struct ProviderArgs {
    /// Completion provider [default: from CLDFORGE_CONFIG, else mock]
    #[arg(long, value_enum)]
    provider: Option<ProviderChoice>,
    /// Mock fixture directory [default: fixtures]
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Live endpoint URL
    #[arg(long)]
    endpoint: Option<String>,
    /// Live model id
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the API key [default: LLM_API_KEY]
    #[arg(long)]
    api_key_env: Option<String>,
    #[arg(long, value_enum)]
    api_style: Option<StyleChoice>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    max_tokens: Option<u32>,
    /// Save each completion as a mock fixture in this directory
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenerateFormat {
    Digraph,
    Dot,
    Json,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Dynamic hypothesis file, or - for stdin
    #[arg(long)]
    dh: PathBuf,
    #[arg(long, default_value = "two-stage", value_parser = STRATEGY_SLUGS)]
    strategy: String,
    /// Corpus file for exemplars [default: bundled goldens]
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Number of exemplars [default: 3]
    #[arg(long)]
    shots: Option<usize>,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Write here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "digraph")]
    format: GenerateFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Generated digraph file
    #[arg(long)]
    generated: PathBuf,
    /// Ground-truth digraph file or corpus item id
    #[arg(long)]
    truth: String,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Name similarity threshold in (0, 1] [default: 0.8]
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum, default_value = "table")]
    format: ReportFormat,
    /// Accept the generated file as free text containing a digraph
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct BatchArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Comma-separated strategies
    #[arg(long, value_delimiter = ',', value_parser = STRATEGY_SLUGS,
          default_value = "baseline,minimal,guided,two-stage")]
    strategies: Vec<String>,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Report path [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every generation record here
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// JSON config file [default: $CLDFORGE_CONFIG]
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    listen: Option<SocketAddr>,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    body_limit_bytes: Option<usize>,
    #[arg(long)]
    transcript_capacity: Option<usize>,
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ShowFormat {
    Json,
    Digraph,
    Dh,
}

#[derive(Debug, Subcommand)]
enum CorpusCommand {
    /// One line per item.
    List {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Print one item.
    Show {
        id: String,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: ShowFormat,
    },
    /// Write the corpus in file form (the bundled goldens by default).
    Export {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load and validate a corpus file.
    Validate { path: PathBuf },
}

#[derive(Debug, Subcommand)]
enum FixturesCommand {
    /// Write fixtures that answer every corpus item with its ground truth.
    Seed {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SHOTS)]
        shots: usize,
        #[arg(long, value_delimiter = ',', value_parser = STRATEGY_SLUGS,
              default_value = "baseline,minimal,guided,two-stage")]
        strategies: Vec<String>,
        /// Answer this item with prose instead (repeatable)
        #[arg(long)]
        prose: Vec<String>,
    },
}

#[derive(Debug, Args)]
struct RenderArgs {
    file: PathBuf,
    /// Omit loop label nodes
    #[arg(long)]
    no_annotate: bool,
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    file: PathBuf,
    #[arg(long)]
    lenient: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: ReportFormat,
}

/// A failure reported as `error: ...` with exit code 1.
#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CliResult = Result<i32, Failure>;

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return EXIT_OK;
            }
            eprintln!("\n{}", usage_for(&args));
            return EXIT_ERROR;
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Batch(a) => batch(a),
        Command::Serve(a) => serve_cmd(a),
        Command::Corpus(c) => corpus_cmd(c),
        Command::Fixtures(c) => fixtures_cmd(c),
        Command::Render(a) => render(a),
        Command::Analyze(a) => analyze(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure(message)) => {
            eprintln!("error: {message}");
            EXIT_ERROR
        }
    }
}

/// Usage of the subcommand named in `args`, else of the whole program.
fn usage_for(args: &[OsString]) -> String {
    use clap::CommandFactory;
    let mut command = Cli::command();
    command.build();
    let named = args
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| command.find_subcommand(a).is_some())
        .map(str::to_string);
    match named.and_then(|n| command.find_subcommand_mut(&n)) {
        Some(sub) => sub.render_usage().to_string(),
        None => command.render_usage().to_string(),
    }
}

fn strategy(slug: &str) -> Strategy {
    slug.parse().expect("clap only admits known slugs")
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text)?;
        return Ok(text);
    }
    fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn env_config() -> Result<Option<ServiceConfig>, Failure> {
    Ok(ServiceConfig::from_env()?)
}

fn corpus_from(path: Option<&Path>, config: Option<&ServiceConfig>) -> Result<Corpus, Failure> {
    match (path, config) {
        (Some(path), _) => Ok(load_corpus(path)?),
        (None, Some(config)) => Ok(config.corpus()?),
        (None, None) => Ok(cldforge_core::bundled_goldens()),
    }
}

fn threshold_from(flag: Option<f64>, config: Option<&ServiceConfig>) -> Result<Threshold, Failure> {
    let value = flag
        .or(config.map(|c| c.threshold))
        .unwrap_or(Threshold::DEFAULT.value());
    Threshold::new(value).ok_or_else(|| Failure(format!("threshold {value} is outside (0, 1]")))
}

/// Flags override the config file, which overrides defaults.
fn provider_settings(args: &ProviderArgs, base: Option<&ProviderSettings>) -> ProviderSettings {
    let kind = args.provider.unwrap_or(match base {
        Some(ProviderSettings::Live(_)) => ProviderChoice::Live,
        _ => ProviderChoice::Mock,
    });
    match kind {
        ProviderChoice::Mock => {
            let fixtures = args.fixtures.clone().unwrap_or_else(|| match base {
                Some(ProviderSettings::Mock { fixtures }) => fixtures.clone(),
                _ => PathBuf::from("fixtures"),
            });
            ProviderSettings::Mock { fixtures }
        }
        ProviderChoice::Live => {
            let mut config = match base {
                Some(ProviderSettings::Live(c)) => c.clone(),
                _ => ProviderConfig::new(DEFAULT_ENDPOINT, DEFAULT_MODEL),
            };
            if let Some(v) = &args.endpoint {
                config.endpoint = v.clone();
            }
            if let Some(v) = &args.model {
                config.model_id = v.clone();
            }
            if let Some(v) = &args.api_key_env {
                config.api_key_env = v.clone();
            }
            if let Some(v) = args.api_style {
                config.api_style = match v {
                    StyleChoice::Chat => ApiStyle::Chat,
                    StyleChoice::Completions => ApiStyle::Completions,
                };
            }
            if let Some(v) = args.timeout_secs {
                config.timeout_secs = v;
            }
            if let Some(v) = args.max_retries {
                config.max_retries = v;
            }
            if args.max_tokens.is_some() {
                config.max_tokens = args.max_tokens;
            }
            ProviderSettings::Live(config)
        }
    }
}

fn build_provider(
    args: &ProviderArgs,
    config: Option<&ServiceConfig>,
) -> Result<Arc<dyn CompletionProvider>, Failure> {
    let settings = provider_settings(args, config.map(|c| &c.provider));
    let provider = settings.build()?;
    Ok(match &args.record {
        Some(dir) => Arc::new(RecordingProvider::new(provider, dir.clone())),
        None => provider,
    })
}

fn generate(args: GenerateArgs) -> CliResult {
    let config = env_config()?;
    let dh = read_input(&args.dh)?;
    let corpus = corpus_from(args.corpus.as_deref(), config.as_ref())?;
    let shots = args
        .shots
        .or(config.as_ref().map(|c| c.shots))
        .unwrap_or(DEFAULT_SHOTS);
    let provider = build_provider(&args.provider, config.as_ref())?;
    let record = run_pipeline(provider.as_ref(), strategy(&args.strategy), &dh, &corpus, shots)?;

    for d in record.diagnostics.iter().filter(|d| d.severity == Severity::Warning) {
        eprintln!("{d}");
    }
    let out = args.out.as_deref();
    let Some(diagram) = &record.diagram else {
        if args.format == GenerateFormat::Json {
            write_output(out, &(record.to_json_pretty() + "\n"))?;
        }
        let reason = record
            .diagnostics
            .iter()
            .rev()
            .find(|d| d.severity == Severity::Error)
            .map_or(NO_DIGRAPH_MESSAGE, |d| d.message.as_str());
        eprintln!("{reason}");
        return Ok(EXIT_NO_DIGRAPH);
    };
    let text = match args.format {
        GenerateFormat::Digraph => emit_digraph(diagram) + "\n",
        GenerateFormat::Dot => emit_render_dot(diagram, true),
        GenerateFormat::Json => record.to_json_pretty() + "\n",
    };
    write_output(out, &text)?;
    Ok(EXIT_OK)
}

fn read_diagram(path: &Path, lenient: bool) -> Result<CausalLoopDiagram, Failure> {
    let text = read_input(path)?;
    let parsed = if lenient {
        extract_digraph_block(&text).and_then(|block| parse_digraph(block, ParseMode::Lenient))
    } else {
        parse_digraph(&text, ParseMode::Strict)
    };
    match parsed {
        Ok(p) => {
            for d in &p.diagnostics {
                eprintln!("{}:{d}", path.display());
            }
            Ok(p.diagram)
        }
        Err(DotError::Syntax(d)) => Err(Failure(format!("{}:{d}", path.display()))),
        Err(e) => Err(Failure(format!("{}: {e}", path.display()))),
    }
}

fn evaluate_cmd(args: EvaluateArgs) -> CliResult {
    let config = env_config()?;
    let threshold = threshold_from(args.threshold, config.as_ref())?;
    let generated = read_diagram(&args.generated, args.lenient)?;
    let truth_path = Path::new(&args.truth);
    let truth = if truth_path.is_file() {
        read_diagram(truth_path, false)?
    } else {
        let corpus = corpus_from(args.corpus.as_deref(), config.as_ref())?;
        corpus
            .get(&args.truth)
            .ok_or_else(|| Failure(format!("{:?} is neither a file nor a corpus item id", args.truth)))?
            .ground_truth
            .clone()
    };
    let report = evaluate(&generated, &truth, threshold);
    let text = match args.format {
        ReportFormat::Json => serde_json::to_string_pretty(&report)? + "\n",
        ReportFormat::Table => report_table(&report),
    };
    write_output(None, &text)?;
    Ok(EXIT_OK)
}

fn loop_list(loops: &[(usize, cldforge_core::LoopKind)]) -> String {
    let parts: Vec<String> = loops
        .iter()
        .map(|(n, k)| format!("{}{n}", k.letter()))
        .collect();
    format!("[{}]", parts.join(", "))
}

fn yes_no(flag: bool) -> &'static str {
    if flag {
        "yes"
    } else {
        "no"
    }
}

/// Fixed-width text form of an [`EvalReport`].
pub fn report_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let row = |out: &mut String, name: &str, p: Prf| {
        let _ = writeln!(
            out,
            "{name:<16}{:>10.3}{:>10.3}{:>10.3}",
            p.precision, p.recall, p.f1
        );
    };
    let _ = writeln!(out, "{:<16}{:>10}{:>10}{:>10}", "metric", "precision", "recall", "f1");
    row(&mut out, "node", report.node);
    row(&mut out, "link (strict)", report.link_strict);
    row(&mut out, "link (lenient)", report.link_lenient);
    let polarity = report
        .polarity_accuracy
        .map_or("n/a".to_string(), |v| format!("{v:.3}"));
    let _ = writeln!(out, "polarity accuracy: {polarity}");
    let c = &report.link_counts;
    let _ = writeln!(
        out,
        "links: {} generated, {} truth, {} lenient matches, {} strict matches",
        c.generated, c.truth, c.lenient_matches, c.strict_matches
    );
    let loops = &report.loops;
    if loops.overflow {
        let _ = writeln!(out, "loops: too many to enumerate");
    } else {
        let _ = writeln!(
            out,
            "loops: generated {} truth {}; count match {}; kind match {}",
            loop_list(&loops.generated),
            loop_list(&loops.truth),
            yes_no(loops.loop_count_match),
            yes_no(loops.loop_kind_multiset_match)
        );
    }
    let names = |v: &[cldforge_core::VariableName]| {
        v.iter().map(|n| n.raw()).collect::<Vec<_>>().join(", ")
    };
    if !report.matching.unmatched_generated.is_empty() {
        let _ = writeln!(out, "unmatched generated: {}", names(&report.matching.unmatched_generated));
    }
    if !report.matching.unmatched_truth.is_empty() {
        let _ = writeln!(out, "unmatched truth: {}", names(&report.matching.unmatched_truth));
    }
    out
}

fn batch(args: BatchArgs) -> CliResult {
    let config = env_config()?;
    let corpus = corpus_from(args.corpus.as_deref(), config.as_ref())?;
    let threshold = threshold_from(args.threshold, config.as_ref())?;
    let shots = args
        .shots
        .or(config.as_ref().map(|c| c.shots))
        .unwrap_or(DEFAULT_SHOTS);
    let provider = build_provider(&args.provider, config.as_ref())?;

    let mut reports = Map::new();
    let mut all_records = Map::new();
    for slug in &args.strategies {
        let records = batch_generate(provider.as_ref(), strategy(slug), &corpus, shots, args.parallelism)?;
        let report = batch_report(&item_outcomes(&records), &corpus, threshold)?;
        let a = &report.aggregate;
        eprintln!(
            "{slug}: {} items, node F1 {:.3}, link strict F1 {:.3}, no digraph {}, errors {}",
            a.items, a.node.f1, a.link_strict.f1, a.no_digraph_count, a.error_count
        );
        reports.insert(slug.clone(), serde_json::to_value(&report)?);
        all_records.insert(slug.clone(), serde_json::to_value(&records)?);
    }
    write_output(
        args.out.as_deref(),
        &(serde_json::to_string_pretty(&Value::Object(reports))? + "\n"),
    )?;
    if let Some(path) = &args.records {
        write_output(
            Some(path),
            &(serde_json::to_string_pretty(&Value::Object(all_records))? + "\n"),
        )?;
    }
    Ok(EXIT_OK)
}

fn serve_cmd(args: ServeArgs) -> CliResult {
    let mut config = match &args.config {
        Some(path) => ServiceConfig::from_file(path)?,
        None => env_config()?.unwrap_or_default(),
    };
    config.provider = provider_settings(&args.provider, Some(&config.provider));
    if let Some(v) = args.listen {
        config.listen = v;
    }
    if let Some(v) = &args.corpus {
        config.corpus_path = Some(v.clone());
    }
    if let Some(v) = args.threshold {
        config.threshold = v;
    }
    if let Some(v) = args.shots {
        config.shots = v;
    }
    if let Some(v) = args.body_limit_bytes {
        config.body_limit_bytes = v;
    }
    if let Some(v) = args.transcript_capacity {
        config.transcript_capacity = v;
    }
    if let Some(v) = args.parallelism {
        config.parallelism = v;
    }
    config.validate()?;
    let corpus = config.corpus()?;
    let provider = build_provider(&args.provider, Some(&config))?;
    let state = Arc::new(AppState::new(corpus, provider, &config)?);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(serve(&config, state))?;
    Ok(EXIT_OK)
}

fn corpus_cmd(command: CorpusCommand) -> CliResult {
    let config = env_config()?;
    match command {
        CorpusCommand::List { corpus } => {
            let corpus = corpus_from(corpus.as_deref(), config.as_ref())?;
            let mut out = String::new();
            for item in corpus.items() {
                let loops = item.loop_signature().unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{:<24}{:>3} variables{:>3} links  loops {}",
                    item.id,
                    item.ground_truth.variables().len(),
                    item.ground_truth.links().len(),
                    loop_list(&loops)
                );
            }
            write_output(None, &out)?;
        }
        CorpusCommand::Show { id, corpus, format } => {
            let corpus = corpus_from(corpus.as_deref(), config.as_ref())?;
            let item = corpus
                .get(&id)
                .ok_or_else(|| Failure(format!("unknown corpus item {id:?}")))?;
            let text = match format {
                ShowFormat::Json => serde_json::to_string_pretty(&corpus_item_json(item))?,
                ShowFormat::Digraph => emit_digraph(&item.ground_truth),
                ShowFormat::Dh => item.dh.clone(),
            };
            write_output(None, &(text + "\n"))?;
        }
        CorpusCommand::Export { corpus, out } => {
            let corpus = corpus_from(corpus.as_deref(), None)?;
            write_output(out.as_deref(), &corpus_to_string(&corpus))?;
        }
        CorpusCommand::Validate { path } => {
            let corpus = load_corpus(&path)?;
            println!("ok: {} items", corpus.len());
        }
    }
    Ok(EXIT_OK)
}

fn fixtures_cmd(command: FixturesCommand) -> CliResult {
    match command {
        FixturesCommand::Seed {
            out,
            corpus,
            shots,
            strategies,
            prose,
        } => {
            let corpus = corpus_from(corpus.as_deref(), None)?;
            let strategies: Vec<Strategy> = strategies.iter().map(|s| strategy(s)).collect();
            for id in &prose {
                if corpus.get(id).is_none() {
                    return Err(Failure(format!("unknown corpus item {id:?}")));
                }
            }
            let prose: Vec<&str> = prose.iter().map(String::as_str).collect();
            let written = seed_golden_fixtures(&out, &corpus, &strategies, shots, &prose)?;
            eprintln!("wrote {written} fixtures to {}", out.display());
        }
    }
    Ok(EXIT_OK)
}

fn render(args: RenderArgs) -> CliResult {
    let diagram = read_diagram(&args.file, args.lenient)?;
    write_output(None, &emit_render_dot(&diagram, !args.no_annotate))?;
    Ok(EXIT_OK)
}

fn analyze(args: AnalyzeArgs) -> CliResult {
    let diagram = read_diagram(&args.file, args.lenient)?;
    let raw = |names: Vec<&cldforge_core::VariableName>| -> Vec<String> {
        names.into_iter().map(|n| n.raw().to_string()).collect()
    };
    let variables = raw(diagram.variables().iter().collect());
    let exogenous = raw(diagram.exogenous_variables());
    let loops = enumerate_loops(&diagram)?;
    let text = match args.format {
        ReportFormat::Json => {
            let loops: Vec<Value> = loops
                .iter()
                .map(|l| {
                    json!({
                        "length": l.len(),
                        "kind": l.kind(),
                        "members": l.members().map(|m| m.raw()).collect::<Vec<_>>(),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&json!({
                "variables": variables,
                "exogenous": exogenous,
                "loops": loops,
            }))? + "\n"
        }
        ReportFormat::Table => {
            let mut out = String::new();
            let _ = writeln!(out, "variables: {}", variables.join(", "));
            let _ = writeln!(out, "exogenous: {}", exogenous.join(", "));
            let (mut r, mut b) = (0, 0);
            for l in &loops {
                let n = match l.kind() {
                    cldforge_core::LoopKind::Reinforcing => &mut r,
                    cldforge_core::LoopKind::Balancing => &mut b,
                };
                *n += 1;
                let members: Vec<&str> = l.members().map(|m| m.raw()).collect();
                let _ = writeln!(out, "{}{n}: {}", l.kind().letter(), members.join(" -> "));
            }
            out
        }
    };
    write_output(None, &text)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn slugs_match_strategies() {
        let slugs: Vec<&str> = Strategy::ALL.iter().map(|s| s.slug()).collect();
        assert_eq!(slugs, STRATEGY_SLUGS);
    }

    fn provider_args(cli: &[&str]) -> ProviderArgs {
        let mut argv = vec!["cldforge", "generate", "--dh", "-"];
        argv.extend_from_slice(cli);
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Generate(a) => a.provider,
            _ => unreachable!(),
        }
    }

    #[test]
    fn provider_flags_override_config() {
        let live = ProviderSettings::Live(ProviderConfig::new("http://config", "cfg-model"));
        let s = provider_settings(&provider_args(&["--model", "flag-model"]), Some(&live));
        let ProviderSettings::Live(c) = s else { panic!() };
        assert_eq!((c.endpoint.as_str(), c.model_id.as_str()), ("http://config", "flag-model"));

        let s = provider_settings(&provider_args(&["--provider", "mock"]), Some(&live));
        assert_eq!(s, ProviderSettings::Mock { fixtures: "fixtures".into() });

        let s = provider_settings(&provider_args(&["--provider", "live"]), None);
        assert_eq!(s, ProviderSettings::Live(ProviderConfig::new(DEFAULT_ENDPOINT, DEFAULT_MODEL)));
    }
}
