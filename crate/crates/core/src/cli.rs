//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 internal
//! invariant failure.

use std::ffi::OsString;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::analogy::{nearest, Method, MethodSpec, SolveError, DEFAULT_EPSILON};
use crate::dataset::{parse_dataset, reverse_set, AnalogySet, DatasetError};
use crate::eval::{degeneracy_from, evaluate, reversal_from, EvalError, EvaluationResult};
use crate::report::{
    build_heatmap, build_space_comparison, emit_to_vec, write_atomic, DatasetInfo, EvalReport, OutputFormat,
    ReportError, RunMetadata, StoreInfo, Tabular,
};
use crate::store::{load_store, Format, LoadError, LoadOptions, VectorStore};
use crate::synthetic::{consistent_offsets_spec, tight_neighborhood_spec, SynthError};

pub const THREADS_ENV: &str = "ANALOGY_AUDIT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "analogy-audit",
    version,
    about = "Offset-method analogy evaluation with baselines"
)]
pub struct Cli {
    /// Worker threads for the evaluation grid [default: available parallelism]
    #[arg(long, global = true, env = THREADS_ENV, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-category accuracy of each method on one space
    Eval(EvalArgs),
    /// Add, ignore-a and only-b across several spaces
    Compare(CompareArgs),
    /// Nearest neighbours of a word expression such as "king -man +woman"
    Nn(NnArgs),
    /// Write a synthetic space and its analogy set
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct LoadArgs {
    /// Embedding file format
    #[arg(long, value_parser = parse_format)]
    pub format: Format,
    /// Keep case instead of lowercasing words
    #[arg(long)]
    pub no_case_fold: bool,
    /// Keep only the first N rows of each file
    #[arg(long, value_name = "N")]
    pub max_vocab: Option<usize>,
}

impl LoadArgs {
    fn options(&self) -> LoadOptions {
        LoadOptions::new(self.format)
            .case_fold(!self.no_case_fold)
            .max_vocab(self.max_vocab)
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report path; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json, csv or md [default: from the --out extension, else json]
    #[arg(long = "output-format", value_parser = parse_output_format)]
    pub output_format: Option<OutputFormat>,
}

impl OutputArgs {
    fn format(&self) -> OutputFormat {
        if let Some(f) = self.output_format {
            return f;
        }
        let ext = self.out.as_deref().and_then(Path::extension).and_then(|e| e.to_str());
        match ext {
            Some("csv") => OutputFormat::Csv,
            Some("md") => OutputFormat::Markdown,
            _ => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Embedding file
    #[arg(long)]
    pub embeddings: PathBuf,
    #[command(flatten)]
    pub load: LoadArgs,
    /// Analogy questions (": category" headers, four words per line)
    #[arg(long)]
    pub dataset: PathBuf,
    /// Comma-separated method names, or "all"
    #[arg(long, default_value = "add,only-b,ignore-a")]
    pub methods: String,
    /// Multiply's denominator offset
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Also evaluate add and only-b on the reversed set
    #[arg(long)]
    pub reverse: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// LABEL=PATH, or PATH labelled by its file stem; at least two
    #[arg(long = "embeddings", required = true, num_args = 1..)]
    pub spaces: Vec<String>,
    #[command(flatten)]
    pub load: LoadArgs,
    /// Analogy questions
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct NnArgs {
    /// Embedding file
    #[arg(long)]
    pub embeddings: PathBuf,
    #[command(flatten)]
    pub load: LoadArgs,
    #[arg(short, long, default_value_t = 10)]
    pub k: usize,
    /// Terms "word", "+word" or "-word"
    #[arg(required = true, num_args = 1.., allow_hyphen_values = true)]
    pub expression: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Consistent offsets, crowded neighbourhoods
    Consistent,
    /// Noisy offsets, each target nearest to its base
    Tight,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the space as word2vec-txt
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Where to write the analogy set
    #[arg(long)]
    pub dataset: PathBuf,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse::<Format>().map_err(|e| e.to_string())
}

fn parse_output_format(s: &str) -> Result<OutputFormat, String> {
    s.parse::<OutputFormat>().map_err(|e| e.to_string())
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{context}: {source}")]
    Eval { context: String, source: EvalError },
    #[error("{0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Internal(_) => 3,
            CliError::Eval { source, .. } => match source {
                EvalError::NoMethods => 1,
                EvalError::MissingMethod(_) | EvalError::Solve(_) => 3,
                _ => 2,
            },
            CliError::Report(ReportError::MissingMethod { .. }) => 3,
            _ => 2,
        }
    }
}

fn eval_err(context: impl Into<String>) -> impl FnOnce(EvalError) -> CliError {
    let context = context.into();
    move |source| CliError::Eval { context, source }
}

/// Parses `--methods`; "all" selects every method.
pub fn parse_methods(list: &str, epsilon: f64) -> Result<Vec<MethodSpec>, CliError> {
    let mut methods: Vec<Method> = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name == "all" {
            methods.extend(Method::ALL);
            continue;
        }
        let m = name.parse::<Method>().map_err(|e| CliError::Usage(e.to_string()))?;
        methods.push(m);
    }
    let mut seen = Vec::new();
    methods.retain(|m| {
        let fresh = !seen.contains(m);
        seen.push(*m);
        fresh
    });
    if methods.is_empty() {
        return Err(CliError::Usage(format!(
            "no methods given; valid names: {}",
            Method::valid_names()
        )));
    }
    Ok(methods
        .into_iter()
        .map(|m| MethodSpec::with_epsilon(m, epsilon))
        .collect())
}

/// Parses "+word", "-word" and "word" terms; a lone "+" or "-" applies to
/// the next word.
pub fn parse_expression(tokens: &[String]) -> Result<Vec<(String, f32)>, CliError> {
    let mut terms = Vec::new();
    let mut pending: Option<f32> = None;
    for tok in tokens.iter().flat_map(|t| t.split_whitespace()) {
        match tok {
            "+" | "-" if pending.is_none() => pending = Some(if tok == "+" { 1.0 } else { -1.0 }),
            "+" | "-" => return Err(CliError::Usage(format!("dangling '{tok}' in expression"))),
            _ => {
                let (sign, word) = match tok.as_bytes()[0] {
                    b'+' => (1.0, &tok[1..]),
                    b'-' => (-1.0, &tok[1..]),
                    _ => (1.0, tok),
                };
                let sign = pending.take().unwrap_or(1.0) * sign;
                terms.push((word.to_string(), sign));
            }
        }
    }
    if pending.is_some() || terms.is_empty() {
        return Err(CliError::Usage("expression needs at least one word".into()));
    }
    Ok(terms)
}

fn parse_space(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((label, path)) if !label.is_empty() => (label.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            (label, path)
        }
    }
}

fn write_report<R: Tabular>(
    report: &R,
    metadata: &RunMetadata,
    output: &OutputArgs,
    stdout: &mut (dyn Write + Send),
) -> Result<(), CliError> {
    let bytes = emit_to_vec(report, metadata, output.format())?;
    match &output.out {
        Some(path) => write_atomic(path, &bytes)?,
        None => stdout.write_all(&bytes).map_err(ReportError::from)?,
    }
    Ok(())
}

fn check(result: &EvaluationResult) -> Result<(), CliError> {
    result.check_accounting().map_err(CliError::Internal)
}

pub fn cmd_eval(
    args: &EvalArgs,
    stdout: &mut (dyn Write + Send),
    stderr: &mut (dyn Write + Send),
) -> Result<(), CliError> {
    if !(args.epsilon > 0.0 && args.epsilon.is_finite()) {
        return Err(CliError::Usage(format!(
            "--epsilon must be positive, got {}",
            args.epsilon
        )));
    }
    let requested = parse_methods(&args.methods, args.epsilon)?;
    let store = load_store(&args.embeddings, &args.load.options())?;
    let set = parse_dataset(&args.dataset, store.case_fold())?;

    let mut grid = requested.clone();
    if !grid.iter().any(|m| m.method == Method::Vanilla) {
        grid.push(MethodSpec::with_epsilon(Method::Vanilla, args.epsilon));
    }
    let result = evaluate(&store, &set, &grid).map_err(eval_err("evaluation"))?;
    check(&result)?;

    let mut heatmap = build_heatmap(&result);
    heatmap
        .rows
        .retain(|row| requested.iter().any(|m| m.method == row.method));
    let vanilla_degeneracy = Some(degeneracy_from(&store, &result).map_err(eval_err("vanilla degeneracy"))?);

    let reversal = if args.reverse {
        Some(reversal(&store, &set, &result, args.epsilon)?)
    } else {
        None
    };

    let summary_method = if result.has_method(Method::Add) && requested.iter().any(|m| m.method == Method::Add) {
        Method::Add
    } else {
        requested[0].method
    };
    let total = result.total_tally(summary_method).map_err(eval_err("summary"))?;

    let report = EvalReport {
        heatmap,
        reversal,
        vanilla_degeneracy,
    };
    let metadata = RunMetadata::new(
        vec![StoreInfo::new(label_of(&args.embeddings), &store)],
        Some(DatasetInfo::new(&set)),
        requested,
    )
    .stamped();
    write_report(&report, &metadata, &args.output, stdout)?;

    let line = format!(
        "{summary_method} overall {} over {} attempted; skipped {} oov, {} gold-oov, {} degenerate\n",
        total
            .accuracy()
            .map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}")),
        total.attempted,
        total.skipped_oov,
        total.skipped_gold_oov,
        total.skipped_degenerate,
    );
    // The summary must not interleave with a report printed to stdout.
    let sink: &mut (dyn Write + Send) = if args.output.out.is_some() { stdout } else { stderr };
    sink.write_all(line.as_bytes()).map_err(ReportError::from)?;
    Ok(())
}

fn reversal(
    store: &VectorStore,
    set: &AnalogySet,
    forward: &EvaluationResult,
    epsilon: f64,
) -> Result<crate::eval::ReversalAnalysis, CliError> {
    let pair = [Method::Add, Method::OnlyB];
    let specs = pair.map(|m| MethodSpec::with_epsilon(m, epsilon));
    let fresh;
    let forward = if pair.iter().all(|&m| forward.has_method(m)) {
        forward
    } else {
        fresh = evaluate(store, set, &specs).map_err(eval_err("forward evaluation"))?;
        check(&fresh)?;
        &fresh
    };
    let reversed = evaluate(store, &reverse_set(set), &specs).map_err(eval_err("reversed evaluation"))?;
    check(&reversed)?;
    reversal_from(forward, &reversed, &pair).map_err(eval_err("reversal"))
}

fn label_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn cmd_compare(args: &CompareArgs, stdout: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let spaces: Vec<(String, PathBuf)> = args.spaces.iter().map(|s| parse_space(s)).collect();
    if spaces.len() < 2 {
        return Err(CliError::Usage("compare needs at least two --embeddings".into()));
    }
    for (i, (label, _)) in spaces.iter().enumerate() {
        if spaces[..i].iter().any(|(l, _)| l == label) {
            return Err(CliError::Usage(format!("duplicate space label '{label}'")));
        }
    }
    let opts = args.load.options();
    // Load everything before evaluating so a bad space fails the run early.
    let stores = spaces
        .iter()
        .map(|(_, path)| load_store(path, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let set = parse_dataset(&args.dataset, !args.load.no_case_fold)?;

    let methods = [Method::Add, Method::IgnoreA, Method::OnlyB].map(MethodSpec::new);
    let mut results = Vec::with_capacity(stores.len());
    for ((label, _), store) in spaces.iter().zip(&stores) {
        let result = evaluate(store, &set, &methods).map_err(eval_err(format!("space '{label}'")))?;
        check(&result)?;
        results.push(result);
    }
    let labelled: Vec<(String, &EvaluationResult)> =
        spaces.iter().map(|(l, _)| l.clone()).zip(results.iter()).collect();
    let comparison = build_space_comparison(&labelled)?;
    let metadata = RunMetadata::new(
        spaces
            .iter()
            .zip(&stores)
            .map(|((label, _), store)| StoreInfo::new(label.clone(), store))
            .collect(),
        Some(DatasetInfo::new(&set)),
        methods.to_vec(),
    )
    .stamped();
    write_report(&comparison, &metadata, &args.output, stdout)
}

pub fn cmd_nn(args: &NnArgs, stdout: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let terms = parse_expression(&args.expression)?;
    let store = load_store(&args.embeddings, &args.load.options())?;
    let mut ids = Vec::with_capacity(terms.len());
    for (word, w) in &terms {
        let id = store
            .lookup(word)
            .ok_or_else(|| CliError::Data(format!("'{word}' is not in the vocabulary")))?;
        ids.push((id, *w));
    }
    let hits = nearest(&store, &ids, args.k).map_err(|e| match e {
        SolveError::DegenerateQuery => CliError::Data("expression sums to a zero vector".into()),
        other => CliError::Internal(other.to_string()),
    })?;
    let mut out = String::new();
    for (id, cos) in hits {
        out.push_str(&format!("{}\t{cos:.6}\n", store.word(id)));
    }
    stdout.write_all(out.as_bytes()).map_err(ReportError::from)?;
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs, stdout: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let spec = match args.preset {
        Preset::Consistent => consistent_offsets_spec(args.seed),
        Preset::Tight => tight_neighborhood_spec(args.seed),
    };
    let (store, set) = crate::synthetic::generate(&spec)?;
    let mut text = Vec::new();
    store.write(&mut text, Format::Word2vecTxt).map_err(ReportError::from)?;
    write_atomic(&args.embeddings, &text)?;
    write_atomic(&args.dataset, set.to_text().as_bytes())?;
    writeln!(
        stdout,
        "wrote {} words x {} dims and {} problems",
        store.len(),
        store.dim(),
        set.len()
    )
    .map_err(ReportError::from)?;
    Ok(())
}

fn dispatch(cli: &Cli, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<(), CliError> {
    match &cli.command {
        Command::Eval(a) => cmd_eval(a, stdout, stderr),
        Command::Compare(a) => cmd_compare(a, stdout),
        Command::Nn(a) => cmd_nn(a, stdout),
        Command::Synth(a) => cmd_synth(a, stdout),
    }
}

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut (dyn Write + Send) = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n.into());
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: cannot start worker pool: {e}");
            return 3;
        }
    };
    match pool.install(|| dispatch(&cli, stdout, stderr)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout);
    let mut err = std::io::stderr();
    let code = run(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}
