//! Command-line front end. [`run`] takes explicit streams so it can be driven
//! from tests; `main` just forwards the process arguments.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::autodiff::Precision;
use crate::data::{
    corpus_words, load_conversations, load_embeddings, parse_conversation_line, random_embeddings, split_corpus,
    write_conversations, Conversation, EmbeddingTable, LabelPolicy,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, generate_synthetic, growth_probe, EvalReport, SyntheticSpec, PROBE_BIAS};
use crate::graph::Family;
use crate::model::context::CellRule;
use crate::model::{Architecture, EmbeddingMode, Model, ModelConfig};
use crate::train::{
    random_search, sample_trials, train, Checkpoint, CheckpointMetadata, TrainOptions, DEFAULT_MAX_EPOCHS,
    DEFAULT_PATIENCE, DEFAULT_TRIALS,
};

#[derive(Debug, Parser)]
#[command(name = "dagact", version, about = "Dialogue-act classification for multi-party chat")]
struct Cli {
    /// Seed for initialisation, shuffling, dropout, sampling and generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Arithmetic width for forward and backward passes.
    #[arg(long, global = true, value_enum, default_value_t = PrecisionArg::P64)]
    precision: PrecisionArg,
    /// Only print results and errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrecisionArg {
    #[value(name = "64")]
    P64,
    #[value(name = "32")]
    P32,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::P64 => Precision::Double,
            PrecisionArg::P32 => Precision::Single,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write the best-dev checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on labeled conversations.
    Eval(EvalArgs),
    /// Add a `predicted` label to every utterance of every input line.
    Predict(PredictArgs),
    /// Random hyperparameter search.
    Hpsearch(SearchArgs),
    /// Forced-gate cell-growth probe on a synthetic conversation graph.
    Diagnose(DiagnoseArgs),
    /// Write a synthetic labeled corpus.
    GenSynth(SynthArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Training conversations (JSON lines).
    #[arg(long)]
    data: PathBuf,
    /// Development conversations used for early stopping.
    #[arg(long)]
    dev: PathBuf,
    /// Pretrained embeddings in whitespace-separated text format.
    #[arg(long)]
    emb: Option<PathBuf>,
    /// Dimension of randomly initialised embeddings when --emb is absent.
    #[arg(long, default_value_t = 100)]
    emb_dim: usize,
    #[arg(long, default_value = "bilstm-daglstm", value_parser = parse_arch)]
    arch: Architecture,
    #[arg(long, default_value_t = DEFAULT_MAX_EPOCHS)]
    max_epochs: usize,
    #[arg(long, default_value_t = DEFAULT_PATIENCE)]
    patience: usize,
    /// Train for exactly --max-epochs epochs.
    #[arg(long)]
    no_early_stop: bool,
    /// Global gradient-norm clipping threshold.
    #[arg(long)]
    clip_norm: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    utterance_units: usize,
    #[arg(long, default_value_t = 100)]
    context_units: usize,
    #[arg(long, default_value_t = 100)]
    cnn_filters: usize,
    #[arg(long, default_value_t = 3)]
    cnn_window: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.2)]
    dropout: f64,
    #[arg(long, default_value_t = 0.0)]
    word_dropout: f64,
    #[arg(long, default_value = "fine-tune", value_parser = parse_mode)]
    embedding_mode: EmbeddingMode,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
    /// Also write the confusion matrix as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Input file; standard input when absent.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Parallel workers.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the best trial's checkpoint here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Alternating)]
    family: FamilyArg,
    #[arg(long, default_value_t = 10)]
    length: usize,
    #[arg(long, value_enum, default_value_t = RuleArg::Sum)]
    rule: RuleArg,
    /// Saturating bias for the forced gates.
    #[arg(long, default_value_t = PROBE_BIAS)]
    bias: f64,
    /// Print the full result, including the graph, as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Alternating,
    Monologue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Sum,
    Max,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Write every conversation to this file.
    #[arg(long, conflicts_with = "out_dir", required_unless_present = "out_dir")]
    out: Option<PathBuf>,
    /// Write train/dev/test files into this directory (requires --split).
    #[arg(long, requires = "split")]
    out_dir: Option<PathBuf>,
    /// Conversation counts for train,dev,test.
    #[arg(long, value_delimiter = ',')]
    split: Option<Vec<usize>>,
    #[arg(long, default_value_t = 2800)]
    conversations: usize,
    #[arg(long, default_value_t = 3)]
    participants: usize,
    #[arg(long, default_value_t = 8)]
    min_length: usize,
    #[arg(long, default_value_t = 14)]
    max_length: usize,
    #[arg(long, default_value_t = 0.45)]
    dependency_rate: f64,
}

fn flag_message(e: Error) -> String {
    match e {
        Error::Usage(m) => m,
        other => other.to_string(),
    }
}

fn parse_arch(s: &str) -> std::result::Result<Architecture, String> {
    s.parse().map_err(flag_message)
}

fn parse_mode(s: &str) -> std::result::Result<EmbeddingMode, String> {
    s.parse().map_err(flag_message)
}

/// Runs the CLI and returns the process exit status.
pub fn run<I, T>(argv: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match dispatch(&cli, stdin, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<()> {
    let precision = Precision::from(cli.precision);
    match &cli.command {
        Command::Train(a) => cmd_train(a, cli, precision, stdout),
        Command::Eval(a) => cmd_eval(a, precision, stdout),
        Command::Predict(a) => cmd_predict(a, precision, stdin, stdout),
        Command::Hpsearch(a) => cmd_search(a, cli, precision, stdout),
        Command::Diagnose(a) => cmd_diagnose(a, stdout),
        Command::GenSynth(a) => cmd_synth(a, cli.seed, stdout),
    }
}

fn out_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn load_labeled(path: &Path) -> Result<Vec<Conversation>> {
    let corpus = load_conversations(path)?;
    if corpus.conversations.is_empty() {
        return Err(Error::Format { path: path.display().to_string(), line: 0, message: "no conversations".into() });
    }
    Ok(corpus.conversations)
}

fn embeddings_for(a: &DataArgs, words: &BTreeSet<String>, seed: u64) -> Result<EmbeddingTable> {
    match &a.emb {
        Some(path) => Ok(load_embeddings(path, words, seed)?.table),
        None => {
            if a.emb_dim == 0 {
                return Err(Error::usage("--emb-dim must be positive"));
            }
            Ok(random_embeddings(words, a.emb_dim, seed))
        }
    }
}

fn options(a: &DataArgs) -> TrainOptions {
    TrainOptions {
        max_epochs: a.max_epochs,
        patience: (!a.no_early_stop).then_some(a.patience),
        clip_norm: a.clip_norm,
        target_loss: None,
    }
}

struct Prepared {
    train: Vec<Conversation>,
    dev: Vec<Conversation>,
    table: EmbeddingTable,
}

fn prepare(a: &DataArgs, seed: u64) -> Result<Prepared> {
    let train = load_labeled(&a.data)?;
    let dev = load_labeled(&a.dev)?;
    let words = corpus_words(train.iter().chain(&dev));
    let table = embeddings_for(a, &words, seed)?;
    Ok(Prepared { train, dev, table })
}

fn cmd_train(a: &TrainArgs, cli: &Cli, precision: Precision, stdout: &mut dyn Write) -> Result<()> {
    let config = ModelConfig {
        architecture: a.data.arch,
        utterance_units: a.utterance_units,
        context_units: a.context_units,
        cnn_filters: a.cnn_filters,
        cnn_window: a.cnn_window,
        learning_rate: a.lr,
        dropout: a.dropout,
        word_dropout: a.word_dropout,
        embedding_mode: a.embedding_mode,
        seed: cli.seed,
    };
    config.validate()?;
    let p = prepare(&a.data, cli.seed)?;
    let mut model = Model::new(config, p.table)?;
    model.precision = precision;
    let mut io_error = None;
    let outcome = train(model, &p.train, &p.dev, &options(&a.data), |r| {
        if !cli.quiet && io_error.is_none() {
            if let Err(e) = writeln!(
                stdout,
                "epoch {} train_loss {} dev_accuracy {} dev_macro_f1 {}",
                r.epoch, r.train_loss, r.dev_accuracy, r.dev_macro_f1
            ) {
                io_error = Some(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(out_err(e));
    }
    let ck = Checkpoint {
        model: outcome.model,
        metadata: CheckpointMetadata { epoch: outcome.best_epoch, dev_macro_f1: Some(outcome.best_dev_macro_f1) },
    };
    ck.save(&a.out)?;
    writeln!(stdout, "best_epoch {} dev_macro_f1 {}", outcome.best_epoch, outcome.best_dev_macro_f1).map_err(out_err)
}

fn load_model(path: &Path, precision: Precision) -> Result<Model> {
    let mut model = Checkpoint::load(path)?.model;
    model.precision = precision;
    Ok(model)
}

fn cmd_eval(a: &EvalArgs, precision: Precision, stdout: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model, precision)?;
    let data = load_labeled(&a.data)?;
    let report = evaluate(&model, &data)?;
    if let Some(path) = &a.csv {
        std::fs::write(path, report.confusion.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    match a.format {
        ReportFormat::Json => writeln!(stdout, "{}", report.to_json()),
        ReportFormat::Table => {
            writeln!(stdout, "{}\n{}", EvalReport::table_header(), report.table_row(model.config.architecture.name()))
        }
    }
    .map_err(out_err)
}

fn cmd_predict(a: &PredictArgs, precision: Precision, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model, precision)?;
    match &a.data {
        Some(p) => {
            let mut reader = BufReader::new(File::open(p).map_err(|e| Error::io(p, e))?);
            predict_stream(&model, &mut reader, &p.display().to_string(), stdout)
        }
        None => predict_stream(&model, stdin, "<stdin>", stdout),
    }
}

/// Reads conversation lines and writes each back with a `predicted` field on
/// every utterance, flushing after each line. Other fields pass through.
pub fn predict_stream(model: &Model, reader: &mut dyn BufRead, source: &str, out: &mut dyn Write) -> Result<()> {
    let mut line = String::new();
    let mut line_no = 0;
    loop {
        line.clear();
        if reader.read_line(&mut line).map_err(|e| Error::io(source, e))? == 0 {
            break;
        }
        line_no += 1;
        if line.trim().is_empty() {
            continue;
        }
        let conv = parse_conversation_line(line.trim_end(), source, line_no, LabelPolicy::Predict)?;
        let mut value: serde_json::Value = serde_json::from_str(&line)?;
        if !conv.is_empty() {
            let preds = model.predict(&conv)?;
            let utts = value["utterances"].as_array_mut().expect("validated by the parser");
            for (u, p) in utts.iter_mut().zip(preds) {
                u["predicted"] = p.label.name().into();
            }
        }
        writeln!(out, "{value}").map_err(out_err)?;
        out.flush().map_err(out_err)?;
    }
    Ok(())
}

fn cmd_search(a: &SearchArgs, cli: &Cli, precision: Precision, stdout: &mut dyn Write) -> Result<()> {
    if a.trials == 0 {
        return Err(Error::usage("--trials must be at least 1"));
    }
    let p = prepare(&a.data, cli.seed)?;
    let configs = sample_trials(a.data.arch, &ModelConfig::default(), a.trials, cli.seed);
    let opts = options(&a.data);
    let best = std::sync::Mutex::new(None::<(f64, usize, Model)>);
    let results = random_search(configs, a.jobs, |trial, config| {
        let mut model = Model::new(config.clone(), p.table.clone())?;
        model.precision = precision;
        let out = train(model, &p.train, &p.dev, &opts, |_| {})?;
        log::info!("trial {trial}: dev macro-F1 {:.2} at epoch {}", out.best_dev_macro_f1, out.best_epoch);
        if a.out.is_some() {
            let mut guard = best.lock().expect("no worker panicked");
            let better = match &*guard {
                None => true,
                Some((score, t, _)) => {
                    out.best_dev_macro_f1 > *score || (out.best_dev_macro_f1 == *score && trial < *t)
                }
            };
            if better {
                *guard = Some((out.best_dev_macro_f1, trial, out.model.clone()));
            }
        }
        Ok((out.best_dev_macro_f1, out.best_epoch))
    })?;
    for r in &results {
        writeln!(stdout, "{}", serde_json::to_string(r)?).map_err(out_err)?;
    }
    if let (Some(path), Some((score, _, model))) = (&a.out, best.into_inner().expect("no worker panicked")) {
        let epoch = results[0].best_epoch;
        Checkpoint { model, metadata: CheckpointMetadata { epoch, dev_macro_f1: Some(score) } }.save(path)?;
    }
    Ok(())
}

fn cmd_diagnose(a: &DiagnoseArgs, stdout: &mut dyn Write) -> Result<()> {
    let family = match a.family {
        FamilyArg::Alternating => Family::Alternating,
        FamilyArg::Monologue => Family::Monologue,
    };
    let rule = match a.rule {
        RuleArg::Sum => CellRule::Sum,
        RuleArg::Max => CellRule::Max,
    };
    let r = growth_probe(a.length, family, rule, a.bias)?;
    if a.json {
        let mut v = serde_json::to_value(&r)?;
        v["sink_magnitude"] = r.sink().magnitude.into();
        v["sink_oracle"] = r.sink().oracle.into();
        v["dag"] = family.dag(a.length).to_json();
        return writeln!(stdout, "{v}").map_err(out_err);
    }
    let sink = r.sink();
    let mut text = format!(
        "family {:?} length {} rule {:?} bias {}\nsink magnitude {}\noracle {}\nmax relative error {:.3e}\nnode magnitude oracle\n",
        family,
        r.length,
        rule,
        r.bias,
        sink.magnitude,
        sink.oracle,
        r.max_relative_error()
    );
    for n in &r.nodes {
        text.push_str(&format!("{} {} {}\n", n.node, n.magnitude, n.oracle));
    }
    stdout.write_all(text.as_bytes()).map_err(out_err)
}

fn cmd_synth(a: &SynthArgs, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let spec = SyntheticSpec {
        conversations: a.conversations,
        participants: a.participants,
        min_length: a.min_length,
        max_length: a.max_length,
        dependency_rate: a.dependency_rate,
        seed,
    };
    let convs = generate_synthetic(&spec)?;
    let n = convs.len();
    if let Some(path) = &a.out {
        write_conversations(path, &convs)?;
        return writeln!(stdout, "wrote {n} conversations to {}", path.display()).map_err(out_err);
    }
    let dir = a.out_dir.as_ref().expect("clap enforces --out or --out-dir");
    let split = a.split.as_ref().expect("clap enforces --split with --out-dir");
    if split.len() != 3 {
        return Err(Error::usage("--split takes three counts: train,dev,test"));
    }
    let splits = split_corpus(convs, seed, (split[0], split[1], split[2]))?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, part) in [("train", &splits.train), ("dev", &splits.dev), ("test", &splits.test)] {
        let path = dir.join(format!("{name}.jsonl"));
        write_conversations(&path, part)?;
        writeln!(stdout, "wrote {} conversations to {}", part.len(), path.display()).map_err(out_err)?;
    }
    Ok(())
}
