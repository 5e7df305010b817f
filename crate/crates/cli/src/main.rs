//! `stancy`: train, evaluate, compare, and interpret stance classifiers
//! from the command line. Every command is batch-style: it reads its
//! inputs, writes its outputs under one directory, and exits.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use stancy_core::config::{EncoderSource, ExperimentConfig};
use stancy_core::data::{
    compute_stats, filter_split, ingest_perspectrum_with, read_canonical, write_canonical,
    DatasetStats, Split, StancePair,
};
use stancy_core::eval::{
    evaluate_records, mcnemar, predict_records_with, read_predictions, write_predictions,
    McNemarReport,
};
use stancy_core::interpret::{attribute_corpus, rank_phrases, RankedPhrases, SegmenterMode};
use stancy_core::model::{load_checkpoint, ModelKind, Prediction, StancyModel};
use stancy_core::nn::ParamStore;
use stancy_core::train::{train, LstmModel, ModelSource, TrainReport};

#[derive(Parser)]
#[command(
    name = "stancy",
    version,
    about = "Consistency-aware stance classification: training, evaluation, and phrase attribution",
    arg_required_else_help = true
)]
struct Cli {
    /// More logging per repeat (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dataset ingestion and statistics
    #[command(subcommand)]
    Data(DataCommand),
    /// Fine-tune a classifier, optionally over a hyperparameter grid
    Train(TrainArgs),
    /// Score a split with a checkpoint and report per-class metrics
    Eval(EvalArgs),
    /// McNemar significance test between two prediction files
    Compare(CompareArgs),
    /// Rank perspective phrases by their effect on the predicted stance
    Interpret(InterpretArgs),
    /// Classify a single claim/perspective pair
    Predict(PredictArgs),
}

#[derive(Subcommand)]
enum DataCommand {
    /// Convert a raw dataset release into the canonical pair file
    Ingest(IngestArgs),
    /// Print split and label counts of a canonical pair file
    Stats(StatsArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Raw dataset release directory
    #[arg(long = "in")]
    input: PathBuf,
    /// Canonical pair file to write
    #[arg(long)]
    out: PathBuf,
    /// Experiment config supplying the label mapping
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Canonical pair file
    #[arg(long = "in")]
    input: PathBuf,
    /// Emit JSON instead of the text table
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment config file (defaults apply when omitted)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Canonical pair file; overrides `data.canonical` from the config
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory; overrides `out_dir` from the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed` from the config
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint directory to score with
    #[arg(long)]
    checkpoint: PathBuf,
    /// Canonical pair file
    #[arg(long)]
    data: PathBuf,
    /// Split to score: train, dev, or test
    #[arg(long, default_value = "test", value_parser = parse_split)]
    split: Split,
    /// Directory for predictions, report, and config
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// First prediction file
    #[arg(long)]
    a: PathBuf,
    /// Second prediction file
    #[arg(long)]
    b: PathBuf,
    /// Emit JSON instead of the text summary
    #[arg(long)]
    json: bool,
    /// Also write the JSON record here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// One phrase per whitespace-delimited word
    Unigram,
    /// Phrases from a shallow chunker (falls back to words when none is configured)
    Chunk,
}

impl From<ModeArg> for SegmenterMode {
    fn from(m: ModeArg) -> SegmenterMode {
        match m {
            ModeArg::Unigram => SegmenterMode::Unigram,
            ModeArg::Chunk => SegmenterMode::ShallowChunk,
        }
    }
}

#[derive(Args)]
struct InterpretArgs {
    /// Checkpoint directory (transformer variants only)
    #[arg(long)]
    checkpoint: PathBuf,
    /// Canonical pair file
    #[arg(long)]
    data: PathBuf,
    /// Split to attribute: train, dev, or test
    #[arg(long, default_value = "test", value_parser = parse_split)]
    split: Split,
    /// Phrase segmentation mode
    #[arg(long, value_enum, default_value_t = ModeArg::Unigram)]
    mode: ModeArg,
    /// Phrases kept per class in the ranked lists
    #[arg(long, default_value_t = 25)]
    top_k: usize,
    /// Minimum corpus occurrences before a phrase is ranked
    #[arg(long, default_value_t = 2)]
    min_occurrences: u64,
    /// Directory for the ranked lists and per-pair detail
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Checkpoint directory
    #[arg(long)]
    checkpoint: PathBuf,
    /// Claim text
    #[arg(long)]
    claim: String,
    /// Perspective text
    #[arg(long)]
    perspective: String,
    /// Emit JSON instead of the text summary
    #[arg(long)]
    json: bool,
}

fn parse_split(s: &str) -> Result<Split, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Data(DataCommand::Ingest(args)) => run_ingest(args),
        Command::Data(DataCommand::Stats(args)) => run_stats(args),
        Command::Train(args) => run_train(args),
        Command::Eval(args) => run_eval(args),
        Command::Compare(args) => run_compare(args),
        Command::Interpret(args) => run_interpret(args),
        Command::Predict(args) => run_predict(args),
    }
}

/// A checkpoint of any model kind, behind one scoring interface.
enum AnyModel {
    Transformer { model: StancyModel, store: ParamStore },
    Lstm { model: LstmModel, store: ParamStore },
}

impl AnyModel {
    fn load(dir: &Path) -> Result<AnyModel> {
        let loaded = load_checkpoint(dir)
            .with_context(|| format!("loading checkpoint {}", dir.display()))?;
        Ok(match loaded.kind {
            ModelKind::LstmBaseline => {
                let (model, store) = LstmModel::from_checkpoint(loaded)?;
                AnyModel::Lstm { model, store }
            }
            _ => {
                let (model, store) = loaded.into_model()?;
                AnyModel::Transformer { model, store }
            }
        })
    }

    fn predict(&self, claim: &str, perspective: &str) -> stancy_core::Result<Prediction> {
        match self {
            AnyModel::Transformer { model, store } => model.predict(store, claim, perspective),
            AnyModel::Lstm { model, store } => model.predict(store, claim, perspective),
        }
    }

    fn predict_pair(&self, pair: &StancePair) -> stancy_core::Result<Prediction> {
        self.predict(&pair.claim_text, &pair.perspective_text)
    }
}

fn run_ingest(args: IngestArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let pairs = ingest_perspectrum_with(&args.input, &config.ingest)?;
    write_canonical(&pairs, &args.out)?;
    let stats = compute_stats(&pairs);
    println!("wrote {} pairs to {}", pairs.len(), args.out.display());
    print!("{}", render_stats_table(&stats));
    Ok(())
}

fn run_stats(args: StatsArgs) -> Result<()> {
    let pairs = read_canonical(&args.input)?;
    let stats = compute_stats(&pairs);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&stats)?);
    } else {
        print!("{}", render_stats_table(&stats));
    }
    Ok(())
}

fn render_stats_table(stats: &DatasetStats) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<8} {:>10} {:>10} {:>10}\n",
        "split", "support", "oppose", "total"
    ));
    for split in Split::ALL {
        let c = stats.split(split);
        out.push_str(&format!(
            "{:<8} {:>10} {:>10} {:>10}\n",
            split.to_string(),
            c.supporting,
            c.opposing,
            c.total()
        ));
    }
    out.push_str(&format!(
        "{:<8} {:>10} {:>10} {:>10}\n",
        "TOTAL",
        stats.total_supporting(),
        stats.total_opposing(),
        stats.grand_total()
    ));
    out
}

/// Resolve the parameter source the training config names.
fn model_source(config: &ExperimentConfig) -> Result<ModelSource> {
    Ok(match config.train.variant {
        ModelKind::LstmBaseline => ModelSource::WordEmbeddings {
            path: config
                .lstm
                .embeddings
                .clone()
                .context("the lstm_baseline variant needs lstm.embeddings")?,
            lstm: config.lstm.dims.clone(),
        },
        _ => match config.encoder.source {
            EncoderSource::Fresh => ModelSource::FreshEncoder {
                spec: config.encoder.spec.clone(),
            },
            EncoderSource::Pretrained => ModelSource::PretrainedEncoder {
                dir: config
                    .encoder
                    .resolved_path()
                    .context("encoder.source is pretrained but no directory is configured")?,
            },
        },
    })
}

fn run_train(args: TrainArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(data) = args.data {
        config.data.canonical = Some(data);
    }
    if let Some(out) = args.out {
        config.out_dir = out;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
        config.train.seed = seed;
    }
    config.validate()?;

    let canonical = config
        .data
        .canonical
        .clone()
        .context("no canonical pair file: set data.canonical or pass --data")?;
    let pairs = read_canonical(&canonical)?;
    let train_pairs = filter_split(&pairs, Split::Train);
    let dev_pairs = filter_split(&pairs, Split::Dev);
    log::info!(
        "{} training pairs, {} dev pairs",
        train_pairs.len(),
        dev_pairs.len()
    );
    let source = model_source(&config)?;

    fs::create_dir_all(&config.out_dir)?;
    config.save(&config.out_dir.join("config.toml"))?;
    let report = train(
        &config.train,
        &source,
        &train_pairs,
        &dev_pairs,
        &config.out_dir,
    )?;
    print!("{}", render_train_summary(&report));
    Ok(())
}

fn render_train_summary(report: &TrainReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<6} {:>12} {:>7} {:>14}\n",
        "point", "lr", "batch", "dev macro-F1"
    ));
    for run in &report.runs {
        let outcome = match (&run.failed, run.best_dev_macro_f1) {
            (Some(reason), _) => format!("failed: {reason}"),
            (None, Some(f1)) => format!("{f1:.2}"),
            (None, None) => "no epochs".to_string(),
        };
        let marker = if run.grid_index == report.runs[report.selected].grid_index {
            " *"
        } else {
            ""
        };
        out.push_str(&format!(
            "{:<6} {:>12} {:>7} {:>14}{marker}\n",
            run.grid_index, run.learning_rate, run.batch_size, outcome
        ));
    }
    out.push_str(&format!(
        "best checkpoint: {}\n",
        report.best_checkpoint.display()
    ));
    out
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let model = AnyModel::load(&args.checkpoint)?;
    let pairs = filter_split(&read_canonical(&args.data)?, args.split);
    if pairs.is_empty() {
        bail!("no pairs in the {} split of {}", args.split, args.data.display());
    }
    let records = predict_records_with(&pairs, |p| model.predict_pair(p))?;
    let report = evaluate_records(&records)?;

    fs::create_dir_all(&args.out)?;
    let mut config = ExperimentConfig::default();
    config.data.canonical = Some(args.data.clone());
    config.eval.split = args.split;
    config.out_dir = args.out.clone();
    config.save(&args.out.join("config.toml"))?;
    write_predictions(&records, &args.out.join("predictions.jsonl"))?;
    fs::write(
        args.out.join("eval_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;

    print!("{}", report.render_table());
    println!("wrote {}", args.out.join("predictions.jsonl").display());
    Ok(())
}

fn run_compare(args: CompareArgs) -> Result<()> {
    let a = read_predictions(&args.a)?;
    let b = read_predictions(&args.b)?;
    let report = mcnemar(&a, &b)?;
    if let Some(out) = &args.out {
        if let Some(parent) = out.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        fs::write(out, serde_json::to_string_pretty(&report)?)?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", render_mcnemar(&report));
    }
    Ok(())
}

fn render_mcnemar(report: &McNemarReport) -> String {
    format!(
        "only first correct (b): {}\nonly second correct (c): {}\nstatistic: {:.4}\nmethod: {:?}\np-value: {:.6e}\n",
        report.b_count, report.c_count, report.statistic, report.method, report.p_value
    )
}

fn run_interpret(args: InterpretArgs) -> Result<()> {
    let model = AnyModel::load(&args.checkpoint)?;
    let AnyModel::Transformer { model, store } = model else {
        bail!("phrase attribution needs a transformer checkpoint; this one is a recurrent baseline");
    };
    let pairs = filter_split(&read_canonical(&args.data)?, args.split);
    if pairs.is_empty() {
        bail!("no pairs in the {} split of {}", args.split, args.data.display());
    }
    let mode = SegmenterMode::from(args.mode);
    let attributions = attribute_corpus(&model, &store, &pairs, mode, None)?;
    let ranked = rank_phrases(
        attributions.iter().flat_map(|a| &a.attributions),
        args.top_k,
        args.min_occurrences,
    );

    fs::create_dir_all(&args.out)?;
    let mut config = ExperimentConfig::default();
    config.data.canonical = Some(args.data.clone());
    config.eval.split = args.split;
    config.interpret.mode = mode;
    config.interpret.top_k = args.top_k;
    config.interpret.min_occurrences = args.min_occurrences;
    config.out_dir = args.out.clone();
    config.save(&args.out.join("config.toml"))?;

    let mut detail = String::new();
    for a in &attributions {
        detail.push_str(&serde_json::to_string(a)?);
        detail.push('\n');
    }
    fs::write(args.out.join("attributions.jsonl"), detail)?;
    fs::write(
        args.out.join("ranked_phrases.json"),
        serde_json::to_string_pretty(&ranked)?,
    )?;

    print!("{}", render_ranked(&ranked));
    println!("wrote {}", args.out.join("attributions.jsonl").display());
    Ok(())
}

fn render_ranked(ranked: &RankedPhrases) -> String {
    let mut out = String::new();
    for (title, list) in [("SUPPORT", &ranked.support), ("OPPOSE", &ranked.oppose)] {
        out.push_str(&format!("top {title} phrases\n"));
        out.push_str(&format!(
            "{:<6} {:<24} {:>8} {:>6}\n",
            "rank", "phrase", "score", "count"
        ));
        if list.is_empty() {
            out.push_str("(none above the occurrence threshold)\n");
        }
        for (i, p) in list.iter().enumerate() {
            out.push_str(&format!(
                "{:<6} {:<24} {:>8.4} {:>6}\n",
                i + 1,
                p.phrase,
                p.score,
                p.occurrences
            ));
        }
        out.push('\n');
    }
    out
}

fn run_predict(args: PredictArgs) -> Result<()> {
    let model = AnyModel::load(&args.checkpoint)?;
    let prediction = model.predict(&args.claim, &args.perspective)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&prediction)?);
    } else {
        println!("label: {}", prediction.label);
        println!("p_support: {:.6}", prediction.probs[0]);
        println!("p_oppose: {:.6}", prediction.probs[1]);
        if let Some(cos) = prediction.cosine {
            println!("cosine: {cos:.6}");
        }
    }
    Ok(())
}
