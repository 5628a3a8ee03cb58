//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 capacity error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corpus::{compute_stats, read_corpus, write_olner, Corpus, Format};
use crate::demos::{demo_spurious, demo_uniqueness};
use crate::eval;
use crate::features::{load_brown_clusters, FeatureConfig};
use crate::learning::{train, Model, TrainConfig};
use crate::network::Scheme;
use crate::{synth, Error, Result};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sepmark", version, about = "Overlapping mention recognition")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write it with a manifest and an objective log.
    Train(TrainArgs),
    /// Tag a corpus and print it in OLNER format.
    Predict(PredictArgs),
    /// Score a model on a gold corpus.
    Evaluate(EvaluateArgs),
    /// Sweep the mention-penalty offset on a dev corpus.
    TunePenalty(TuneArgs),
    /// Print corpus statistics.
    Stats(StatsArgs),
    /// Compare hypergraph and true partition functions on the restricted graph.
    DemoSpurious(SpuriousArgs),
    /// Check the mention-set/separator bijection exhaustively.
    DemoUniqueness(UniquenessArgs),
    /// Measure decoding throughput.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Olner,
    Conll,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Olner => Format::Olner,
            FormatArg::Conll => Format::Conll,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Rerun the configuration recorded in a train manifest.
    #[arg(long, value_name = "FILE", conflicts_with_all = [
        "scheme", "features", "feature_config", "l2", "max_iters", "brown", "seed", "format", "train", "dev", "strict",
    ])]
    from_manifest: Option<PathBuf>,
    /// lcrf-single, lcrf-multi, state, edge or hypergraph.
    #[arg(long, default_value = "edge")]
    scheme: Scheme,
    /// Feature preset: ace, genia or conll.
    #[arg(long, default_value = "genia")]
    features: String,
    /// TOML feature configuration; overrides --features.
    #[arg(long, value_name = "FILE")]
    feature_config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    l2: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Brown cluster file (bit-string, word, count per line).
    #[arg(long, value_name = "FILE")]
    brown: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "olner")]
    format: FormatArg,
    #[arg(long, value_name = "FILE", required_unless_present = "from_manifest")]
    train: Option<PathBuf>,
    /// Corpus scored after training.
    #[arg(long, value_name = "FILE")]
    dev: Option<PathBuf>,
    /// Fail on gold mentions the scheme cannot represent.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "olner")]
    format: FormatArg,
    /// Write here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "FILE")]
    test: PathBuf,
    #[arg(long, value_enum, default_value = "olner")]
    format: FormatArg,
    /// Also score sentences with and without overlapping mentions.
    #[arg(long)]
    split_overlap: bool,
    /// Second model for a paired bootstrap significance test.
    #[arg(long, value_name = "FILE")]
    baseline: Option<PathBuf>,
    #[arg(long, default_value_t = eval::MIN_REPLICATES)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "FILE")]
    dev: PathBuf,
    #[arg(long, value_enum, default_value = "olner")]
    format: FormatArg,
    /// Offsets as lo:hi:step.
    #[arg(long, value_name = "LO:HI:STEP", allow_hyphen_values = true)]
    penalty_grid: Option<String>,
    /// Save the model with the chosen offset.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "olner")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct SpuriousArgs {
    /// Six comma-separated log-weights for edges A to F.
    #[arg(long, value_name = "W,W,W,W,W,W")]
    weights: Option<String>,
}

#[derive(Debug, Args)]
struct UniquenessArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Corpus to decode; synthetic sentences when absent.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "olner")]
    format: FormatArg,
    /// Number of synthetic sentences.
    #[arg(long, default_value_t = 200)]
    sentences: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Everything that determines a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecipe {
    pub scheme: Scheme,
    pub features: String,
    pub feature_config: Option<PathBuf>,
    pub format: Format,
    pub train: PathBuf,
    pub dev: Option<PathBuf>,
    pub brown: Option<PathBuf>,
    pub config: TrainConfig,
}

/// Provenance record written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub corpora: Vec<PathBuf>,
    pub model: Option<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

/// `<file>.manifest.json` next to `file`.
pub fn manifest_path(file: &Path) -> PathBuf {
    let mut name = file.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

struct Run {
    command: &'static str,
    started: f64,
}

impl Run {
    fn start(command: &'static str) -> Self {
        Self {
            command,
            started: now(),
        }
    }

    fn finish(
        &self,
        config: impl Serialize,
        seed: u64,
        corpora: Vec<PathBuf>,
        model: Option<PathBuf>,
        outputs: Vec<PathBuf>,
    ) -> Result<()> {
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            corpora,
            model,
            outputs: outputs.clone(),
            started_unix: self.started,
            finished_unix: now(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        for out in &outputs {
            fs::write(manifest_path(out), &text)?;
        }
        Ok(())
    }
}

/// Runs one command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("SEPMARK_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", error_kind(&e));
            exit_code(&e)
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "parse error",
        Error::InvalidSequence { .. } => "invalid separator sequence",
        Error::Capacity { .. } => "capacity error",
        Error::BoundExceeded { .. } => "bound exceeded",
        Error::EmptySentence => "empty sentence",
        Error::Misaligned(_) => "misaligned inputs",
        Error::InvalidArgument(_) => "invalid argument",
        Error::Model(_) | Error::Json(_) => "model error",
        Error::Io(_) => "i/o error",
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Capacity { .. } => EXIT_CAPACITY,
        Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::TunePenalty(a) => cmd_tune(a),
        Command::Stats(a) => {
            let corpus = load(&a.input, a.format.into())?;
            print!("{}", compute_stats(&corpus).report());
            Ok(())
        }
        Command::DemoSpurious(a) => {
            let weights = a.weights.as_deref().map(parse_weights).transpose()?;
            print!("{}", demo_spurious(weights)?.report());
            Ok(())
        }
        Command::DemoUniqueness(a) => {
            print!("{}", demo_uniqueness(a.n)?.report());
            Ok(())
        }
        Command::Bench(a) => cmd_bench(a),
    }
}

fn load(path: &Path, format: Format) -> Result<Corpus> {
    read_corpus(path, format).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        e => e,
    })
}

fn parse_weights(text: &str) -> Result<[f64; 6]> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidArgument(format!("--weights: {e}")))?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| Error::InvalidArgument(format!("--weights needs 6 values, got {}", v.len())))
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::InvalidArgument(format!("--penalty-grid expects lo:hi:step, got {text:?}"));
    let [lo, hi, step] = parts[..] else {
        return Err(bad());
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    eval::penalty_grid(num(lo)?, num(hi)?, num(step)?)
}

fn train_recipe(a: &TrainArgs) -> Result<TrainRecipe> {
    if let Some(path) = &a.from_manifest {
        let manifest = RunManifest::load(path)?;
        if manifest.command != "train" {
            return Err(Error::InvalidArgument(format!(
                "{} records a {} run, not train",
                path.display(),
                manifest.command
            )));
        }
        return Ok(serde_json::from_value(manifest.config)?);
    }
    Ok(TrainRecipe {
        scheme: a.scheme,
        features: a.features.clone(),
        feature_config: a.feature_config.clone(),
        format: a.format.into(),
        train: a.train.clone().expect("required by the parser"),
        dev: a.dev.clone(),
        brown: a.brown.clone(),
        config: TrainConfig {
            l2: a.l2,
            max_iters: a.max_iters,
            seed: a.seed,
            strict: a.strict,
            ..TrainConfig::default()
        },
    })
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let run = Run::start("train");
    let recipe = train_recipe(&a)?;
    let features = match &recipe.feature_config {
        Some(path) => FeatureConfig::load(path)?,
        None => FeatureConfig::preset(&recipe.features)?,
    };
    let brown = recipe.brown.as_deref().map(load_brown_clusters).transpose()?;
    if features.uses_brown() && brown.is_none() {
        log::warn!("feature set {} uses Brown clusters but no --brown file was given", features.name);
    }
    let corpus = load(&recipe.train, recipe.format)?;
    let outcome = train(&corpus, recipe.scheme, &features, brown, &recipe.config)?;
    for (id, m) in &outcome.dropped {
        log::warn!("sentence {id}: dropped gold mention {m} not representable by {}", recipe.scheme);
    }
    outcome.model.save(&a.out)?;

    let log_path = {
        let mut p = a.out.as_os_str().to_owned();
        p.push(".objective.tsv");
        PathBuf::from(p)
    };
    let mut log_text = String::from("iteration\tobjective\tgrad_norm\tseconds\n");
    for r in &outcome.reports {
        let _ = writeln!(log_text, "{}\t{}\t{}\t{:.3}", r.iteration, r.objective, r.grad_norm, r.seconds);
    }
    fs::write(&log_path, log_text)?;

    let last = outcome.reports.last();
    println!(
        "trained {} model: {} features, {} iterations, stop {:?}, objective {}",
        recipe.scheme,
        outcome.model.weights.len(),
        last.map_or(0, |r| r.iteration),
        outcome.stop,
        last.map_or(f64::NAN, |r| r.objective)
    );
    if !outcome.dropped.is_empty() {
        println!("dropped {} gold mentions the scheme cannot represent", outcome.dropped.len());
    }
    let mut corpora = vec![recipe.train.clone()];
    if let Some(dev) = &recipe.dev {
        let dev_corpus = load(dev, recipe.format)?;
        let predicted = outcome.model.predict_all(&dev_corpus.sentences)?;
        print!("{}", eval::score(&dev_corpus, &predicted)?.report("dev"));
        corpora.push(dev.clone());
    }
    corpora.extend(recipe.brown.iter().cloned());
    run.finish(&recipe, recipe.config.seed, corpora, Some(a.out.clone()), vec![a.out, log_path])
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let run = Run::start("predict");
    let model = Model::load(&a.model)?;
    let corpus = load(&a.input, a.format.into())?;
    let predicted = model.predict_all(&corpus.sentences)?;
    let sentences = corpus
        .sentences
        .iter()
        .zip(predicted)
        .map(|(s, m)| s.with_mentions(m))
        .collect();
    let tagged = Corpus::with_labels(sentences, model.labels.iter().cloned());
    let bytes = write_olner(&tagged);
    match a.out {
        Some(out) => {
            fs::write(&out, bytes)?;
            #[derive(Serialize)]
            struct Config {
                format: Format,
            }
            run.finish(
                Config {
                    format: a.format.into(),
                },
                0,
                vec![a.input],
                Some(a.model),
                vec![out],
            )
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let gold = load(&a.test, a.format.into())?;
    let predicted = model.predict_all(&gold.sentences)?;
    if a.split_overlap {
        let (all, overlapping, plain) = eval::score_split(&gold, &predicted)?;
        print!("{}", all.report("all"));
        print!("{}", overlapping.report("overlapping"));
        print!("{}", plain.report("non-overlapping"));
    } else {
        print!("{}", eval::score(&gold, &predicted)?.report("all"));
    }
    if let Some(path) = &a.baseline {
        let baseline = Model::load(path)?;
        let other = baseline.predict_all(&gold.sentences)?;
        let sig = eval::bootstrap_significance(&gold, &predicted, &other, a.replicates, a.seed)?;
        println!(
            "[significance]\nf1_model={:.6}\nf1_baseline={:.6}\np={:.6}\nreplicates={}",
            sig.f1_a, sig.f1_b, sig.p_value, sig.replicates
        );
    }
    Ok(())
}

fn cmd_tune(a: TuneArgs) -> Result<()> {
    let run = Run::start("tune-penalty");
    let mut model = Model::load(&a.model)?;
    let dev = load(&a.dev, a.format.into())?;
    let grid = match &a.penalty_grid {
        Some(text) => parse_grid(text)?,
        None => eval::default_penalty_grid(),
    };
    let sweep = eval::tune_penalty(&mut model, &dev, &grid)?;
    print!("{}", sweep.report());
    if let Some(out) = a.out {
        model.save(&out)?;
        #[derive(Serialize)]
        struct Config<'a> {
            grid: &'a [f64],
            chosen: f64,
            format: Format,
        }
        run.finish(
            Config {
                grid: &grid,
                chosen: sweep.chosen,
                format: a.format.into(),
            },
            0,
            vec![a.dev],
            Some(a.model),
            vec![out],
        )?;
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let corpus = match &a.input {
        Some(path) => load(path, a.format.into())?,
        None => synth::generate(a.sentences, a.seed),
    };
    print!("{}", eval::throughput(&model, &corpus.sentences)?.report());
    Ok(())
}
