//! Argument parsing and dispatch for the `binsort` binary.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 I/O error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use binsort_core::classifier::{evaluate, read_model, write_model, BaselineModel, Classifier, ClassifierError, GroundTruthClassifier};
use binsort_core::device::{Capacities, DeviceConfig, DeviceError};
use binsort_core::imaging::{augment_one, read_corpus, split_dataset, write_corpus, ImagingError, LabeledImage};
use binsort_core::rng;
use binsort_core::simulator::{generate_synthetic_corpus, run_scenario, ImageLibrary, Scenario, SimError, SimOptions};
use binsort_core::telemetry::{MemorySink, SystemClock, TelemetryError, TelemetryService};
use binsort_server::{watch, ClientError, HttpClient, StreamFrame, WatchError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "binsort", version, about = "Sorting trash bin: simulator, telemetry server and classifier tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the telemetry server.
    Serve(ServeArgs),
    /// Run a scenario through a simulated bin and write the trace.
    Simulate(SimulateArgs),
    /// Generate a random scenario over a corpus.
    Scenario(ScenarioArgs),
    /// Write a synthetic labeled corpus.
    Corpus(CorpusArgs),
    /// Write each corpus image plus its four augmented variants.
    Augment(AugmentArgs),
    /// Train the nearest-centroid classifier on a split of a corpus.
    Train(TrainArgs),
    /// Evaluate a model on a corpus, or on one side of its split.
    Eval(EvalArgs),
    /// Print the server's event stream as JSON lines.
    Watch(WatchArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Address to listen on; port 0 picks a free port.
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Event log, created if missing and replayed on start.
    #[arg(long, default_value = "events.log")]
    pub log: PathBuf,
    /// Require this bearer token on every request.
    #[arg(long, env = "BINSORT_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Corpus directory holding the scenario's images.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Trained model file.
    #[arg(long, required_unless_present = "oracle", conflicts_with = "oracle")]
    pub model: Option<PathBuf>,
    /// Classify with the corpus labels instead of a model.
    #[arg(long)]
    pub oracle: bool,
    /// Report to this telemetry server.
    #[arg(long, env = "BINSORT_SERVER", conflicts_with = "local")]
    pub server: Option<String>,
    /// Keep telemetry in memory; no network.
    #[arg(long)]
    pub local: bool,
    #[arg(long, env = "BINSORT_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
    /// Device settings (TOML); capacities come from the scenario.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trace output, one JSON object per cycle.
    #[arg(long, default_value = "trace.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Items per bin before it reports full.
    #[arg(long, default_value_t = 20)]
    pub capacity: u32,
    /// Mean seconds between arrivals.
    #[arg(long, default_value_t = 5.0)]
    pub gap: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub per_class: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subset {
    All,
    Train,
    Validation,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Which part of the corpus to score.
    #[arg(long, value_enum, default_value = "all")]
    pub subset: Subset,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct WatchArgs {
    #[arg(long, env = "BINSORT_SERVER", default_value = "http://127.0.0.1:8080")]
    pub server: String,
    /// Replay events after this offset first.
    #[arg(long)]
    pub since: Option<u64>,
    /// Stop after this many frames.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, env = "BINSORT_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ImagingError> for CliError {
    fn from(e: ImagingError) -> Self {
        match e {
            ImagingError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::Io(_) | ClassifierError::Imaging(ImagingError::Io(_)) => CliError::Io(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io(_) | SimError::Device(DeviceError::Io(_)) => CliError::Io(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<DeviceError> for CliError {
    fn from(e: DeviceError) -> Self {
        match e {
            DeviceError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<TelemetryError> for CliError {
    fn from(e: TelemetryError) -> Self {
        match e {
            TelemetryError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<WatchError> for CliError {
    fn from(e: WatchError) -> Self {
        match e {
            WatchError::Address(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("binsort: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Serve(a) => serve(a),
        Command::Simulate(a) => simulate(a),
        Command::Scenario(a) => scenario(a),
        Command::Corpus(a) => corpus(a),
        Command::Augment(a) => augment(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Watch(a) => watch_events(a),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(CliError::from)
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let service = Arc::new(TelemetryService::open(&args.log, Arc::new(SystemClock))?);
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.addr).await?;
        // Scripts read this line to find the port.
        println!("listening on http://{}", listener.local_addr()?);
        std::io::stdout().flush()?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        binsort_server::serve(listener, service, args.token, shutdown).await?;
        Ok(())
    })
}

fn load_corpus(dir: &Path) -> Result<Vec<LabeledImage>, CliError> {
    let items = read_corpus(dir)?;
    if items.is_empty() {
        return Err(CliError::Runtime(format!("corpus {} has no images", dir.display())));
    }
    Ok(items)
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    if !args.local && args.server.is_none() {
        return Err(CliError::Usage("simulate needs --local or --server (or BINSORT_SERVER)".into()));
    }
    let scenario = Scenario::load(&args.scenario)?;
    let corpus = load_corpus(&args.corpus)?;
    let library = ImageLibrary::new(corpus.iter().cloned());
    let device = match &args.config {
        Some(path) => DeviceConfig::load(path)?,
        None => DeviceConfig::default(),
    };
    let options = SimOptions { device, ..SimOptions::default() };
    let classifier: Box<dyn Classifier> = match &args.model {
        Some(path) => Box::new(read_model(path)?),
        None => Box::new(GroundTruthClassifier::new(&corpus)),
    };

    let trace = if args.local {
        run_scenario(&scenario, &library, classifier.as_ref(), MemorySink::default(), &options)?
    } else {
        let server = args.server.as_deref().expect("checked above");
        let sink = HttpClient::new(server, args.token.clone())?;
        run_scenario(&scenario, &library, classifier.as_ref(), sink, &options)?
    };
    let mut out = BufWriter::new(File::create(&args.out)?);
    trace.write_jsonl(&mut out)?;
    println!(
        "{} cycles ({} completed), classification accuracy {:.4}, routing accuracy {:.4}, full alerts {}, trace {}",
        trace.records.len(),
        trace.completed_cycles(),
        trace.classification_accuracy(),
        trace.routing_accuracy(),
        binsort_core::simulator::alert_messages(&trace).count(),
        args.out.display()
    );
    Ok(())
}

fn scenario(args: ScenarioArgs) -> Result<(), CliError> {
    if args.capacity == 0 || !args.gap.is_finite() || args.gap <= 0.0 {
        return Err(CliError::Usage("--capacity and --gap must be positive".into()));
    }
    let corpus = load_corpus(&args.corpus)?;
    let capacities = Capacities { recyclable: args.capacity, non_recyclable: args.capacity };
    let scenario = Scenario::random(args.seed, args.count, &corpus, capacities, args.gap);
    std::fs::write(&args.out, scenario.to_json() + "\n")?;
    println!("{} items written to {}", scenario.items.len(), args.out.display());
    Ok(())
}

fn corpus(args: CorpusArgs) -> Result<(), CliError> {
    if args.per_class == 0 {
        return Err(CliError::Usage("--per-class must be at least 1".into()));
    }
    let items = generate_synthetic_corpus(args.seed, args.per_class);
    write_corpus(&args.out, &items)?;
    println!("{} images written to {}", items.len(), args.out.display());
    Ok(())
}

fn augment(args: AugmentArgs) -> Result<(), CliError> {
    let items = load_corpus(&args.input)?;
    let mut rng = rng::seeded(args.seed);
    let mut out = Vec::with_capacity(items.len() * 5);
    for item in &items {
        let variants = augment_one(item, &mut rng)?;
        out.push(item.clone());
        out.extend(variants);
    }
    write_corpus(&args.out, &out)?;
    println!("{} images ({} originals) written to {}", out.len(), items.len(), args.out.display());
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let items = load_corpus(&args.corpus)?;
    let split = split_dataset(&items, args.split.train_fraction, args.split.split_seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let model = BaselineModel::train(&split.train)?;
    write_model(&args.out, &model)?;
    print!("trained on {} images, ", split.train.len());
    if split.validation.is_empty() {
        println!("no validation images");
    } else {
        let report = evaluate(&model, &split.validation)?;
        println!("validation accuracy {:.4} on {} images", report.accuracy, report.total);
    }
    println!("model written to {}", args.out.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), CliError> {
    let model = read_model(&args.model)?;
    let items = load_corpus(&args.corpus)?;
    let items = match args.subset {
        Subset::All => items,
        subset => {
            let split = split_dataset(&items, args.split.train_fraction, args.split.split_seed)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            if subset == Subset::Train {
                split.train
            } else {
                split.validation
            }
        }
    };
    let report = evaluate(&model, &items)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{report}");
    }
    Ok(())
}

fn watch_events(args: WatchArgs) -> Result<(), CliError> {
    let limit = args.count.unwrap_or(usize::MAX);
    if limit == 0 {
        return Ok(());
    }
    let mut seen = 0usize;
    let mut stdout = std::io::stdout().lock();
    let mut write_error = None;
    runtime()?.block_on(watch(&args.server, args.since, args.token.as_deref(), |frame| {
        if let StreamFrame::Gap(g) = &frame {
            eprintln!("binsort: offset {} is past the head {}; showing live events only", g.requested, g.head);
        }
        if let Err(e) = writeln!(stdout, "{}", frame.to_json()).and_then(|()| stdout.flush()) {
            write_error = Some(e);
            return false;
        }
        seen += 1;
        seen < limit
    }))?;
    match write_error {
        Some(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
