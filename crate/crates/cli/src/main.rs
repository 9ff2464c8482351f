use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fraudaware_core::analytics::{build_report, generate_cohort, AnalyticsError, CohortSpec};
use fraudaware_core::mlcore::{elbow_select, standardize, MlError};
use fraudaware_core::personalize::{build_training_table, train_pipeline, KnowledgePool, PersonalizeError, PipelineConfig};
use fraudaware_core::simkit::{generate_scenario, ScenarioConfig, SimError};
use fraudaware_server::bots::{run_bot_session, BotArchetype, BotPolicy};
use fraudaware_server::{ApiError, EventStore, FileStore, MemoryStore, Service, ServiceConfig};

#[derive(Debug, thiserror::Error)]
#[error("{code}: {message}")]
struct CliError {
    code: &'static str,
    message: String,
}

impl CliError {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::new("ScenarioError", e.to_string())
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        CliError::new("AnalyticsError", e.to_string())
    }
}

impl From<PersonalizeError> for CliError {
    fn from(e: PersonalizeError) -> Self {
        CliError::new("TrainingError", e.to_string())
    }
}

impl From<MlError> for CliError {
    fn from(e: MlError) -> Self {
        CliError::new("MlError", e.to_string())
    }
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        CliError::new(e.code, e.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("IoError", e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Fraud-aware trading simulator and personalization toolkit.
#[derive(Debug, Parser)]
#[command(name = "fraudaware", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Seed; overrides the seed stored in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Config file for the subcommand (scenario, cohort or bot policy).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Market scenarios.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
    /// Scripted bot sessions.
    Bots {
        #[command(subcommand)]
        action: BotsAction,
    },
    /// Synthetic cohorts.
    Cohort {
        #[command(subcommand)]
        action: CohortAction,
    },
    /// Train the personalization pipeline and write the model artifact.
    Train(TrainArgs),
    /// Print the mean accuracy table for every classifier.
    Evaluate(TrainArgs),
    /// K-means inertia curve over a k range.
    Elbow(ElbowArgs),
    /// Insight reports.
    Report {
        #[command(subcommand)]
        action: ReportAction,
    },
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
enum ScenarioAction {
    Generate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Subcommand)]
enum BotsAction {
    Run(BotsArgs),
}

#[derive(Debug, Args)]
struct BotsArgs {
    #[command(flatten)]
    common: Common,
    /// Number of sessions; seeds run from --seed upwards.
    #[arg(long, default_value_t = 20)]
    n: u64,
    #[arg(long, default_value = "novice")]
    archetype: BotArchetype,
    /// Scenario config (TOML); --config is the bot policy (JSON).
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    scenario_seed: u64,
    /// Train a model first so every run gets a feedback bundle.
    #[arg(long)]
    train: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum CohortAction {
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
    },
}

#[derive(Debug, Args)]
struct CohortArgs {
    /// `default` or a path to a cohort spec; --config takes precedence.
    #[arg(long, default_value = "default")]
    cohort: String,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    cohort: CohortArgs,
    #[arg(long, default_value_t = 10)]
    splits: u64,
}

#[derive(Debug, Args)]
struct ElbowArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    cohort: CohortArgs,
    /// Inclusive range such as 1..8.
    #[arg(long, default_value = "1..8", value_parser = parse_k_range)]
    k: (usize, usize),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
enum ReportAction {
    Build {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cohort: CohortArgs,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
        /// Timestamp recorded in the report.
        #[arg(long, default_value = "unspecified")]
        generated_at: String,
        /// Skip model training; the report then has no accuracy findings.
        #[arg(long)]
        no_model: bool,
    },
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Session storage directory; defaults to $FRAUDAWARE_DATA_DIR, else memory only.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Knowledge pool (TOML).
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Advance every session's clock by one tick on this period.
    #[arg(long)]
    tick_seconds: Option<u64>,
    /// Train the default model before accepting requests.
    #[arg(long)]
    train: bool,
}

fn parse_k_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
    let lo: usize = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let hi: usize = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
    if lo == 0 || hi < lo {
        return Err(format!("empty or zero-based range {s:?}"));
    }
    Ok((lo, hi))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::new("IoError", format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            let written = stdout.write_all(text.as_bytes()).and_then(|()| {
                if text.ends_with('\n') {
                    Ok(())
                } else {
                    stdout.write_all(b"\n")
                }
            });
            match written {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn scenario_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    Ok(match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default_config(),
    })
}

fn cohort_spec(common: &Common, cohort: Option<&CohortArgs>) -> Result<CohortSpec> {
    let from = common.config.clone().or_else(|| {
        cohort.filter(|c| c.cohort != "default").map(|c| PathBuf::from(&c.cohort))
    });
    let spec = match from {
        Some(p) => CohortSpec::load(&p)?,
        None => CohortSpec::default_spec(),
    };
    Ok(match common.seed {
        Some(seed) => spec.with_seed(seed),
        None => spec,
    })
}

fn cohort_label(spec: &CohortSpec) -> String {
    format!("{}-{}", spec.id, spec.seed)
}

fn train(common: &Common, cohort: &CohortArgs, splits: u64) -> Result<fraudaware_core::personalize::PipelineModel> {
    let spec = cohort_spec(common, Some(cohort))?;
    let table = build_training_table(&generate_cohort(&spec)?)?;
    let config = PipelineConfig { n_splits: splits, ..Default::default() };
    Ok(train_pipeline(&table, &config)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scenario { action: ScenarioAction::Generate { common } } => {
            let config = scenario_config(common.config.as_deref())?;
            let scenario = generate_scenario(&config, common.seed.unwrap_or(42))?;
            emit(common.out.as_deref(), &scenario.to_json())
        }
        Command::Bots { action: BotsAction::Run(args) } => run_bots(args),
        Command::Cohort { action: CohortAction::Generate { common, format } } => {
            let spec = cohort_spec(&common, None)?;
            let cohort = generate_cohort(&spec)?;
            let text = match format {
                TableFormat::Json => serde_json::to_string_pretty(&cohort).expect("footprints serialize"),
                TableFormat::Csv => {
                    let mut buf = Vec::new();
                    build_training_table(&cohort)?.write_csv(&mut buf)?;
                    String::from_utf8(buf).expect("csv is utf-8")
                }
            };
            emit(common.out.as_deref(), &text)
        }
        Command::Train(args) => {
            let model = train(&args.common, &args.cohort, args.splits)?;
            emit(args.common.out.as_deref(), &model.to_json())
        }
        Command::Evaluate(args) => {
            let model = train(&args.common, &args.cohort, args.splits)?;
            let mut text = format!("{:<14} {:>8} {:>8} {:>8}\n", "classifier", "mean", "min", "max");
            for c in &model.classifiers {
                let min = c.split_accuracy.iter().copied().fold(f64::INFINITY, f64::min);
                let max = c.split_accuracy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let name = c.model.kind().short_name();
                text.push_str(&format!("{name:<14} {:>8.4} {min:>8.4} {max:>8.4}\n", c.mean_accuracy));
            }
            text.push_str(&format!("features: {}\n", model.selected_features.join(", ")));
            emit(args.common.out.as_deref(), &text)
        }
        Command::Elbow(args) => {
            let spec = cohort_spec(&args.common, Some(&args.cohort))?;
            let table = build_training_table(&generate_cohort(&spec)?)?;
            let (z, _) = standardize(&table)?;
            let elbow = elbow_select(&z, args.k.0..=args.k.1, spec.seed)?;
            let mut text = String::from("k,inertia,chosen\n");
            for (k, inertia) in &elbow.curve {
                text.push_str(&format!("{k},{inertia:.6},{}\n", u8::from(*k == elbow.chosen_k)));
            }
            emit(args.common.out.as_deref(), &text)
        }
        Command::Report { action: ReportAction::Build { common, cohort, format, generated_at, no_model } } => {
            let spec = cohort_spec(&common, Some(&cohort))?;
            let footprints = generate_cohort(&spec)?;
            let model = if no_model {
                None
            } else {
                Some(train_pipeline(&build_training_table(&footprints)?, &PipelineConfig::default())?)
            };
            let report = build_report(&footprints, &cohort_label(&spec), model.as_ref(), &generated_at)?;
            let text = match format {
                ReportFormat::Json => report.to_json(),
                ReportFormat::Text => report.to_text(),
            };
            emit(common.out.as_deref(), &text)
        }
        Command::Serve(args) => serve(args),
    }
}

fn open_store(dir: Option<&Path>) -> Result<Arc<dyn EventStore>> {
    let store: Arc<dyn EventStore> = match dir {
        Some(d) => Arc::new(FileStore::open(d)?),
        None => match FileStore::from_env() {
            Some(store) => Arc::new(store?),
            None => Arc::new(MemoryStore::new()),
        },
    };
    Ok(store)
}

fn run_bots(args: BotsArgs) -> Result<()> {
    let base = match &args.common.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::new("IoError", format!("{}: {e}", p.display())))?;
            serde_json::from_str::<BotPolicy>(&text).map_err(|e| CliError::new("ValidationError", e.to_string()))?
        }
        None => BotPolicy::for_archetype(args.archetype, 1),
    };
    let scenario = generate_scenario(&scenario_config(args.scenario.as_deref())?, args.scenario_seed)?;
    let svc = Service::open(
        scenario,
        format!("scenario-{}", args.scenario_seed),
        KnowledgePool::default_pool(),
        open_store(None)?,
        ServiceConfig::default(),
    )?;
    if args.train {
        svc.train(&Default::default())?;
    }
    let first = args.common.seed.unwrap_or(1);
    let mut text = String::from("session,archetype,seed,events,n_fraud_bought,n_frauds_reported,t_market_page,predicted\n");
    for seed in first..first + args.n {
        let run = run_bot_session(&svc, &base.clone().with_seed(seed))?;
        let predicted = run.feedback.map_or_else(|| "-".to_string(), |b| b.predicted_type.to_string());
        text.push_str(&format!(
            "{},{:?},{seed},{},{},{},{:.1},{predicted}\n",
            run.session_id,
            run.archetype,
            run.events.len(),
            run.footprint.n_fraud_bought,
            run.footprint.n_frauds_reported,
            run.footprint.t_market_page,
        ));
    }
    emit(args.common.out.as_deref(), &text)
}

fn serve(args: ServeArgs) -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let seed = args.common.seed.unwrap_or(42);
    let scenario = generate_scenario(&scenario_config(args.common.config.as_deref())?, seed)?;
    let pool = match &args.pool {
        Some(p) => KnowledgePool::load(p)?,
        None => KnowledgePool::default_pool(),
    };
    let store = open_store(args.data_dir.as_deref())?;
    let svc = Arc::new(Service::open(scenario, format!("scenario-{seed}"), pool, store, ServiceConfig::default())?);
    if args.train {
        svc.train(&Default::default())?;
    }
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| CliError::new("ValidationError", format!("bad address: {e}")))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(fraudaware_server::serve(svc, addr, args.tick_seconds.map(Duration::from_secs)))?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
