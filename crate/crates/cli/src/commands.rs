//! Subcommand definitions and their implementations. Each command renders
//! its output into a byte buffer; `main` decides where it goes.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use popgen_core::genetics::hw_rounded_counts;
use popgen_core::rng::{fresh_seed, RNG_ALGORITHM};
use popgen_core::session::{counts_csv, import_csv, trajectory_csv, SCHEMA_VERSION};
use popgen_core::stats::{fixation_report, lln_study};
use popgen_core::{
    run_trajectory_from, AlleleFrequencies, Error, ExperimentKind, ExperimentSession, Fitness, GenerationState,
    GenotypeCounts, Mode, SessionStore, SimulationParams, Source,
};
use serde_json::json;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "popgen", version, about = "Population genetics model experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trajectory and print it.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo study over many replicates.
    Batch(BatchArgs),
    /// Estimate frequencies and test Hardy–Weinberg proportions for observed counts.
    Analyze(AnalyzeArgs),
    /// Serve the HTTP API and the lab pages.
    Serve(ServeArgs),
    /// Write a stored session as CSV.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyKind {
    Lln,
    Fixation,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// ideal, ideal_counting, selection, gene_flow, drift or automated (exp1..exp6 also accepted).
    #[arg(long, default_value = "ideal")]
    pub kind: ExperimentKind,
    #[arg(long, default_value_t = popgen_core::DEFAULT_POPULATION)]
    pub n: u64,
    #[arg(long, default_value_t = 10)]
    pub generations: u64,
    /// Seed for the generation streams; a fresh one is drawn and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Viabilities wAA,wAa,waa.
    #[arg(long, default_value = "1,1,1")]
    pub fitness: Fitness,
    /// Migration rate m.
    #[arg(long, default_value_t = 0.0)]
    pub migration: f64,
    /// A frequency among migrants.
    #[arg(long, default_value_t = 0.0)]
    pub migrant_freq: f64,
    /// Starting A frequency (parental counts are its rounded HW proportions).
    #[arg(long, conflicts_with = "counts")]
    pub p0: Option<f64>,
    /// Parental counts D,H,R.
    #[arg(long, value_parser = parse_counts)]
    pub counts: Option<GenotypeCounts>,
    #[arg(long, default_value = "stochastic")]
    pub mode: Mode,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long, value_enum)]
    pub study: StudyKind,
    /// Population sizes for the lln study.
    #[arg(long, value_delimiter = ',', default_value = "50,500,5000")]
    pub sizes: Vec<u64>,
    #[arg(long, default_value_t = 1000)]
    pub replicates: u64,
    #[arg(long, default_value_t = 0.5)]
    pub p0: f64,
    /// Population size for the fixation study.
    #[arg(long, default_value_t = 10)]
    pub n: u64,
    #[arg(long, default_value_t = 1000)]
    pub max_generations: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Observed counts D,H,R; repeat for several rows.
    #[arg(long, value_parser = parse_counts, required_unless_present = "input")]
    pub counts: Vec<GenotypeCounts>,
    /// A ledger CSV to re-derive.
    #[arg(long, conflicts_with = "counts")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "POPGEN_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Overrides the port of --bind.
    #[arg(long)]
    pub port: Option<u16>,
    /// Keep one JSON document per session here; in-memory only when absent.
    #[arg(long)]
    pub store_dir: Option<PathBuf>,
    /// Built lab-ui bundle to serve at /.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// A session document.
    #[arg(long, conflicts_with_all = ["store", "id"], required_unless_present = "store")]
    pub session: Option<PathBuf>,
    #[arg(long, requires = "id")]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn parse_counts(s: &str) -> Result<GenotypeCounts, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [d, h, r] = parts.as_slice() else {
        return Err(format!("expected D,H,R, got '{s}'"));
    };
    let num = |x: &str| x.parse::<u64>().map_err(|_| format!("invalid count '{x}'"));
    Ok(GenotypeCounts::new(num(d)?, num(h)?, num(r)?))
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(_) | Error::FrequencyOutOfRange(_) | Error::WrongTotal { .. } => {
                CliError::Usage(e.to_string())
            }
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Output of a finished command plus the seed it ran with, if stochastic.
#[derive(Debug)]
pub struct Output {
    pub bytes: Vec<u8>,
    pub seed: Option<u64>,
}

fn to_json(v: &serde_json::Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("json value serializes");
    out.push(b'\n');
    out
}

pub fn simulate(args: &SimulateArgs) -> Result<Output, CliError> {
    let seed = args.seed.unwrap_or_else(fresh_seed);
    let mut params = SimulationParams::new(args.kind)
        .with_n(args.n)
        .with_generations(args.generations)
        .with_seed(seed)
        .with_fitness(args.fitness)
        .with_migration(args.migration, args.migrant_freq)
        .with_mode(args.mode);
    params.initial_p = match args.counts {
        Some(c) => popgen_core::estimate_gene_counting(&c).ok().map(|f| f.p),
        None => Some(args.p0.unwrap_or(0.5)),
    };
    params.validate()?;
    let start = match args.counts {
        Some(counts) => GenerationState::from_counts(counts)?,
        None => {
            let p0 = args.p0.unwrap_or(0.5);
            let freqs = AlleleFrequencies::from_p(p0)?;
            let counts = hw_rounded_counts(&freqs, args.n)?;
            match args.mode {
                // the recurrences start from p0 itself
                Mode::Deterministic => GenerationState { counts, freqs },
                Mode::Stochastic => GenerationState::from_counts(counts)?,
            }
        }
    };
    let trajectory = run_trajectory_from(start, &params)?;
    let bytes = match args.format {
        Format::Csv => trajectory_csv(&trajectory, args.kind.headline())?,
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "rng_algorithm": RNG_ALGORITHM,
            "params": params,
            "trajectory": trajectory,
        })),
    };
    Ok(Output {
        bytes,
        seed: Some(seed),
    })
}

pub fn batch(args: &BatchArgs) -> Result<Output, CliError> {
    let seed = args.seed.unwrap_or_else(fresh_seed);
    let report = match args.study {
        StudyKind::Lln => {
            if args.replicates < 2 {
                return Err(CliError::Usage(
                    "--replicates must be at least 2 for the lln study".into(),
                ));
            }
            lln_study(&args.sizes, args.replicates, args.p0, seed)?
        }
        StudyKind::Fixation => fixation_report(args.p0, args.n, args.replicates, args.max_generations, seed)?,
    };
    let bytes = match args.format {
        Format::Csv => report.to_csv_string()?.into_bytes(),
        Format::Json => to_json(&json!({ "schema_version": SCHEMA_VERSION, "report": report })),
    };
    Ok(Output {
        bytes,
        seed: Some(seed),
    })
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Output, CliError> {
    let rows: Vec<(usize, GenotypeCounts)> = match &args.input {
        Some(path) => import_csv(&std::fs::read(path)?)?
            .into_iter()
            .map(|r| (r.generation, r.counts))
            .collect(),
        None => args.counts.iter().copied().enumerate().collect(),
    };
    let bytes = match args.format {
        Format::Csv => counts_csv(&rows, popgen_core::Estimator::GeneCounting, Source::Manual)?,
        Format::Json => {
            let mut out = Vec::with_capacity(rows.len());
            for (t, counts) in &rows {
                let derived = popgen_core::session::Derived::compute(counts, popgen_core::Estimator::GeneCounting)?;
                out.push(json!({ "generation": t, "counts": counts, "derived": derived }));
            }
            to_json(&json!({ "schema_version": SCHEMA_VERSION, "rows": out }))
        }
    };
    Ok(Output { bytes, seed: None })
}

pub fn export(args: &ExportArgs) -> Result<Output, CliError> {
    let session = match (&args.session, &args.store, &args.id) {
        (Some(path), _, _) => ExperimentSession::from_document(&std::fs::read_to_string(path)?)?,
        (None, Some(dir), Some(id)) => SessionStore::with_directory(dir)?.load_session(id)?,
        _ => return Err(CliError::Usage("give --session FILE or --store DIR --id ID".into())),
    };
    Ok(Output {
        bytes: session.export_csv()?,
        seed: None,
    })
}

/// Resolves `--bind` and `--port` into a socket address string.
pub fn bind_address(args: &ServeArgs) -> String {
    match args.port {
        Some(port) => {
            let host = args.bind.rsplit_once(':').map_or(args.bind.as_str(), |(h, _)| h);
            format!("{host}:{port}")
        }
        None => args.bind.clone(),
    }
}

pub async fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let store = match &args.store_dir {
        Some(dir) => SessionStore::with_directory(dir)?,
        None => SessionStore::in_memory(),
    };
    let app = crate::api::router(Arc::new(store), args.static_dir.clone());
    let addr = bind_address(args);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| CliError::Runtime(format!("cannot bind {addr}: {e}")))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
