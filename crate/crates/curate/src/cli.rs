//! Argument parsing and dispatch.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Parser, Subcommand};

use crate::commands::{self, Context};
use crate::config::{KeyKind, RunConfig, Stage};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "curate",
    version,
    about = "Evaluate speech-corpus preprocessing pipelines"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML). Defaults apply when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every randomized step; overrides `seed` (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, env = "CURATE_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with ground-truth sidecars.
    Synth,
    /// Decode manifests into snapshots.
    Ingest,
    /// Tune the VAD per speech-rate class and cut utterances.
    Segment,
    /// Compute WADA-SNR, F0 std and MCD sidecars.
    Metrics {
        #[arg(long, value_enum)]
        stage: Option<Stage>,
    },
    /// Merge metric sidecars into snapshots.
    Attach {
        #[arg(long, value_enum)]
        stage: Option<Stage>,
        /// Extra sidecar as `METRIC=PATH`; `{variant}` expands per variant.
        #[arg(long = "sidecar", value_name = "METRIC=PATH")]
        sidecars: Vec<String>,
        /// Allow extra sidecars to cover only part of a snapshot.
        #[arg(long)]
        partial: bool,
        /// Match extra sidecars by source recording instead of utterance id.
        #[arg(long)]
        by_source: bool,
    },
    /// Score and rank every configuration of the grid.
    Sweep,
    /// Rank a table of subset scores.
    Rank {
        /// CSV with `config,dr,sq,ap,sd` columns; defaults to `<out>/sweep.csv`.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
}

fn context(cli: &Cli) -> CliResult<Context> {
    let cwd = std::env::current_dir().context("reading the working directory")?;
    let (config, base) = match &cli.config {
        Some(path) => {
            if !path.is_file() {
                return Err(CliError::validation(anyhow::anyhow!(
                    "config not found: {}",
                    path.display()
                )));
            }
            let config = RunConfig::load(path).map_err(CliError::Validation)?;
            let dir = path
                .parent()
                .map(|p| cwd.join(p))
                .unwrap_or_else(|| cwd.clone());
            (config, dir)
        }
        None => (RunConfig::default(), cwd.clone()),
    };
    Ok(Context::new(
        config,
        base,
        cli.out.as_ref().map(|o| cwd.join(o)),
        cli.seed,
    ))
}

pub fn dispatch(cli: &Cli, ctx: &Context) -> CliResult<()> {
    match &cli.command {
        Command::Synth => commands::synth::run(ctx),
        Command::Ingest => commands::ingest::run(ctx),
        Command::Segment => commands::segment::run(ctx),
        Command::Metrics { stage } => commands::metrics::run(ctx, *stage),
        Command::Attach {
            stage,
            sidecars,
            partial,
            by_source,
        } => {
            let key = if *by_source {
                KeyKind::Source
            } else {
                KeyKind::Id
            };
            let extra = sidecars
                .iter()
                .map(|s| commands::attach::parse_sidecar_flag(s, *partial, key))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::validation(anyhow::anyhow!(e)))?;
            commands::attach::run(ctx, *stage, &extra)
        }
        Command::Sweep => commands::sweep::run(ctx),
        Command::Rank { scores } => commands::rank::run(ctx, scores.as_deref()),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let ctx = context(cli)?;
    let jobs = match cli.jobs {
        Some(0) => {
            return Err(CliError::validation(anyhow::anyhow!(
                "--jobs must be at least 1"
            )))
        }
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("starting the worker pool")?;
    pool.install(|| dispatch(cli, &ctx))
}

/// Parses `args`, runs the command and maps the outcome to the exit-code
/// contract: 0 success, 1 validation error, 2 runtime or data error.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
