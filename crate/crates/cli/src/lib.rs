//! Command-line harness: configuration, cached counts, sweeps, the energy
//! oracle and the variational self-checks.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use cache::Cache;
pub use commands::Context;
pub use config::RunConfig;
pub use error::CliError;

use config::Format;
use report::{sweep_csv, to_json, write_file};

#[derive(Debug, Clone, Parser)]
#[command(name = "oscgraph", version, about = "Eigenvalue counts below the threshold for two coupled oscillators")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides OUTPUT_DIR and `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; overrides `solver.threads`. 0 uses every processor.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Neither read nor write cached counts.
    #[arg(long, global = true)]
    pub no_cache: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Converged count of the configured model.
    Count,
    /// Counts along the configured sweep path.
    Sweep,
    /// Energy scan cross-check of the count.
    Oracle,
    /// Variational consistency checks.
    Selfcheck,
}

/// Output directory: `--out`, then `OUTPUT_DIR`, then `output.dir`, then
/// `./out`.
pub fn output_dir(cli_out: Option<&PathBuf>, env: Option<String>, config: &RunConfig) -> PathBuf {
    cli_out
        .cloned()
        .or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// What a finished command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    match (&cli.config, cli.command) {
        (Some(p), _) => RunConfig::from_path(p),
        (None, Command::Selfcheck) => Ok(RunConfig::unit()),
        (None, _) => Err(CliError::Config("--config: required for this command".into())),
    }
}

/// Runs a parsed command line. Reports are written even when the command
/// fails on a convergence or bracket check.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let config = load_config(cli)?;
    let out = output_dir(cli.out.as_ref(), std::env::var("OUTPUT_DIR").ok(), &config);
    let threads = cli.threads.unwrap_or(config.solver.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    let ctx = Context {
        cache: Cache::new(&out, !cli.no_cache),
        config,
        out,
    };
    pool.install(|| dispatch(&ctx, cli.command))
}

fn dispatch(ctx: &Context, command: Command) -> Result<Outcome, CliError> {
    let mut files = Vec::new();
    match command {
        Command::Count => {
            let (report, result) = split(commands::cmd_count(ctx));
            if let Some(r) = &report {
                if ctx.config.wants(Format::Json) {
                    files.push(write_file(&ctx.out, "count.json", &to_json(r))?);
                }
            }
            result.map(|summary| Outcome { summary, files })
        }
        Command::Sweep => {
            let (records, summary) = commands::cmd_sweep(ctx)?;
            if ctx.config.wants(Format::Csv) {
                files.push(write_file(&ctx.out, "sweep.csv", &sweep_csv(&records))?);
            }
            if ctx.config.wants(Format::Json) {
                files.push(write_file(&ctx.out, "sweep.json", &to_json(&records))?);
            }
            Ok(Outcome { summary, files })
        }
        Command::Oracle => {
            let (report, result) = split(commands::cmd_oracle(ctx));
            if let Some(r) = &report {
                files.push(write_file(&ctx.out, "oracle.json", &to_json(r))?);
            }
            result.map(|summary| Outcome { summary, files })
        }
        Command::Selfcheck => {
            let (items, result) = split(commands::cmd_selfcheck(ctx));
            if let Some(i) = &items {
                files.push(write_file(&ctx.out, "selfcheck.json", &to_json(i))?);
            }
            result.map(|summary| Outcome { summary, files })
        }
    }
}

type Partial<T> = Result<(T, String), (Option<T>, CliError)>;

fn split<T>(r: Partial<T>) -> (Option<T>, Result<String, CliError>) {
    match r {
        Ok((v, s)) => (Some(v), Ok(s)),
        Err((v, e)) => (v, Err(e)),
    }
}
