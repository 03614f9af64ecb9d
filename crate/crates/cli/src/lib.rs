//! Batch driver: each subcommand reads one JSON configuration, writes CSV and
//! JSON results into an output directory and exits with 0 (all checks pass),
//! 1 (a check or solve failed) or 2 (invalid input).

pub mod commands;
pub mod config;
pub mod output;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use grushin_core::{Error, Result};

pub use config::{ExperimentConfig, LoadedConfig};

#[derive(Debug, Parser)]
#[command(name = "grushin-lab", version, about = "Numerical checks for the Grushin operator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pointwise gauge identities at random points.
    Identities(RunArgs),
    /// Quadrature consistency checks.
    QuadSelftest(RunArgs),
    /// Hardy and Rellich inequalities over fields and radii.
    Hardy(RunArgs),
    /// Frequency profile and its monotonicity, doubling and decay checks.
    Frequency(RunArgs),
    /// Finite-difference solve of the fourth-order problem.
    Solve(RunArgs),
    /// Merge the results in a directory into `summary.json`.
    Report(ReportArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    /// Directory holding the command outputs.
    #[arg(long)]
    pub dir: PathBuf,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Identities(_) => "identities",
            Command::QuadSelftest(_) => "quad-selftest",
            Command::Hardy(_) => "hardy",
            Command::Frequency(_) => "frequency",
            Command::Solve(_) => "solve",
            Command::Report(_) => "report",
        }
    }
}

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SolveFailure { .. } | Error::DegenerateH { .. } => 1,
        _ => 2,
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("grushin-lab {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}

/// Runs the command inside a dedicated thread pool; `Ok(pass)`.
pub fn execute(cli: &Cli) -> Result<bool> {
    let threads = match cli.threads {
        Some(0) => return Err(Error::Input("--threads must be positive".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command))
}

fn dispatch(cmd: &Command) -> Result<bool> {
    let args = match cmd {
        Command::Report(r) => return report::report(&r.dir),
        Command::Identities(a) | Command::QuadSelftest(a) | Command::Hardy(a) | Command::Frequency(a) | Command::Solve(a) => a,
    };
    let loaded = LoadedConfig::from_path(&args.config)?;
    let dir = out_dir(args.out.as_deref(), &loaded.config);
    let mut out = output::Output::new(&dir, &loaded.raw)?;
    let cfg = &loaded.config;
    let (pass, summary) = match cmd {
        Command::Identities(_) => commands::identities(cfg, &mut out)?,
        Command::QuadSelftest(_) => commands::quad_selftest(cfg, &mut out)?,
        Command::Hardy(_) => commands::hardy(cfg, &mut out)?,
        Command::Frequency(_) => commands::frequency(cfg, &mut out)?,
        Command::Solve(_) => commands::solve(cfg, &mut out)?,
        Command::Report(_) => unreachable!(),
    };
    out.finish(cmd.name(), pass, summary)?;
    Ok(pass)
}

fn out_dir(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf).or_else(|| cfg.output_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
}
