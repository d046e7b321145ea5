use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lambda_cli::{execute, load_config, resolve_jobs, CliError, Command, JOBS_ENV};

/// Driven qubit-resonator photon detector: dressed-state rates, reflection
/// maps, capture and reset stage simulations.
#[derive(Parser, Debug)]
#[command(name = "lambda-detector", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Flat TOML document with unit-suffixed keys.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also render SVG plots next to the tables.
    #[arg(long)]
    plots: bool,
    /// Worker threads for sweeps.
    #[arg(long)]
    jobs: Option<usize>,
}

fn run(args: &Args) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    let env = std::env::var(JOBS_ENV).ok();
    let jobs = resolve_jobs(args.jobs, env.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    let (result, written) = pool.install(|| execute(args.command, &config, &args.out, args.plots))?;
    for line in &result.summary {
        println!("{line}");
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
