use std::path::PathBuf;
use std::process::ExitCode;

use brownian_ray::sampler::Execution;
use brownian_ray::verify::Suite;
use brownian_ray_cli::{cmd_eval, cmd_simulate, cmd_verify, CliError, RunConfig, SimulateOptions, VerifyRequest, SEED_ENV};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bray", version, about = "Brownian rays: closed forms, simulation and verification")]
struct Cli {
    /// Worker threads for path generation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Generate paths on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a closed-form law over a sweep and write CSV.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate paths and write a per-time summary (or every path) as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        full_paths: bool,
    },
    /// Run Monte Carlo and closed-form cross-checks.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

fn execution(cli: &Cli) -> Result<Execution, CliError> {
    if cli.sequential {
        return Ok(Execution::Sequential);
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(Execution::default())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let execution = execution(&cli)?;
    match cli.command {
        Command::Eval { config, out } => {
            let rows = cmd_eval(&RunConfig::load(&config)?, &out)?;
            eprintln!("wrote {rows} rows to {}", out.display());
        }
        Command::Simulate { config, out, full_paths } => {
            let opts = SimulateOptions { full_paths, execution };
            let r = cmd_simulate(&RunConfig::load(&config)?, &out, opts)?;
            eprintln!("simulated {} paths on {} points, wrote {} rows to {}", r.n_paths, r.n_points, r.rows, out.display());
        }
        Command::Verify { suite, paths, seed } => {
            let (seed, seed_source) = VerifyRequest::resolve_seed(seed, std::env::var(SEED_ENV).ok())?;
            let req = VerifyRequest {
                suite,
                n_paths: paths,
                seed,
                seed_source,
                execution,
            };
            cmd_verify(&req, &mut std::io::stdout().lock())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
