use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ris_secrecy::baselines::Scheme;
use ris_secrecy::config::ExperimentConfig;
use ris_secrecy::sweep::{run_sweep, solve_once, write_sweep_csv, write_trace_csv, SweepKind};
use ris_secrecy::validate::run_validation;

/// Environment variable holding the worker-thread count.
const WORKERS_ENV: &str = "RIS_WORKERS";

#[derive(Parser)]
#[command(name = "ris-secrecy", version, about = "Secure RIS beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one parameter and write averaged rates as CSV.
    Sweep {
        #[arg(long, value_parser = parse_kind)]
        kind: SweepKind,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to the config's `output` field.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the base scenario once and dump the convergence trace.
    Solve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_scheme, default_value = "pdca")]
        scheme: Scheme,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the built-in oracle checks.
    Validate {
        /// Smaller sample counts and grids.
        #[arg(long)]
        fast: bool,
    },
}

fn parse_kind(s: &str) -> Result<SweepKind, String> {
    s.parse().map_err(|e: ris_secrecy::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: ris_secrecy::Error| e.to_string())
}

fn load(path: Option<&PathBuf>) -> ris_secrecy::Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn run(cli: Cli) -> Result<ExitCode, ris_secrecy::Error> {
    match cli.command {
        Command::Sweep { kind, config, out, seed } => {
            let mut cfg = load(config.as_ref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let Some(out) = out.or_else(|| cfg.output.clone()) else {
                eprintln!("error: no output path (pass --out or set \"output\" in the config)");
                return Ok(ExitCode::from(1));
            };
            let result = run_sweep(&cfg, kind)?;
            write_sweep_csv(&result.rows, &out)?;
            eprintln!("{} rows written to {} in {:.2?}", result.rows.len(), out.display(), result.wall_time);
        }
        Command::Solve { config, scheme, trace } => {
            let cfg = load(config.as_ref())?;
            let report = solve_once(&cfg, scheme)?;
            let sol = &report.outcome.solution;
            println!(
                "scheme={} lesr={} esr={} stderr={} iterations={}",
                scheme.id(),
                sol.lesr,
                report.esr.mean,
                report.esr.stderr,
                report.outcome.iterations
            );
            if let Some(path) = trace {
                write_trace_csv(&report.outcome, &path)?;
            }
        }
        Command::Validate { fast } => {
            let report = run_validation(fast)?;
            println!("{report}");
            if !report.passed() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        match raw.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: {WORKERS_ENV} must be a positive integer, got '{raw}'");
                return ExitCode::from(1);
            }
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
