mod analyze;
mod cache;
mod embed;
mod eval;
mod fail;
mod preprocess;
mod sample;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fail::Failure;

/// Graph embedding experiments on matrix manifolds.
#[derive(Parser)]
#[command(name = "matman", version)]
struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// All-pairs shortest paths, max-scaled and cached to disk.
    Preprocess(preprocess::Args),
    /// Train one embedding per (manifold, loss, optimizer setting, seed).
    Embed(embed::Args),
    /// Reconstruction metrics for every trained cell.
    Eval(eval::Args),
    /// Curvature diagnostics of a graph or of a trained embedding.
    Analyze(analyze::Args),
    /// Random manifold graphs: threshold sweeps and angle sums.
    Sample(sample::Args),
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("MM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("MM_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot size the thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    match cli.command {
        Command::Preprocess(a) => preprocess::run(a),
        Command::Embed(a) => embed::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Sample(a) => sample::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(fail::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
