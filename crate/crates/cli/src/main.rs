use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use flatlab_cli::{execute, init_threads, CommandKind};

/// Flatness experiments: profiles, comparisons, certificates, flows,
/// descent runs and matrix-factorization checks.
#[derive(Debug, Parser)]
#[command(name = "flatlab", version)]
struct Args {
    #[arg(value_enum)]
    command: CommandKind,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omits the timestamp comment from SVG output.
    #[arg(long)]
    no_timestamp: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads(std::env::var("FLATLAB_THREADS").ok().as_deref()) {
        eprintln!("flatlab: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    let timestamp = (!args.no_timestamp).then(|| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        format!("unix time {secs}")
    });
    match execute(args.command, &args.config, args.seed, args.out, timestamp) {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("flatlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
