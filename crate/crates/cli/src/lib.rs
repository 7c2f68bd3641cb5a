//! Config-driven experiment runner for the flatness toolkit.

pub mod config;
pub mod error;
pub mod plot;
pub mod run;
pub mod suite;

use std::path::{Path, PathBuf};

pub use config::{CommandKind, ExperimentConfig};
pub use error::CliError;
pub use run::{run, Artifacts, RunContext};

/// Caps the global worker pool from `FLATLAB_THREADS`.
pub fn init_threads(var: Option<&str>) -> Result<(), CliError> {
    let Some(v) = var else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::validation("FLATLAB_THREADS", format!("expected a positive integer, got `{v}`")))?;
    // A pool that is already initialized keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Loads the config, runs the command and writes the artifacts into the
/// output directory (`--out`, then `out_dir`, then `./out`).
pub fn execute(
    command: CommandKind,
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    timestamp: Option<String>,
) -> Result<PathBuf, CliError> {
    let (cfg, base_dir) = ExperimentConfig::load(config)?;
    let out_dir = out
        .or_else(|| cfg.out_dir.as_ref().map(|d| base_dir.join(d)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = RunContext {
        command,
        base_dir,
        seed: seed.unwrap_or(cfg.seed),
        timestamp,
    };
    let mut artifacts = Artifacts::default();
    let result = run(&cfg, &ctx, &mut artifacts);
    if !artifacts.files.is_empty() {
        artifacts.write_to(&out_dir)?;
    }
    result.map(|_| out_dir)
}
