//! Library side of the `megt` command-line tool: configuration, manifests
//! and the subcommands themselves. `main.rs` only parses arguments.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::Path;

pub use commands::{execute, Command};
pub use config::Config;
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;

/// Relative gap below which two payouts count as the same incentive level.
pub const LEVEL_TOLERANCE: f64 = 1e-9;

pub const SEED_ENV: &str = "MEGT_SEED";

/// Where the settings of a run come from.
pub enum Source<'a> {
    Defaults,
    File(&'a Path),
    /// Replay: the config recorded in a manifest, taken as is.
    Manifest(&'a RunManifest),
}

/// Builds the effective config. Overrides apply after the source, then the
/// seed environment variable (`env_seed`), except on replay where the
/// manifest is authoritative.
pub fn resolve(source: Source<'_>, overrides: &[String], env_seed: Option<&str>) -> CliResult<Config> {
    let replay = matches!(source, Source::Manifest(_));
    let mut cfg = match source {
        Source::Defaults => Config::default(),
        Source::File(path) => Config::load(path)?,
        Source::Manifest(m) => Config::from_map(&m.config)?,
    };
    for o in overrides {
        cfg.apply_override(o)?;
    }
    if let (false, Some(seed)) = (replay, env_seed) {
        let seed = seed.trim();
        seed.parse::<u64>()
            .map_err(|_| CliError::config(format!("{SEED_ENV} must be an unsigned integer, got `{seed}`")))?;
        cfg.set("seed", seed)?;
    }
    Ok(cfg)
}

/// Re-runs a manifest into `out_dir` and checks every output checksum.
pub fn replay(manifest: &RunManifest, out_dir: &Path) -> CliResult<RunManifest> {
    let command: Command = manifest.command.parse()?;
    let cfg = resolve(Source::Manifest(manifest), &[], None)?;
    let fresh = execute(command, &cfg, out_dir)?;
    let bad = manifest.output_mismatches(&fresh);
    if !bad.is_empty() {
        return Err(CliError::runtime(format!("replay differs in: {}", bad.join(", "))));
    }
    Ok(fresh)
}
