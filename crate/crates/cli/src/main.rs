use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use megt_cli::{config, execute, replay, resolve, CliError, CliResult, Command, RunManifest, Source, SEED_ENV};

/// Evolutionary games on homophily-weighted multiplex networks, and the
/// crowdsensing reputation and incentive pipeline.
#[derive(Parser)]
#[command(name = "megt", version)]
struct Cli {
    /// Print every config key with its default and documentation, then exit.
    #[arg(long)]
    print_defaults: bool,

    /// Worker threads for replicas and grid cells (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Args)]
struct Common {
    /// Flat key = value config file.
    #[arg(long, conflicts_with = "manifest")]
    config: Option<PathBuf>,

    /// Re-run the command recorded in a manifest and verify its outputs.
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// Override one config key, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Sub {
    /// Build a multiplex network and write it as net.mplex.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Also write the communicability matrix to comm.csv.
        #[arg(long)]
        dump_comm: bool,
    },
    /// Run the dynamics: rho.csv, steady.csv, state.txt, metrics.csv, qoi.txt.
    Evolve {
        #[command(flatten)]
        common: Common,
    },
    /// Steady cooperation over a T-S grid: grid.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Nash-pair density per round: alpha.csv.
    Nash {
        #[command(flatten)]
        common: Common,
    },
    /// Score a report table: ledger.csv, decisions.csv, rejections.csv.
    Score {
        #[command(flatten)]
        common: Common,
        /// Report table (overrides the `reports` key).
        #[arg(long)]
        reports: Option<PathBuf>,
        /// Score with this mechanism and fill only its incentive column.
        #[arg(long)]
        mechanism: Option<String>,
    },
    /// Write a synthetic report table: reports.csv.
    Synth {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    if cli.print_defaults {
        print!("{}", config::print_defaults());
        return Ok(());
    }
    let Some(sub) = cli.command else {
        return Err(CliError::config("no command given; see --help"));
    };
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }

    let (command, common, mut extra) = match sub {
        Sub::Generate { common, dump_comm } => {
            let extra = if dump_comm { vec!["dump_comm=true".to_string()] } else { vec![] };
            (Command::Generate, common, extra)
        }
        Sub::Evolve { common } => (Command::Evolve, common, vec![]),
        Sub::Sweep { common } => (Command::Sweep, common, vec![]),
        Sub::Nash { common } => (Command::Nash, common, vec![]),
        Sub::Score {
            common,
            reports,
            mechanism,
        } => {
            let mut extra = Vec::new();
            if let Some(r) = reports {
                extra.push(format!("reports={}", r.display()));
            }
            if let Some(m) = mechanism {
                extra.push(format!("mechanism={m}"));
                extra.push(format!("ledger_columns={m}"));
            }
            (Command::Score, common, extra)
        }
        Sub::Synth { common } => (Command::Synth, common, vec![]),
    };

    if let Some(path) = &common.manifest {
        let manifest = RunManifest::read(path)?;
        if manifest.command != command.name() {
            return Err(CliError::config(format!(
                "manifest was written by `{}`, not `{}`",
                manifest.command,
                command.name()
            )));
        }
        if !common.set.is_empty() || !extra.is_empty() {
            return Err(CliError::config("a replay takes no overrides"));
        }
        let fresh = replay(&manifest, &common.out)?;
        eprintln!("replay: {} outputs match", fresh.outputs.len());
        return Ok(());
    }

    let source = match &common.config {
        Some(p) => Source::File(p),
        None => Source::Defaults,
    };
    let mut overrides = common.set;
    overrides.append(&mut extra);
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = resolve(source, &overrides, env_seed.as_deref())?;
    let manifest = execute(command, &cfg, &common.out)?;
    if manifest.converged == Some(false) {
        eprintln!("warning: max_rounds reached before the steady-state test passed");
    }
    for name in manifest.outputs.keys() {
        println!("{}", common.out.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("megt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
