use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use chrono::NaiveDate;
use megt_core::comm::{communicability, EtaBounds};
use megt_core::crowdsense::{
    decision_log, parse_reports, synth_corpus, write_decisions, write_ledger, write_rejections, write_reports,
    Decision, IncentiveConfig, Ledger, Mechanism, SynthSpec,
};
use megt_core::equilibrium::{nash_pair_density, NashProjection, NashReport};
use megt_core::evolve::{
    dynamics_seed, mean_and_std, run_replicas, simulate, sweep_ts, write_state, write_trajectory, Environment,
    NetworkSource, PayoffWeighting, SimulationConfig, TsGrid,
};
use megt_core::games::PayoffMatrix;
use megt_core::metrics::BehaviourStats;
use megt_core::netgen::{build_multiplex, read_network, write_network, LayerTopology, MultiplexNetwork, MultiplexSpec};
use megt_core::Scalar;
use serde_json::json;

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_file, RunManifest};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Generate,
    Evolve,
    Sweep,
    Nash,
    Score,
    Synth,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Generate,
        Command::Evolve,
        Command::Sweep,
        Command::Nash,
        Command::Score,
        Command::Synth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Evolve => "evolve",
            Command::Sweep => "sweep",
            Command::Nash => "nash",
            Command::Score => "score",
            Command::Synth => "synth",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::config(format!("unknown command `{s}`")))
    }
}

/// What a command produced, before checksums are taken.
#[derive(Default)]
struct Produced {
    files: Vec<String>,
    inputs: BTreeMap<String, String>,
    converged: Option<bool>,
    summary: BTreeMap<String, serde_json::Value>,
}

impl Produced {
    fn note(&mut self, key: &str, value: serde_json::Value) {
        self.summary.insert(key.to_string(), value);
    }
}

/// Runs `command` with a resolved config, writing outputs and
/// `manifest.json` into `out_dir`.
pub fn execute(command: Command, config: &Config, out_dir: &Path) -> CliResult<RunManifest> {
    let seed: u64 = config.get("seed")?;
    std::fs::create_dir_all(out_dir)?;
    let out = Out(out_dir);
    let produced = match command {
        Command::Synth => synth(config, seed, &out)?,
        Command::Score => score(config, &out)?,
        _ => match config.raw("precision") {
            "f64" => numeric::<f64>(command, config, seed, &out)?,
            "f32" => numeric::<f32>(command, config, seed, &out)?,
            other => {
                return Err(CliError::config(format!(
                    "invalid value for `precision`: `{other}` (expected f64 or f32)"
                )))
            }
        },
    };

    let outputs = produced
        .files
        .iter()
        .map(|f| Ok((f.clone(), sha256_file(&out_dir.join(f))?)))
        .collect::<CliResult<BTreeMap<_, _>>>()?;
    let manifest = RunManifest {
        command: command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config: config.map().clone(),
        inputs: produced.inputs,
        outputs,
        converged: produced.converged,
        summary: produced.summary,
    };
    manifest.write(out_dir)?;
    Ok(manifest)
}

struct Out<'a>(&'a Path);

impl Out<'_> {
    fn create(&self, name: &str) -> CliResult<BufWriter<File>> {
        let path = self.0.join(name);
        let f = File::create(&path).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(BufWriter::new(f))
    }
}

fn numeric<T: Scalar>(command: Command, config: &Config, seed: u64, out: &Out<'_>) -> CliResult<Produced> {
    match command {
        Command::Generate => generate::<T>(config, seed, out),
        Command::Evolve => evolve::<T>(config, seed, out),
        Command::Sweep => sweep::<T>(config, seed, out),
        Command::Nash => nash::<T>(config, seed, out),
        Command::Score | Command::Synth => unreachable!("handled without a scalar type"),
    }
}

fn scalar<T: Scalar>(config: &Config, key: &str) -> CliResult<T> {
    let v: f64 = config.get(key)?;
    if !v.is_finite() {
        return Err(CliError::config(format!("invalid value for `{key}`: must be finite")));
    }
    Ok(T::lit(v))
}

pub fn topologies(config: &Config) -> CliResult<Vec<LayerTopology>> {
    let layers: usize = config.get("layers")?;
    let one = |name: &str| -> CliResult<LayerTopology> {
        Ok(match name.trim() {
            "er" => LayerTopology::ErdosRenyi {
                edge_probability: config.get("er_p")?,
            },
            "sw" => LayerTopology::WattsStrogatz {
                ring_degree: config.get("ws_k")?,
                rewire_probability: config.get("ws_beta")?,
            },
            "sf" => LayerTopology::ScaleFree {
                attachment_count: config.get("sf_m")?,
                seed_clique_size: config.get("sf_m0")?,
            },
            other => {
                return Err(CliError::config(format!(
                    "invalid value for `topology`: `{other}` (expected sf, er or sw)"
                )))
            }
        })
    };
    let names: Vec<&str> = config.raw("topology").split(',').collect();
    match names.len() {
        1 => Ok(vec![one(names[0])?; layers]),
        n if n == layers => names.into_iter().map(one).collect(),
        n => Err(CliError::config(format!(
            "invalid value for `topology`: {n} entries for {layers} layers"
        ))),
    }
}

pub fn multiplex_spec<T: Scalar>(config: &Config, seed: u64) -> CliResult<MultiplexSpec<T>> {
    let spec = MultiplexSpec {
        node_count: config.get("nodes")?,
        topologies: topologies(config)?,
        homophily_sigma: scalar(config, "sigma")?,
        interlayer_strength: scalar(config, "omega")?,
        rng_seed: seed,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn game<T: Scalar>(config: &Config) -> CliResult<PayoffMatrix<T>> {
    Ok(PayoffMatrix::new(
        scalar(config, "reward")?,
        scalar(config, "sucker")?,
        scalar(config, "temptation")?,
        scalar(config, "punishment")?,
    ))
}

fn load_network<T: Scalar>(path: &Path) -> CliResult<MultiplexNetwork<T>> {
    let f = File::open(path).map_err(|e| CliError::data(format!("cannot open network {}: {e}", path.display())))?;
    read_network(BufReader::new(f)).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Simulation settings, plus the checksum of the network file if one is used.
pub fn sim_config<T: Scalar>(config: &Config, seed: u64) -> CliResult<(SimulationConfig<T>, Option<(String, String)>)> {
    let mut input = None;
    let network = match config.get_path("network_file") {
        Some(path) => {
            let net = load_network::<T>(&path)?;
            input = Some((path.display().to_string(), sha256_file(&path)?));
            let omega = scalar(config, "omega")?;
            if !(omega >= T::zero()) {
                return Err(CliError::config("invalid value for `omega`: must be non-negative"));
            }
            NetworkSource::Prebuilt {
                network: Arc::new(net),
                omega,
            }
        }
        None => NetworkSource::Generate(multiplex_spec(config, seed)?),
    };
    let mut cfg = SimulationConfig::new(network, game(config)?);
    cfg.selection_intensity = scalar(config, "selection_intensity")?;
    cfg.eta_bounds = EtaBounds::new(scalar(config, "eta_min")?, scalar(config, "eta_max")?)?;
    cfg.initial_coop_fraction = config.get("initial_coop")?;
    cfg.max_rounds = config.get("max_rounds")?;
    cfg.steady_window = config.get("steady_window")?;
    cfg.steady_tolerance = scalar(config, "steady_tolerance")?;
    cfg.replicas = config.get("replicas")?;
    cfg.rng_seed = seed;
    cfg.payoff_weights = match config.raw("payoff_weights") {
        "weighted" => PayoffWeighting::Weighted,
        "binary" => PayoffWeighting::Binary,
        other => {
            return Err(CliError::config(format!(
                "invalid value for `payoff_weights`: `{other}` (expected weighted or binary)"
            )))
        }
    };
    cfg.validate()?;
    Ok((cfg, input))
}

pub fn ts_grid(config: &Config) -> CliResult<TsGrid> {
    let grid = TsGrid {
        t_min: config.get("t_min")?,
        t_max: config.get("t_max")?,
        t_steps: config.get("t_steps")?,
        s_min: config.get("s_min")?,
        s_max: config.get("s_max")?,
        s_steps: config.get("s_steps")?,
    };
    grid.validate()?;
    Ok(grid)
}

pub fn nash_projection(config: &Config) -> CliResult<NashProjection> {
    match config.raw("nash_projection") {
        "majority_tie_c" => Ok(NashProjection::MajorityTieC),
        "majority_tie_d" => Ok(NashProjection::MajorityTieD),
        "per_layer" => Ok(NashProjection::PerLayer),
        other => Err(CliError::config(format!(
            "invalid value for `nash_projection`: `{other}` (expected majority_tie_c, majority_tie_d or per_layer)"
        ))),
    }
}

pub fn incentive_config(config: &Config) -> CliResult<IncentiveConfig> {
    let cfg = IncentiveConfig {
        budget: config.get("budget")?,
        preference_factor: config.get("preference_factor")?,
        publish_threshold: config.get("publish_threshold")?,
        positive_rs_threshold: config.get("positive_rs_threshold")?,
        mechanism: config.get("mechanism")?,
        epsilon: config.get("epsilon")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn ledger_columns(config: &Config) -> CliResult<Vec<Mechanism>> {
    match config.raw("ledger_columns") {
        "all" => Ok(Mechanism::ALL.to_vec()),
        one => one
            .parse::<Mechanism>()
            .map(|m| vec![m])
            .map_err(|e| CliError::config(format!("invalid value for `ledger_columns`: {e}"))),
    }
}

pub fn synth_spec(config: &Config, seed: u64) -> CliResult<SynthSpec> {
    let start = config.raw("synth_start");
    let spec = SynthSpec {
        users: config.get("synth_users")?,
        days: config.get("synth_days")?,
        honest_fraction: config.get("synth_honest")?,
        selfish_fraction: config.get("synth_selfish")?,
        streets: config.get("synth_streets")?,
        start_date: NaiveDate::parse_from_str(start, "%Y-%m-%d")
            .map_err(|_| CliError::config(format!("invalid value for `synth_start`: `{start}` (expected YYYY-MM-DD)")))?,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

fn generate<T: Scalar>(config: &Config, seed: u64, out: &Out<'_>) -> CliResult<Produced> {
    let spec = multiplex_spec::<T>(config, seed)?;
    let dump_comm = config.get_bool("dump_comm")?;
    let net = build_multiplex(&spec)?;
    let mut p = Produced::default();
    write_network(&net, out.create("net.mplex")?)?;
    p.files.push("net.mplex".into());
    if dump_comm {
        communicability(&net, spec.interlayer_strength)?.write_csv(out.create("comm.csv")?)?;
        p.files.push("comm.csv".into());
    }
    let edges: Vec<usize> = net.layers.iter().map(|l| l.adjacency.edge_count()).collect();
    p.note("layer_edges", json!(edges));
    p.note("aggregated_edges", json!(net.aggregated.edge_count()));
    Ok(p)
}

/// Per-round mean over replicas; a replica that stopped early holds its
/// last value.
fn aggregate_rho<T: Scalar>(series: &[&[T]]) -> Vec<T> {
    let len = series.iter().map(|s| s.len()).max().unwrap_or(0);
    (0..len)
        .map(|n| {
            let sum: T = series.iter().map(|s| s[n.min(s.len() - 1)]).sum();
            sum / T::from_count(series.len())
        })
        .collect()
}

fn evolve<T: Scalar>(config: &Config, seed: u64, out: &Out<'_>) -> CliResult<Produced> {
    let (cfg, input) = sim_config::<T>(config, seed)?;
    let runs = run_replicas(&cfg)?;
    let mut p = Produced::default();
    p.inputs.extend(input);

    let series: Vec<&[T]> = runs.iter().map(|r| r.trajectory.rho.as_slice()).collect();
    if runs.len() > 1 {
        for (r, s) in series.iter().enumerate() {
            let name = format!("rho_r{r:03}.csv");
            write_trajectory(s, out.create(&name)?)?;
            p.files.push(name);
        }
    }
    write_trajectory(&aggregate_rho(&series), out.create("rho.csv")?)?;
    p.files.push("rho.csv".into());

    {
        use std::io::Write;
        let mut w = out.create("steady.csv")?;
        writeln!(w, "replica,steady_rho,converged,rounds")?;
        for (r, run) in runs.iter().enumerate() {
            let t = &run.trajectory;
            writeln!(w, "{r},{},{},{}", t.steady_rho, t.converged, t.rho.len() - 1)?;
        }
        w.flush()?;
    }
    p.files.push("steady.csv".into());

    let first = &runs[0];
    write_state(&first.state, out.create("state.txt")?)?;
    p.files.push("state.txt".into());
    let stats = BehaviourStats::from_run(&first.state, &first.network)?;
    stats.write_csv(out.create("metrics.csv")?)?;
    p.files.push("metrics.csv".into());
    {
        use std::io::Write;
        let mut w = out.create("qoi.txt")?;
        writeln!(w, "{}", stats.summary_line())?;
        w.flush()?;
    }
    p.files.push("qoi.txt".into());

    let steady: Vec<T> = runs.iter().map(|r| r.trajectory.steady_rho).collect();
    let (mean, std) = mean_and_std(&steady);
    p.converged = Some(runs.iter().all(|r| r.trajectory.converged));
    p.note("steady_rho_mean", json!(mean.to_f64()));
    p.note("steady_rho_std", json!(std.to_f64()));
    p.note("replicas", json!(runs.len()));
    p.note("qoi", json!(stats.qoi.to_f64()));
    Ok(p)
}

fn sweep<T: Scalar>(config: &Config, seed: u64, out: &Out<'_>) -> CliResult<Produced> {
    let (cfg, input) = sim_config::<T>(config, seed)?;
    let grid = ts_grid(config)?;
    let density = sweep_ts(&grid, &cfg)?;
    let mut p = Produced::default();
    p.inputs.extend(input);
    density.write_csv(out.create("grid.csv")?)?;
    p.files.push("grid.csv".into());
    p.note("cells", json!(density.cells.len()));
    p.note("rho_mean", json!(density.mean().to_f64()));
    Ok(p)
}

fn nash<T: Scalar>(config: &Config, seed: u64, out: &Out<'_>) -> CliResult<Produced> {
    let (cfg, input) = sim_config::<T>(config, seed)?;
    let projection = nash_projection(config)?;
    let env = Environment::for_replica(&cfg, 0)?;
    let net = env.network.clone();
    let mut report = NashReport::default();
    let mut failure = None;
    let run = simulate(&cfg, &env, dynamics_seed(cfg.rng_seed, 0, 0), |state| {
        if failure.is_none() {
            match nash_pair_density(&state.strategies, &net, &cfg.game, projection) {
                Ok(s) => report.per_round.push(s),
                Err(e) => failure = Some(e),
            }
        }
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    let mut p = Produced::default();
    p.inputs.extend(input);
    report.write_csv(out.create("alpha.csv")?)?;
    p.files.push("alpha.csv".into());
    write_trajectory(&run.trajectory.rho, out.create("rho.csv")?)?;
    p.files.push("rho.csv".into());
    p.converged = Some(run.trajectory.converged);
    if let Some(last) = report.last() {
        p.note("final_alpha", json!(last.alpha.to_f64()));
        p.note("edges", json!(last.n_edges));
    }
    p.note("steady_rho", json!(run.trajectory.steady_rho.to_f64()));
    Ok(p)
}

fn score(config: &Config, out: &Out<'_>) -> CliResult<Produced> {
    let icfg = incentive_config(config)?;
    let columns = ledger_columns(config)?;
    let path: PathBuf = config
        .get_path("reports")
        .ok_or_else(|| CliError::config("`reports` must name a report table (or pass --reports)"))?;
    let file = File::open(&path).map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
    let ingested = parse_reports(BufReader::new(file)).map_err(|e| match e {
        megt_core::Error::Schema(m) => CliError::data(format!("{}: {m}", path.display())),
        other => CliError::from(other),
    })?;
    if let Some(bad) = ingested.first_malformed() {
        let id = if bad.object_id.is_empty() {
            String::new()
        } else {
            format!(" ({})", bad.object_id)
        };
        return Err(CliError::data(format!(
            "{} line {}{id}: malformed row: {}",
            path.display(),
            bad.line,
            bad.detail
        )));
    }

    let ledger = Ledger::build(&ingested.reports, &icfg)?;
    let decisions = decision_log(&ingested.reports, &ledger, &icfg);

    let mut p = Produced::default();
    p.inputs.insert(path.display().to_string(), sha256_file(&path)?);
    write_ledger(&ledger, icfg.mechanism, &columns, out.create("ledger.csv")?)?;
    write_decisions(&decisions, out.create("decisions.csv")?)?;
    write_rejections(&ingested.rejections, out.create("rejections.csv")?)?;
    p.files.extend(["ledger.csv", "decisions.csv", "rejections.csv"].map(String::from));

    let published = decisions.iter().filter(|d| matches!(d.decision, Decision::Publish(_))).count();
    p.note("users", json!(ledger.users.len()));
    p.note("kept_reports", json!(ingested.reports.len()));
    p.note("rejected_reports", json!(ingested.rejections.len()));
    p.note("decision_cells", json!(decisions.len()));
    p.note("published", json!(published));
    for m in columns {
        let positive = ledger
            .users
            .iter()
            .filter(|u| u.is_positive(m, icfg.positive_rs_threshold))
            .count();
        p.note(&format!("incentive_levels_{m}"), json!(ledger.incentive_levels(m, crate::LEVEL_TOLERANCE)));
        p.note(&format!("positive_users_{m}"), json!(positive));
    }
    Ok(p)
}

fn synth(config: &Config, seed: u64, out: &Out<'_>) -> CliResult<Produced> {
    let spec = synth_spec(config, seed)?;
    let rows = synth_corpus(&spec)?;
    let mut p = Produced::default();
    write_reports(&rows, out.create("reports.csv")?)?;
    p.files.push("reports.csv".into());
    p.note("rows", json!(rows.len()));
    let users: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.uuid.as_str()).collect();
    p.note("users", json!(users.len()));
    p.note(
        "zero_rated",
        json!(rows.iter().filter(|r| r.report_rating == 0.0).count()),
    );
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_layer_topology_list() {
        let mut cfg = Config::default();
        cfg.set("layers", "3").unwrap();
        cfg.set("topology", "sf,er,sw").unwrap();
        let t = topologies(&cfg).unwrap();
        assert_eq!(t.iter().map(|x| x.short_name()).collect::<Vec<_>>(), ["sf", "er", "ws"]);
        cfg.set("topology", "sf,er").unwrap();
        assert_eq!(topologies(&cfg).unwrap_err().exit_code(), 2);
        cfg.set("topology", "lattice").unwrap();
        assert!(topologies(&cfg).unwrap_err().to_string().contains("`topology`"));
    }

    #[test]
    fn core_parameter_errors_name_config_keys() {
        let mut cfg = Config::default();
        cfg.set("topology", "er").unwrap();
        cfg.set("er_p", "1.5").unwrap();
        let err = multiplex_spec::<f64>(&cfg, 0).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("`er_p`"), "{err}");
    }

    #[test]
    fn aggregate_holds_finished_replicas() {
        let a = [0.5, 1.0];
        let b = [0.5, 0.25, 0.0, 0.0];
        let got = aggregate_rho::<f64>(&[&a, &b]);
        assert_eq!(got, [0.5, 0.625, 0.5, 0.5]);
    }

    #[test]
    fn ledger_column_choice() {
        let mut cfg = Config::default();
        assert_eq!(ledger_columns(&cfg).unwrap().len(), 3);
        cfg.set("ledger_columns", "b").unwrap();
        assert_eq!(ledger_columns(&cfg).unwrap(), [Mechanism::B]);
        cfg.set("ledger_columns", "Z").unwrap();
        assert_eq!(ledger_columns(&cfg).unwrap_err().exit_code(), 2);
    }
}
