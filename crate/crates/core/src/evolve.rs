//! Monte Carlo imitation dynamics on the multiplex.
//!
//! A round accumulates every slot's payoff against its layer neighbours,
//! then performs `N·M` asynchronous elementary steps: a random (node, layer)
//! slot with at least one neighbour picks a random neighbour on that layer
//! and copies its strategy with the homophily- and η-scaled Fermi
//! probability. Payoffs are recomputed from scratch every round; the
//! cooperation counters used for social honesty accumulate across rounds.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::comm::{self, CommunicabilityMatrix, EtaBounds};
use crate::error::{Error, Result};
use crate::games::{PayoffMatrix, Strategy, StrategyTable};
use crate::netgen::{build_multiplex, MultiplexNetwork, MultiplexSpec};
use crate::rng::{self, tag, SimRng};
use crate::scalar::Scalar;

/// Lower bound on `δ_ij` inside the Fermi exponent.
pub const DELTA_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayoffWeighting {
    /// Each interaction scaled by the link weight `w_ij`.
    Weighted,
    /// Each interaction counts once.
    Binary,
}

#[derive(Clone, Debug)]
pub enum NetworkSource<T> {
    /// A fresh network per replica, built from the spec.
    Generate(MultiplexSpec<T>),
    /// One fixed network shared by every replica.
    Prebuilt { network: Arc<MultiplexNetwork<T>>, omega: T },
}

#[derive(Clone, Debug)]
pub struct SimulationConfig<T> {
    pub network: NetworkSource<T>,
    pub game: PayoffMatrix<T>,
    /// Selection intensity `K` of the Fermi rule.
    pub selection_intensity: T,
    pub eta_bounds: EtaBounds<T>,
    pub initial_coop_fraction: f64,
    pub max_rounds: usize,
    pub steady_window: usize,
    pub steady_tolerance: T,
    pub replicas: usize,
    pub rng_seed: u64,
    pub payoff_weights: PayoffWeighting,
}

impl<T: Scalar> SimulationConfig<T> {
    pub const DEFAULT_SELECTION_INTENSITY: f64 = 0.1;
    pub const DEFAULT_MAX_ROUNDS: usize = 5000;
    pub const DEFAULT_STEADY_WINDOW: usize = 200;
    pub const DEFAULT_STEADY_TOLERANCE: f64 = 1e-3;

    pub fn new(network: NetworkSource<T>, game: PayoffMatrix<T>) -> Self {
        SimulationConfig {
            network,
            game,
            selection_intensity: T::lit(Self::DEFAULT_SELECTION_INTENSITY),
            eta_bounds: EtaBounds::default(),
            initial_coop_fraction: 0.5,
            max_rounds: Self::DEFAULT_MAX_ROUNDS,
            steady_window: Self::DEFAULT_STEADY_WINDOW,
            steady_tolerance: T::lit(Self::DEFAULT_STEADY_TOLERANCE),
            replicas: 1,
            rng_seed: 0,
            payoff_weights: PayoffWeighting::Weighted,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.selection_intensity > T::zero()) {
            return Err(Error::param("selection_intensity", "K must be positive"));
        }
        if !(0.0..=1.0).contains(&self.initial_coop_fraction) {
            return Err(Error::param("initial_coop", "initial cooperator fraction must be a probability"));
        }
        if self.steady_window < 1 || self.max_rounds < self.steady_window {
            return Err(Error::param("steady_window", "need max_rounds >= steady_window >= 1"));
        }
        if self.replicas < 1 {
            return Err(Error::param("replicas", "need at least one replica"));
        }
        if !self.game.is_finite() {
            return Err(Error::param("game", "payoffs must be finite"));
        }
        EtaBounds::new(self.eta_bounds.min, self.eta_bounds.max)?;
        if let NetworkSource::Generate(spec) = &self.network {
            spec.validate()?;
        }
        Ok(())
    }
}

/// Spec of the network used by `replica`. Replica 0 uses the spec's own
/// seed, so it matches the network a plain `build_multiplex` produces.
pub fn replica_spec<T: Scalar>(spec: &MultiplexSpec<T>, replica: u64) -> MultiplexSpec<T> {
    if replica == 0 {
        spec.clone()
    } else {
        spec.with_seed(rng::derive_seed(spec.rng_seed, &[tag::NETWORK, replica]))
    }
}

/// Network plus its communicability: everything fixed for a replica.
#[derive(Clone, Debug)]
pub struct Environment<T> {
    pub network: Arc<MultiplexNetwork<T>>,
    pub comm: Arc<CommunicabilityMatrix<T>>,
    /// (node, layer) slots with at least one neighbour on that layer.
    active: Arc<Vec<(usize, usize)>>,
}

impl<T: Scalar> Environment<T> {
    pub fn new(network: Arc<MultiplexNetwork<T>>, omega: T) -> Result<Self> {
        let comm = Arc::new(comm::communicability(&network, omega)?);
        Ok(Self::with_comm(network, comm))
    }

    pub fn with_comm(network: Arc<MultiplexNetwork<T>>, comm: Arc<CommunicabilityMatrix<T>>) -> Self {
        let active = (0..network.layer_count())
            .flat_map(|alpha| (0..network.node_count()).map(move |i| (i, alpha)))
            .filter(|&(i, alpha)| network.layer(alpha).adjacency.degree(i) > 0)
            .collect();
        Environment {
            network,
            comm,
            active: Arc::new(active),
        }
    }

    pub fn for_replica(config: &SimulationConfig<T>, replica: u64) -> Result<Self> {
        match &config.network {
            NetworkSource::Generate(spec) => {
                let net = build_multiplex(&replica_spec(spec, replica))?;
                Self::new(Arc::new(net), spec.interlayer_strength)
            }
            NetworkSource::Prebuilt { network, omega } => Self::new(network.clone(), *omega),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimulationState<T> {
    pub strategies: StrategyTable,
    /// Per-slot payoff of the current round, layer-major like `strategies`.
    pub payoffs: Vec<T>,
    pub round: usize,
    /// Cumulative cooperative interactions per node.
    pub coop_counts: Vec<u64>,
    pub rng: SimRng,
}

impl<T: Scalar> SimulationState<T> {
    #[inline]
    pub fn payoff(&self, node: usize, layer: usize) -> T {
        self.payoffs[layer * self.strategies.nodes() + node]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    /// `rho[n]` is the density after round `n`; `rho[0]` is the initial state.
    pub rho: Vec<T>,
    pub steady_rho: T,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub trajectory: Trajectory<T>,
    pub state: SimulationState<T>,
    pub network: Arc<MultiplexNetwork<T>>,
}

/// Random initial strategies: each slot cooperates independently with
/// probability `initial_coop_fraction`.
pub fn init<T: Scalar>(config: &SimulationConfig<T>, nodes: usize, layers: usize, mut rng: SimRng) -> SimulationState<T> {
    let p = config.initial_coop_fraction;
    let strategies = StrategyTable::from_fn(nodes, layers, |_, _| {
        if rng.random::<f64>() < p {
            Strategy::Cooperate
        } else {
            Strategy::Defect
        }
    });
    SimulationState {
        strategies,
        payoffs: vec![T::zero(); nodes * layers],
        round: 0,
        coop_counts: vec![0; nodes],
        rng,
    }
}

/// Overwrites every slot's payoff with its weighted sum of pairwise payoffs
/// against the neighbours on the same layer.
pub fn accumulate_payoffs<T: Scalar>(
    state: &mut SimulationState<T>,
    net: &MultiplexNetwork<T>,
    game: &PayoffMatrix<T>,
    weighting: PayoffWeighting,
) {
    let n = net.node_count();
    for (alpha, layer) in net.layers.iter().enumerate() {
        for i in 0..n {
            let si = state.strategies.get(i, alpha);
            let mut total = T::zero();
            for &j in layer.adjacency.neighbours(i) {
                let (gain, _) = game.pairwise(si, state.strategies.get(j, alpha));
                total = total
                    + match weighting {
                        PayoffWeighting::Weighted => layer.weights[[i, j]] * gain,
                        PayoffWeighting::Binary => gain,
                    };
            }
            state.payoffs[alpha * n + i] = total;
        }
    }
}

/// Probability that `i` copies `j`:
/// `η / (1 + exp((P_i - P_j) / (max(δ, δ_floor) · K)))`.
#[inline]
pub fn fermi_probability<T: Scalar>(p_i: T, p_j: T, delta: T, k: T, eta: T) -> T {
    let noise = delta.max(T::lit(DELTA_FLOOR)) * k;
    eta / (T::one() + ((p_i - p_j) / noise).exp())
}

/// Fraction of (node, layer) slots playing C.
pub fn density<T: Scalar>(state: &SimulationState<T>) -> T {
    let st = &state.strategies;
    T::from_count(st.cooperators()) / T::from_count(st.nodes() * st.layers())
}

#[derive(Clone, Copy, Debug)]
pub struct Dynamics<T> {
    pub selection_intensity: T,
    pub eta_bounds: EtaBounds<T>,
    pub payoff_weights: PayoffWeighting,
}

impl<T: Scalar> From<&SimulationConfig<T>> for Dynamics<T> {
    fn from(c: &SimulationConfig<T>) -> Self {
        Dynamics {
            selection_intensity: c.selection_intensity,
            eta_bounds: c.eta_bounds,
            payoff_weights: c.payoff_weights,
        }
    }
}

/// One Monte Carlo round.
pub fn mc_round<T: Scalar>(state: &mut SimulationState<T>, env: &Environment<T>, game: &PayoffMatrix<T>, dyn_: &Dynamics<T>) {
    let net = &*env.network;
    accumulate_payoffs(state, net, game, dyn_.payoff_weights);
    let n = net.node_count();
    let steps = n * net.layer_count();
    if !env.active.is_empty() {
        for _ in 0..steps {
            let (i, alpha) = env.active[state.rng.random_range(0..env.active.len())];
            let nb = net.layer(alpha).adjacency.neighbours(i);
            let j = nb[state.rng.random_range(0..nb.len())];
            let si = state.strategies.get(i, alpha);
            let sj = state.strategies.get(j, alpha);
            if si == sj {
                continue;
            }
            let eta = comm::eta(i, alpha, &env.comm, &state.strategies, net, &dyn_.eta_bounds);
            let w = fermi_probability(
                state.payoff(i, alpha),
                state.payoff(j, alpha),
                net.delta[[i, j]],
                dyn_.selection_intensity,
                eta,
            );
            if T::lit(state.rng.random::<f64>()) < w {
                state.strategies.set(i, alpha, sj);
            }
        }
    }
    for (alpha, layer) in net.layers.iter().enumerate() {
        for i in 0..n {
            if state.strategies.get(i, alpha).is_cooperate() {
                state.coop_counts[i] += layer.adjacency.degree(i) as u64;
            }
        }
    }
    state.round += 1;
}

fn window_mean<T: Scalar>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_count(xs.len())
}

/// Runs one replica on a prepared environment. `observer` sees the initial
/// state and the state after every round.
pub fn simulate<T: Scalar>(
    config: &SimulationConfig<T>,
    env: &Environment<T>,
    dynamics_seed: u64,
    mut observer: impl FnMut(&SimulationState<T>),
) -> RunOutput<T> {
    let net = &*env.network;
    let dyn_ = Dynamics::from(config);
    let mut state = init(config, net.node_count(), net.layer_count(), rng::seeded(dynamics_seed));
    let slots = net.node_count() * net.layer_count();
    let w = config.steady_window;
    let mut rho = Vec::with_capacity(config.max_rounds + 1);
    rho.push(density(&state));
    observer(&state);
    let mut converged = false;
    let mut absorbed = false;
    for _ in 0..config.max_rounds {
        let coop = state.strategies.cooperators();
        if coop == 0 || coop == slots {
            converged = true;
            absorbed = true;
            break;
        }
        mc_round(&mut state, env, &config.game, &dyn_);
        rho.push(density(&state));
        observer(&state);
        let done = rho.len() - 1;
        if done >= 2 * w {
            let recent = window_mean(&rho[done - w + 1..=done]);
            let before = window_mean(&rho[done - 2 * w + 1..=done - w]);
            if (recent - before).abs() < config.steady_tolerance {
                converged = true;
                break;
            }
        }
    }
    // An absorbing state holds forever, so its density is the steady value.
    let post = &rho[1..];
    let steady_rho = if absorbed || post.is_empty() {
        *rho.last().expect("initial density recorded")
    } else {
        window_mean(&post[post.len().saturating_sub(w)..])
    };
    RunOutput {
        trajectory: Trajectory {
            rho,
            steady_rho,
            converged,
        },
        state,
        network: env.network.clone(),
    }
}

pub fn dynamics_seed(master: u64, cell: u64, replica: u64) -> u64 {
    rng::derive_seed(master, &[tag::DYNAMICS, cell, replica])
}

/// One replica, with its own network (for generated sources) and RNG stream.
pub fn run_replica<T: Scalar>(
    config: &SimulationConfig<T>,
    replica: u64,
    observer: impl FnMut(&SimulationState<T>),
) -> Result<RunOutput<T>> {
    config.validate()?;
    let env = Environment::for_replica(config, replica)?;
    Ok(simulate(config, &env, dynamics_seed(config.rng_seed, 0, replica), observer))
}

/// First replica only.
pub fn run<T: Scalar>(config: &SimulationConfig<T>) -> Result<RunOutput<T>> {
    run_replica(config, 0, |_| {})
}

/// All `config.replicas` replicas, in replica order regardless of scheduling.
pub fn run_replicas<T: Scalar>(config: &SimulationConfig<T>) -> Result<Vec<RunOutput<T>>> {
    config.validate()?;
    (0..config.replicas as u64)
        .into_par_iter()
        .map(|r| run_replica(config, r, |_| {}))
        .collect()
}

pub fn mean_and_std<T: Scalar>(xs: &[T]) -> (T, T) {
    if xs.is_empty() {
        return (T::nan(), T::nan());
    }
    let mean = window_mean(xs);
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / T::from_count(xs.len() - 1);
    (mean, var.sqrt())
}

/// Replica-mean steady density.
pub fn mean_steady_rho<T: Scalar>(config: &SimulationConfig<T>) -> Result<T> {
    let runs = run_replicas(config)?;
    let values: Vec<T> = runs.iter().map(|r| r.trajectory.steady_rho).collect();
    Ok(mean_and_std(&values).0)
}

/// Regular lattice over the T–S plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TsGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub t_steps: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub s_steps: usize,
}

impl Default for TsGrid {
    fn default() -> Self {
        TsGrid {
            t_min: 0.0,
            t_max: 2.0,
            t_steps: 21,
            s_min: -1.0,
            s_max: 1.0,
            s_steps: 21,
        }
    }
}

fn axis(min: f64, max: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![min];
    }
    (0..steps)
        .map(|k| min + (max - min) * k as f64 / (steps - 1) as f64)
        .collect()
}

impl TsGrid {
    pub fn validate(&self) -> Result<()> {
        if self.t_steps < 1 || self.s_steps < 1 {
            return Err(Error::param("grid", "need at least one step per axis"));
        }
        if !(0.0 <= self.t_min && self.t_min <= self.t_max && self.t_max <= 2.0) {
            return Err(Error::param("grid", "T range must lie within [0, 2]"));
        }
        if !(-1.0 <= self.s_min && self.s_min <= self.s_max && self.s_max <= 1.0) {
            return Err(Error::param("grid", "S range must lie within [-1, 1]"));
        }
        Ok(())
    }

    /// Points in emission order: S outer (ascending), T inner (ascending).
    pub fn points(&self) -> Vec<(f64, f64)> {
        let ts = axis(self.t_min, self.t_max, self.t_steps);
        axis(self.s_min, self.s_max, self.s_steps)
            .into_iter()
            .flat_map(|s| ts.iter().map(move |&t| (t, s)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell<T> {
    pub t: f64,
    pub s: f64,
    pub rho_mean: T,
    pub rho_std: T,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid<T> {
    pub cells: Vec<GridCell<T>>,
}

impl<T: Scalar> DensityGrid<T> {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "T,S,rho_mean,rho_std,replicas")?;
        for c in &self.cells {
            writeln!(out, "{},{},{},{},{}", c.t, c.s, c.rho_mean, c.rho_std, c.replicas)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn mean(&self) -> T {
        window_mean(&self.cells.iter().map(|c| c.rho_mean).collect::<Vec<_>>())
    }
}

/// Steady density over a T–S lattice. Replica `r` uses the same network in
/// every cell, so cells differ only by payoffs and dynamics stream.
pub fn sweep_ts<T: Scalar>(grid: &TsGrid, base: &SimulationConfig<T>) -> Result<DensityGrid<T>> {
    grid.validate()?;
    base.validate()?;
    let points = grid.points();
    let envs = (0..base.replicas as u64)
        .into_par_iter()
        .map(|r| Environment::for_replica(base, r))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|c| (0..base.replicas).map(move |r| (c, r)))
        .collect();
    let steady: Vec<T> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (t, s) = points[c];
            let mut cfg = base.clone();
            cfg.game = PayoffMatrix::from_ts(T::lit(t), T::lit(s));
            let seed = dynamics_seed(base.rng_seed, c as u64 + 1, r as u64);
            simulate(&cfg, &envs[r], seed, |_| {}).trajectory.steady_rho
        })
        .collect();
    let cells = points
        .iter()
        .enumerate()
        .map(|(c, &(t, s))| {
            let vals = &steady[c * base.replicas..(c + 1) * base.replicas];
            let (rho_mean, rho_std) = mean_and_std(vals);
            GridCell {
                t,
                s,
                rho_mean,
                rho_std,
                replicas: base.replicas,
            }
        })
        .collect();
    Ok(DensityGrid { cells })
}

pub fn write_trajectory<T: Scalar, W: Write>(rho: &[T], mut out: W) -> Result<()> {
    writeln!(out, "round,rho")?;
    for (n, r) in rho.iter().enumerate() {
        writeln!(out, "{n},{r}")?;
    }
    out.flush()?;
    Ok(())
}

/// Text snapshot of a state (the RNG position is not stored):
///
/// ```text
/// state v1 <N> <M> <round>
/// slot <node> <layer> <C|D> <payoff>     N*M lines, layer-major
/// coop <node> <count>                    N lines
/// ```
pub fn write_state<T: Scalar, W: Write>(state: &SimulationState<T>, mut out: W) -> Result<()> {
    let st = &state.strategies;
    writeln!(out, "state v1 {} {} {}", st.nodes(), st.layers(), state.round)?;
    for alpha in 0..st.layers() {
        for i in 0..st.nodes() {
            writeln!(out, "slot {i} {alpha} {} {}", st.get(i, alpha).symbol(), state.payoff(i, alpha))?;
        }
    }
    for (i, c) in state.coop_counts.iter().enumerate() {
        writeln!(out, "coop {i} {c}")?;
    }
    out.flush()?;
    Ok(())
}

/// Strategies, payoffs, round and counters read back from [`write_state`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateSnapshot<T> {
    pub strategies: StrategyTable,
    pub payoffs: Vec<T>,
    pub round: usize,
    pub coop_counts: Vec<u64>,
}

pub fn read_state<T: Scalar, R: BufRead>(input: R) -> Result<StateSnapshot<T>> {
    let mut lines = input.lines().enumerate();
    let bad = |line: usize, reason: &str| Error::Format { line, reason: reason.to_string() };
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty state file"))?;
    let header = header?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 || h[0] != "state" || h[1] != "v1" {
        return Err(bad(1, "expected `state v1 N M round`"));
    }
    let parse = |s: &str, line: usize| s.parse::<usize>().map_err(|_| bad(line, "bad integer"));
    let (n, m, round) = (parse(h[2], 1)?, parse(h[3], 1)?, parse(h[4], 1)?);
    let mut strategies = StrategyTable::filled(n, m, Strategy::Defect);
    let mut payoffs = vec![T::zero(); n * m];
    let mut coop_counts = vec![0u64; n];
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["slot", i, a, s, p] => {
                let (i, a) = (parse(i, line_no)?, parse(a, line_no)?);
                if i >= n || a >= m {
                    return Err(bad(line_no, "slot out of range"));
                }
                let s = s
                    .chars()
                    .next()
                    .and_then(Strategy::from_symbol)
                    .ok_or_else(|| bad(line_no, "strategy must be C or D"))?;
                strategies.set(i, a, s);
                payoffs[a * n + i] = p.parse().map_err(|_| bad(line_no, "bad payoff"))?;
            }
            ["coop", i, c] => {
                let i = parse(i, line_no)?;
                if i >= n {
                    return Err(bad(line_no, "node out of range"));
                }
                coop_counts[i] = c.parse().map_err(|_| bad(line_no, "bad counter"))?;
            }
            [] => {}
            _ => return Err(bad(line_no, "unrecognised line")),
        }
    }
    Ok(StateSnapshot {
        strategies,
        payoffs,
        round,
        coop_counts,
    })
}
