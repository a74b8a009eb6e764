//! Local best responses, Nash pairs and the Nash-pair density α.
//!
//! Everything here works on the aggregated graph: a pair linked on several
//! layers is a single edge, its similarity weight is `h_ij`, and each node
//! is represented by one strategy obtained by projecting its per-layer
//! strategies (majority vote by default). The `PerLayer` projection instead
//! evaluates every layer on its own edges and pools the counts.

use std::io::Write;

use crate::error::{Error, Result};
use crate::games::{PayoffMatrix, Strategy, StrategyTable};
use crate::netgen::{Adjacency, MultiplexNetwork};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NashProjection {
    /// Majority over layers; ties count as C.
    MajorityTieC,
    /// Majority over layers; ties count as D.
    MajorityTieD,
    /// No projection: each layer is analysed separately.
    PerLayer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BestResponse {
    Cooperate,
    Defect,
    /// `Δ = 0`: both strategies are best responses (weak equilibrium).
    Both,
}

impl BestResponse {
    pub fn admits(self, s: Strategy) -> bool {
        match self {
            BestResponse::Both => true,
            BestResponse::Cooperate => s == Strategy::Cooperate,
            BestResponse::Defect => s == Strategy::Defect,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalState<T> {
    /// Local weighted frequency of cooperators `Ξ_i`.
    pub xi: T,
    /// Payoff advantage of C over D, `Δ_i`.
    pub delta: T,
    pub best: BestResponse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairCheck {
    pub nash: bool,
    /// Set when the pair is Nash and at least one endpoint has `Δ = 0`.
    pub weak: bool,
}

/// A single strategy-and-graph view the analysis runs on.
pub struct View<'a, T> {
    pub graph: &'a Adjacency,
    pub strategies: Vec<Strategy>,
    pub homophily: &'a ndarray::Array2<T>,
}

pub fn project(table: &StrategyTable, node: usize, projection: NashProjection) -> Strategy {
    let c = (0..table.layers()).filter(|&a| table.get(node, a).is_cooperate()).count();
    let d = table.layers() - c;
    match projection {
        NashProjection::MajorityTieD if c <= d => Strategy::Defect,
        NashProjection::MajorityTieD => Strategy::Cooperate,
        _ if c >= d => Strategy::Cooperate,
        _ => Strategy::Defect,
    }
}

/// Views to analyse for a projection: one aggregated view, or one per layer.
pub fn views<'a, T: Scalar>(
    net: &'a MultiplexNetwork<T>,
    table: &StrategyTable,
    projection: NashProjection,
) -> Vec<View<'a, T>> {
    let n = net.node_count();
    match projection {
        NashProjection::PerLayer => net
            .layers
            .iter()
            .enumerate()
            .map(|(alpha, layer)| View {
                graph: &layer.adjacency,
                strategies: (0..n).map(|i| table.get(i, alpha)).collect(),
                homophily: &net.homophily,
            })
            .collect(),
        _ => vec![View {
            graph: &net.aggregated,
            strategies: (0..n).map(|i| project(table, i, projection)).collect(),
            homophily: &net.homophily,
        }],
    }
}

/// `Ξ_i = Σ_j h_ij [S_j = C] / k_i` over the neighbours in `view`.
/// `None` for isolated nodes.
pub fn local_frequency<T: Scalar>(i: usize, view: &View<'_, T>) -> Option<T> {
    let nb = view.graph.neighbours(i);
    if nb.is_empty() {
        return None;
    }
    let sum: T = nb
        .iter()
        .filter(|&&j| view.strategies[j].is_cooperate())
        .map(|&j| view.homophily[[i, j]])
        .sum();
    Some(sum / T::from_count(nb.len()))
}

/// `Δ = (S - P) + (R - T + P - S) Ξ`; C is best when `Δ > 0`.
pub fn best_response<T: Scalar>(xi: T, game: &PayoffMatrix<T>) -> LocalState<T> {
    let g = game;
    let delta = (g.sucker - g.punishment) + (g.reward - g.temptation + g.punishment - g.sucker) * xi;
    let best = if delta > T::zero() {
        BestResponse::Cooperate
    } else if delta < T::zero() {
        BestResponse::Defect
    } else {
        BestResponse::Both
    };
    LocalState { xi, delta, best }
}

pub fn local_state<T: Scalar>(i: usize, view: &View<'_, T>, game: &PayoffMatrix<T>) -> Option<LocalState<T>> {
    local_frequency(i, view).map(|xi| best_response(xi, game))
}

/// Both endpoints play a best response to their own neighbourhood.
pub fn is_nash_pair<T: Scalar>(i: usize, j: usize, view: &View<'_, T>, game: &PayoffMatrix<T>) -> PairCheck {
    let (Some(li), Some(lj)) = (local_state(i, view, game), local_state(j, view, game)) else {
        return PairCheck { nash: false, weak: false };
    };
    let nash = li.best.admits(view.strategies[i]) && lj.best.admits(view.strategies[j]);
    let weak = nash && (li.best == BestResponse::Both || lj.best == BestResponse::Both);
    PairCheck { nash, weak }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NashSnapshot<T> {
    pub alpha: T,
    pub n_pairs: usize,
    pub n_edges: usize,
    pub weak_pairs: usize,
}

impl<T: Scalar> NashSnapshot<T> {
    pub fn weak_fraction(&self) -> T {
        T::from_count(self.weak_pairs) / T::from_count(self.n_edges)
    }
}

/// `α = N_p / E` over the analysed edges.
pub fn nash_pair_density<T: Scalar>(
    table: &StrategyTable,
    net: &MultiplexNetwork<T>,
    game: &PayoffMatrix<T>,
    projection: NashProjection,
) -> Result<NashSnapshot<T>> {
    let vs = views(net, table, projection);
    let mut n_edges = 0;
    let mut n_pairs = 0;
    let mut weak_pairs = 0;
    for view in &vs {
        let states: Vec<Option<LocalState<T>>> =
            (0..view.graph.node_count()).map(|i| local_state(i, view, game)).collect();
        for (i, j) in view.graph.edges() {
            n_edges += 1;
            let (li, lj) = (states[i].expect("endpoint has an edge"), states[j].expect("endpoint has an edge"));
            if li.best.admits(view.strategies[i]) && lj.best.admits(view.strategies[j]) {
                n_pairs += 1;
                if li.best == BestResponse::Both || lj.best == BestResponse::Both {
                    weak_pairs += 1;
                }
            }
        }
    }
    if n_edges == 0 {
        return Err(Error::Degenerate("Nash-pair density needs at least one edge".into()));
    }
    Ok(NashSnapshot {
        alpha: T::from_count(n_pairs) / T::from_count(n_edges),
        n_pairs,
        n_edges,
        weak_pairs,
    })
}

/// α(n) collected round by round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NashReport<T> {
    pub per_round: Vec<NashSnapshot<T>>,
}

impl<T: Scalar> NashReport<T> {
    pub fn alphas(&self) -> Vec<T> {
        self.per_round.iter().map(|s| s.alpha).collect()
    }

    pub fn last(&self) -> Option<&NashSnapshot<T>> {
        self.per_round.last()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "round,alpha,weak_fraction")?;
        for (n, s) in self.per_round.iter().enumerate() {
            writeln!(out, "{n},{},{}", s.alpha, s.weak_fraction())?;
        }
        out.flush()?;
        Ok(())
    }
}

/// A run of at least `min_len` consecutive rounds whose α values stay
/// within `band` of each other (max - min < band).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plateau<T> {
    pub start: usize,
    pub len: usize,
    pub level: T,
}

/// Maximal flat stretches of `series`, scanning left to right.
pub fn plateaus<T: Scalar>(series: &[T], min_len: usize, band: T) -> Vec<Plateau<T>> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < series.len() {
        let (mut lo, mut hi) = (series[start], series[start]);
        let mut end = start + 1;
        while end < series.len() {
            let v = series[end];
            let (nlo, nhi) = (lo.min(v), hi.max(v));
            if nhi - nlo >= band {
                break;
            }
            lo = nlo;
            hi = nhi;
            end += 1;
        }
        let len = end - start;
        if len >= min_len {
            let level = series[start..end].iter().copied().sum::<T>() / T::from_count(len);
            out.push(Plateau { start, len, level });
            start = end;
        } else {
            start += 1;
        }
    }
    out
}
