//! Two-strategy social dilemmas.

use std::fmt;

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Cooperate,
    Defect,
}

impl Strategy {
    pub fn is_cooperate(self) -> bool {
        self == Strategy::Cooperate
    }

    /// Column encoding: `(1, 0)` for C, `(0, 1)` for D.
    pub fn theta(self) -> [u8; 2] {
        match self {
            Strategy::Cooperate => [1, 0],
            Strategy::Defect => [0, 1],
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Strategy::Cooperate => 'C',
            Strategy::Defect => 'D',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'C' => Some(Strategy::Cooperate),
            'D' => Some(Strategy::Defect),
            _ => None,
        }
    }
}

/// Payoffs to the row player: reward, sucker, temptation, punishment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PayoffMatrix<T> {
    pub reward: T,
    pub sucker: T,
    pub temptation: T,
    pub punishment: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DilemmaKind {
    PrisonersDilemma,
    Snowdrift,
    StagHunt,
    Harmony,
    Other,
}

impl DilemmaKind {
    pub fn short_name(self) -> &'static str {
        match self {
            DilemmaKind::PrisonersDilemma => "PD",
            DilemmaKind::Snowdrift => "SD",
            DilemmaKind::StagHunt => "SH",
            DilemmaKind::Harmony => "HG",
            DilemmaKind::Other => "OTHER",
        }
    }
}

impl fmt::Display for DilemmaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl<T: Scalar> PayoffMatrix<T> {
    pub fn new(reward: T, sucker: T, temptation: T, punishment: T) -> Self {
        PayoffMatrix {
            reward,
            sucker,
            temptation,
            punishment,
        }
    }

    /// T–S plane parameterisation with `R = 1`, `P = 0`.
    pub fn from_ts(temptation: T, sucker: T) -> Self {
        Self::new(T::one(), sucker, temptation, T::zero())
    }

    /// Donation-style prisoner's dilemma: `R = 1, P = 0, T = b, S = -c`.
    pub fn pd_from_bc(benefit: T, cost: T) -> Self {
        Self::new(T::one(), -cost, benefit, T::zero())
    }

    pub fn is_finite(&self) -> bool {
        [self.reward, self.sucker, self.temptation, self.punishment]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Classification by strict payoff ranking; any tie in a compared pair
    /// falls through to `Other`.
    pub fn classify(&self) -> DilemmaKind {
        let (r, s, t, p) = (self.reward, self.sucker, self.temptation, self.punishment);
        if t > r && r > p && p > s {
            DilemmaKind::PrisonersDilemma
        } else if t > r && r > s && s > p {
            DilemmaKind::Snowdrift
        } else if r > t && t > p && p > s {
            DilemmaKind::StagHunt
        } else if r > s && s > p && r > t && t > p {
            DilemmaKind::Harmony
        } else {
            DilemmaKind::Other
        }
    }

    /// Payoffs `(to i, to j)` when `i` plays `si` against `j` playing `sj`.
    #[inline]
    pub fn pairwise(&self, si: Strategy, sj: Strategy) -> (T, T) {
        use Strategy::*;
        match (si, sj) {
            (Cooperate, Cooperate) => (self.reward, self.reward),
            (Cooperate, Defect) => (self.sucker, self.temptation),
            (Defect, Cooperate) => (self.temptation, self.sucker),
            (Defect, Defect) => (self.punishment, self.punishment),
        }
    }

    pub fn scaled(&self, k: T) -> Self {
        Self::new(self.reward * k, self.sucker * k, self.temptation * k, self.punishment * k)
    }

    pub fn shifted(&self, k: T) -> Self {
        Self::new(self.reward + k, self.sucker + k, self.temptation + k, self.punishment + k)
    }
}

/// Benefit-to-cost ratio `b / c` of a donation game.
pub fn benefit_cost_ratio<T: Scalar>(benefit: T, cost: T) -> T {
    benefit / cost
}

/// Strategy of every (node, layer) slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyTable {
    nodes: usize,
    layers: usize,
    slots: Vec<Strategy>,
}

impl StrategyTable {
    pub fn filled(nodes: usize, layers: usize, s: Strategy) -> Self {
        StrategyTable {
            nodes,
            layers,
            slots: vec![s; nodes * layers],
        }
    }

    pub fn from_fn(nodes: usize, layers: usize, mut f: impl FnMut(usize, usize) -> Strategy) -> Self {
        let mut slots = Vec::with_capacity(nodes * layers);
        for alpha in 0..layers {
            for i in 0..nodes {
                slots.push(f(i, alpha));
            }
        }
        StrategyTable { nodes, layers, slots }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    #[inline]
    pub fn get(&self, node: usize, layer: usize) -> Strategy {
        self.slots[layer * self.nodes + node]
    }

    #[inline]
    pub fn set(&mut self, node: usize, layer: usize, s: Strategy) {
        self.slots[layer * self.nodes + node] = s;
    }

    pub fn cooperators(&self) -> usize {
        self.slots.iter().filter(|s| s.is_cooperate()).count()
    }

    pub fn layer_cooperators(&self, layer: usize) -> usize {
        self.slots[layer * self.nodes..(layer + 1) * self.nodes]
            .iter()
            .filter(|s| s.is_cooperate())
            .count()
    }
}
