//! Behavioural estimators from a finished simulation: social honesty γ,
//! network QoI and the behavioural reputation `R_i = γ_i / QoI`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::evolve::SimulationState;
use crate::netgen::MultiplexNetwork;
use crate::scalar::Scalar;

/// γ per node, `None` for nodes with no neighbour on any layer.
///
/// `γ_i = NC_i / (N_r · N_nb,i)`, with `NC_i` the node's cumulative
/// cooperative interactions (its layer degree for every round it played C
/// on that layer) and `N_nb,i` the sum of its layer degrees.
pub fn social_honesty<T: Scalar>(coop_counts: &[u64], neighbour_counts: &[usize], rounds: usize) -> Result<Vec<Option<T>>> {
    if rounds == 0 {
        return Err(Error::param("rounds", "need at least one completed round"));
    }
    if coop_counts.len() != neighbour_counts.len() {
        return Err(Error::param("coop_counts", "one counter per node expected"));
    }
    Ok(coop_counts
        .iter()
        .zip(neighbour_counts)
        .map(|(&nc, &nb)| {
            (nb > 0).then(|| T::lit(nc as f64) / (T::from_count(rounds) * T::from_count(nb)))
        })
        .collect())
}

pub fn social_honesty_of<T: Scalar>(state: &SimulationState<T>, net: &MultiplexNetwork<T>) -> Result<Vec<Option<T>>> {
    let nb: Vec<usize> = (0..net.node_count()).map(|i| net.total_degree(i)).collect();
    social_honesty(&state.coop_counts, &nb, state.round)
}

/// Mean over the defined entries.
pub fn qoi<T: Scalar>(gamma: &[Option<T>]) -> Result<T> {
    let defined: Vec<T> = gamma.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::Degenerate("no node has a defined social honesty".into()));
    }
    Ok(defined.iter().copied().sum::<T>() / T::from_count(defined.len()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reputation<T> {
    pub values: Vec<Option<T>>,
    /// QoI was zero: nobody cooperated, every reputation is reported as 0.
    pub all_defectors: bool,
}

pub fn behavioural_reputation<T: Scalar>(gamma: &[Option<T>], qoi: T) -> Reputation<T> {
    if qoi <= T::zero() {
        return Reputation {
            values: gamma.iter().map(|g| g.map(|_| T::zero())).collect(),
            all_defectors: true,
        };
    }
    Reputation {
        values: gamma.iter().map(|g| g.map(|g| g / qoi)).collect(),
        all_defectors: false,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BehaviourStats<T> {
    pub gamma: Vec<Option<T>>,
    pub qoi: T,
    pub reputation: Reputation<T>,
}

impl<T: Scalar> BehaviourStats<T> {
    pub fn from_run(state: &SimulationState<T>, net: &MultiplexNetwork<T>) -> Result<Self> {
        let gamma = social_honesty_of(state, net)?;
        let qoi = qoi(&gamma)?;
        let reputation = behavioural_reputation(&gamma, qoi);
        Ok(BehaviourStats { gamma, qoi, reputation })
    }

    /// `node,gamma,reputation`; undefined entries are left empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "node,gamma,reputation")?;
        for (i, (g, r)) in self.gamma.iter().zip(&self.reputation.values).enumerate() {
            let show = |v: &Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
            writeln!(out, "{i},{},{}", show(g), show(r))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary_line(&self) -> String {
        format!("qoi={}", self.qoi)
    }
}

pub fn median<T: Scalar>(values: impl IntoIterator<Item = T>) -> Option<T> {
    let mut v: Vec<T> = values.into_iter().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / T::lit(2.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn honesty_examples() {
        // degree 3, 10 rounds
        let g = social_honesty::<f64>(&[30, 0, 15], &[3, 3, 3], 10).unwrap();
        assert_eq!(g, vec![Some(1.0), Some(0.0), Some(0.5)]);
    }

    #[test]
    fn isolated_nodes_are_missing() {
        let g = social_honesty::<f64>(&[0, 4], &[0, 2], 2).unwrap();
        assert_eq!(g, vec![None, Some(1.0)]);
        assert_eq!(qoi(&g).unwrap(), 1.0);
        assert!(social_honesty::<f64>(&[0], &[1], 0).is_err());
    }

    #[test]
    fn qoi_examples() {
        assert_eq!(qoi(&[Some(1.0), Some(1.0)]).unwrap(), 1.0);
        assert_eq!(qoi(&[Some(0.0), Some(1.0)]).unwrap(), 0.5);
        assert!(qoi::<f64>(&[None, None]).is_err());
    }

    #[test]
    fn reputation_examples() {
        let r = behavioural_reputation(&[Some(0.4), Some(0.4)], 0.4);
        assert_eq!(r.values, vec![Some(1.0), Some(1.0)]);
        let r = behavioural_reputation(&[Some(0.9)], 0.45);
        assert_eq!(r.values, vec![Some(2.0)]);
        let r = behavioural_reputation(&[Some(0.0), None], 0.0);
        assert!(r.all_defectors);
        assert_eq!(r.values, vec![Some(0.0), None]);
    }

    #[test]
    fn median_values() {
        assert_eq!(median([3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median([4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(Vec::<f64>::new()), None);
    }

    proptest! {
        #[test]
        fn estimator_identities(raw in proptest::collection::vec((0u64..1000, 1usize..20), 1..60), rounds in 1usize..50) {
            let counts: Vec<u64> = raw.iter().map(|&(c, nb)| c % (rounds as u64 * nb as u64 + 1)).collect();
            let nbs: Vec<usize> = raw.iter().map(|&(_, nb)| nb).collect();
            let gamma = social_honesty::<f64>(&counts, &nbs, rounds).unwrap();
            let defined: Vec<f64> = gamma.iter().flatten().copied().collect();
            prop_assert!(defined.iter().all(|&g| (0.0..=1.0).contains(&g)));
            let q = qoi(&gamma).unwrap();
            let lo = defined.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= q + 1e-15 && q <= hi + 1e-15);
            if q > 0.0 {
                let r = behavioural_reputation(&gamma, q);
                let mean = r.values.iter().flatten().sum::<f64>() / defined.len() as f64;
                prop_assert!((mean - 1.0).abs() <= 1e-12);
            }
        }
    }
}
