//! Multiplex construction: per-layer topologies over a shared node set,
//! pairwise homophily, centrality-and-homophily link weights.

mod adjacency;
mod centrality;
pub mod format;
mod generators;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

pub use adjacency::Adjacency;
pub use centrality::{eigenvector_centrality, Centrality};
pub use format::{read_network, write_network};
pub use generators::{generate_er, generate_sf, generate_ws, LayerTopology};

use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplexSpec<T> {
    pub node_count: usize,
    /// One entry per layer; its length is the layer count.
    pub topologies: Vec<LayerTopology>,
    pub homophily_sigma: T,
    /// Uniform coupling between every pair of layers.
    pub interlayer_strength: T,
    pub rng_seed: u64,
}

impl<T: Scalar> MultiplexSpec<T> {
    pub fn uniform(node_count: usize, layers: usize, topology: LayerTopology, sigma: T, seed: u64) -> Self {
        MultiplexSpec {
            node_count,
            topologies: vec![topology; layers],
            homophily_sigma: sigma,
            interlayer_strength: T::one(),
            rng_seed: seed,
        }
    }

    pub fn layer_count(&self) -> usize {
        self.topologies.len()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        MultiplexSpec {
            rng_seed: seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(Error::param("nodes", format!("need at least 2 nodes, got {}", self.node_count)));
        }
        if self.topologies.is_empty() {
            return Err(Error::param("layers", "need at least one layer"));
        }
        if !(self.homophily_sigma >= T::zero()) {
            return Err(Error::param("sigma", "homophily sigma must be non-negative"));
        }
        if !(self.interlayer_strength >= T::zero()) || !self.interlayer_strength.is_finite() {
            return Err(Error::param("omega", "inter-layer strength must be finite and non-negative"));
        }
        for t in &self.topologies {
            t.validate(self.node_count)?;
        }
        Ok(())
    }
}

/// One layer of the multiplex and the quantities derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub adjacency: Adjacency,
    pub centrality: Centrality<T>,
    /// `w_ij`, zero where there is no edge.
    pub weights: Array2<T>,
    /// Homophily-masked adjacency `h ∘ A`.
    pub z: Array2<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplexNetwork<T> {
    pub layers: Vec<Layer<T>>,
    /// Pairwise homophily distance `δ_ij`, shared by all layers.
    pub delta: Array2<T>,
    /// Similarity `h_ij = 1 / (1 + δ_ij)`.
    pub homophily: Array2<T>,
    /// Union of all layers; a pair linked on several layers counts once.
    pub aggregated: Adjacency,
}

impl<T: Scalar> MultiplexNetwork<T> {
    /// Assembles a network from layer graphs and a distance matrix. Weights,
    /// centralities and masks are derived here; this is the only place they
    /// are computed, so generated and loaded networks agree.
    pub fn from_parts(adjacencies: Vec<Adjacency>, delta: Array2<T>) -> Result<Self> {
        let n = delta.nrows();
        if delta.ncols() != n {
            return Err(Error::param("delta", "distance matrix must be square"));
        }
        if adjacencies.iter().any(|a| a.node_count() != n) {
            return Err(Error::param("layers", "every layer must span the same node set"));
        }
        let homophily = delta.mapv(homophily_from_distance);
        let layers = adjacencies
            .into_iter()
            .map(|adjacency| {
                let centrality = eigenvector_centrality::<T>(&adjacency);
                let mut weights = Array2::zeros((n, n));
                let mut z = Array2::zeros((n, n));
                for (i, j) in adjacency.edges() {
                    let w = link_weight(homophily[[i, j]], centrality.values[i], centrality.values[j]);
                    weights[[i, j]] = w;
                    weights[[j, i]] = w;
                    z[[i, j]] = homophily[[i, j]];
                    z[[j, i]] = homophily[[i, j]];
                }
                Layer {
                    adjacency,
                    centrality,
                    weights,
                    z,
                }
            })
            .collect::<Vec<_>>();
        let aggregated = Adjacency::union(n, layers.iter().map(|l| &l.adjacency));
        Ok(MultiplexNetwork {
            layers,
            delta,
            homophily,
            aggregated,
        })
    }

    pub fn node_count(&self) -> usize {
        self.delta.nrows()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, alpha: usize) -> &Layer<T> {
        &self.layers[alpha]
    }

    /// Sum of the node's degrees over all layers.
    pub fn total_degree(&self, i: usize) -> usize {
        self.layers.iter().map(|l| l.adjacency.degree(i)).sum()
    }
}

#[inline]
pub fn homophily_from_distance<T: Scalar>(delta: T) -> T {
    T::one() / (T::one() + delta)
}

/// Link weight from homophily and the endpoints' layer centralities:
/// `h_ij * (c_i + c_j) / 2`.
#[inline]
pub fn link_weight<T: Scalar>(h: T, c_i: T, c_j: T) -> T {
    h * (c_i + c_j) / T::lit(2.0)
}

/// Draws `δ_ij = |X|`, `X ~ N(0, σ)`, once per unordered pair, and the
/// matching similarity matrix.
pub fn sample_homophily<T: Scalar>(n: usize, sigma: T, seed: u64) -> Result<(Array2<T>, Array2<T>)> {
    if !(sigma >= T::zero()) {
        return Err(Error::param("sigma", "homophily sigma must be non-negative"));
    }
    let mut rng = rng::seeded(seed);
    let mut delta = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let x: f64 = StandardNormal.sample(&mut rng);
            let d = sigma * T::lit(x.abs());
            delta[[i, j]] = d;
            delta[[j, i]] = d;
        }
    }
    let h = delta.mapv(homophily_from_distance);
    Ok((delta, h))
}

/// Builds the full multiplex. Layer `α` uses the seed stream
/// `(rng_seed, LAYER, α)`, homophily uses `(rng_seed, HOMOPHILY)`.
pub fn build_multiplex<T: Scalar>(spec: &MultiplexSpec<T>) -> Result<MultiplexNetwork<T>> {
    spec.validate()?;
    let n = spec.node_count;
    let adjacencies = spec
        .topologies
        .iter()
        .enumerate()
        .map(|(alpha, topo)| topo.generate(n, rng::derive_seed(spec.rng_seed, &[tag::LAYER, alpha as u64])))
        .collect::<Result<Vec<_>>>()?;
    let (delta, _) = sample_homophily(n, spec.homophily_sigma, rng::derive_seed(spec.rng_seed, &[tag::HOMOPHILY]))?;
    MultiplexNetwork::from_parts(adjacencies, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn er(p: f64) -> LayerTopology {
        LayerTopology::ErdosRenyi { edge_probability: p }
    }

    #[test]
    fn zero_sigma_gives_unit_homophily() {
        let (d, h) = sample_homophily::<f64>(5, 0.0, 1).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
        assert!(h.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn unit_distance_halves_similarity() {
        assert_eq!(homophily_from_distance(1.0f64), 0.5);
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(sample_homophily::<f64>(3, -1.0, 1).is_err());
    }

    #[test]
    fn high_homophily_has_larger_mean_similarity() {
        let mean = |m: &Array2<f64>| m.sum() / m.len() as f64;
        for seed in 0..10 {
            let (_, h1) = sample_homophily::<f64>(60, 1.0, seed).unwrap();
            let (_, h8) = sample_homophily::<f64>(60, 8.0, seed).unwrap();
            assert!(mean(&h1) > mean(&h8));
        }
    }

    #[test]
    fn two_nodes_single_edge_weight_one() {
        let spec = MultiplexSpec::uniform(2, 1, er(1.0), 0.0, 3);
        let net = build_multiplex(&spec).unwrap();
        assert_eq!(net.layer(0).adjacency.edge_count(), 1);
        assert_eq!(net.layer(0).weights[[0, 1]], 1.0);
        assert_eq!(net.layer(0).weights[[1, 0]], 1.0);
    }

    #[test]
    fn duplicate_links_aggregate_once() {
        let spec = MultiplexSpec::uniform(2, 2, er(1.0), 1.0, 3);
        let net = build_multiplex(&spec).unwrap();
        assert_eq!(net.aggregated.edge_count(), 1);
    }

    #[test]
    fn z_is_homophily_masked_by_adjacency() {
        let spec = MultiplexSpec::uniform(200, 2, LayerTopology::scale_free(2), 1.0, 17);
        let net = build_multiplex::<f64>(&spec).unwrap();
        for layer in &net.layers {
            for i in 0..200 {
                for j in 0..200 {
                    let expect = if layer.adjacency.contains(i, j) { net.homophily[[i, j]] } else { 0.0 };
                    assert_eq!(layer.z[[i, j]], expect);
                }
            }
        }
    }

    #[test]
    fn invalid_spec_propagates_generator_error() {
        let spec = MultiplexSpec::<f64>::uniform(10, 1, LayerTopology::small_world(3), 1.0, 1);
        assert!(matches!(build_multiplex(&spec), Err(Error::Parameter { name: "k", .. })));
        let mut spec = MultiplexSpec::<f64>::uniform(10, 1, er(0.5), 1.0, 1);
        spec.topologies.clear();
        assert!(build_multiplex(&spec).is_err());
    }

    #[test]
    fn layers_use_independent_streams() {
        let spec = MultiplexSpec::<f64>::uniform(50, 2, er(0.1), 1.0, 5);
        let net = build_multiplex(&spec).unwrap();
        assert_ne!(net.layer(0).adjacency, net.layer(1).adjacency);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn structural_invariants(seed in any::<u64>(), n in 5usize..40, layers in 1usize..4, sigma in 0.0f64..8.0) {
            let topologies = (0..layers)
                .map(|a| match a % 3 {
                    0 => er(0.2),
                    1 => LayerTopology::small_world(2),
                    _ => LayerTopology::scale_free(1),
                })
                .collect();
            let spec = MultiplexSpec { node_count: n, topologies, homophily_sigma: sigma, interlayer_strength: 1.0, rng_seed: seed };
            let net = build_multiplex::<f64>(&spec).unwrap();
            let again = build_multiplex::<f64>(&spec).unwrap();
            prop_assert_eq!(&net, &again);
            for i in 0..n {
                prop_assert_eq!(net.homophily[[i, i]], 1.0);
                for j in 0..n {
                    let h = net.homophily[[i, j]];
                    prop_assert!(h > 0.0 && h <= 1.0);
                    prop_assert_eq!(h == 1.0, net.delta[[i, j]] == 0.0);
                    prop_assert_eq!(net.delta[[i, j]], net.delta[[j, i]]);
                    let any = net.layers.iter().any(|l| l.adjacency.contains(i, j));
                    prop_assert_eq!(net.aggregated.contains(i, j), any);
                    for l in &net.layers {
                        prop_assert_eq!(l.adjacency.contains(i, j), l.adjacency.contains(j, i));
                        prop_assert!(l.z[[i, j]] >= 0.0 && l.z[[i, j]] <= 1.0);
                    }
                }
                for l in &net.layers {
                    prop_assert!(!l.adjacency.contains(i, i));
                }
            }
        }
    }
}
