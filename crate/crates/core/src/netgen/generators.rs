//! Random graph models for a single layer.

use rand::Rng;

use super::adjacency::{Adjacency, AdjacencyBuilder};
use crate::error::{Error, Result};
use crate::rng;

/// Topology of one layer, with the model parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerTopology {
    /// Erdős–Rényi G(n, p).
    ErdosRenyi { edge_probability: f64 },
    /// Watts–Strogatz ring lattice with rewiring.
    WattsStrogatz { ring_degree: usize, rewire_probability: f64 },
    /// Barabási–Albert preferential attachment from an `seed_clique_size` clique.
    ScaleFree { attachment_count: usize, seed_clique_size: usize },
}

impl LayerTopology {
    pub const DEFAULT_REWIRE: f64 = 0.1;

    pub fn small_world(ring_degree: usize) -> Self {
        LayerTopology::WattsStrogatz {
            ring_degree,
            rewire_probability: Self::DEFAULT_REWIRE,
        }
    }

    pub fn scale_free(attachment_count: usize) -> Self {
        LayerTopology::ScaleFree {
            attachment_count,
            seed_clique_size: attachment_count + 1,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            LayerTopology::ErdosRenyi { edge_probability } => check_probability("p", edge_probability),
            LayerTopology::WattsStrogatz { ring_degree, rewire_probability } => {
                check_probability("beta", rewire_probability)?;
                check_ring_degree(n, ring_degree)
            }
            LayerTopology::ScaleFree { attachment_count, seed_clique_size } => {
                check_attachment(n, attachment_count, seed_clique_size)
            }
        }
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Adjacency> {
        match *self {
            LayerTopology::ErdosRenyi { edge_probability } => generate_er(n, edge_probability, seed),
            LayerTopology::WattsStrogatz { ring_degree, rewire_probability } => {
                generate_ws(n, ring_degree, rewire_probability, seed)
            }
            LayerTopology::ScaleFree { attachment_count, seed_clique_size } => {
                generate_sf(n, attachment_count, seed_clique_size, seed)
            }
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            LayerTopology::ErdosRenyi { .. } => "er",
            LayerTopology::WattsStrogatz { .. } => "ws",
            LayerTopology::ScaleFree { .. } => "sf",
        }
    }
}

fn check_nodes(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::param("n", format!("need at least 2 nodes, got {n}")));
    }
    Ok(())
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(name, format!("{p} is not a probability")));
    }
    Ok(())
}

fn check_ring_degree(n: usize, k: usize) -> Result<()> {
    check_nodes(n)?;
    if k % 2 != 0 {
        return Err(Error::param("k", format!("ring degree must be even, got {k}")));
    }
    if k < 2 || k >= n {
        return Err(Error::param("k", format!("need 2 <= k < n, got k={k}, n={n}")));
    }
    Ok(())
}

fn check_attachment(n: usize, m: usize, m0: usize) -> Result<()> {
    check_nodes(n)?;
    if m < 1 {
        return Err(Error::param("m", "attachment count must be at least 1"));
    }
    if m > m0 {
        return Err(Error::param("m", format!("attachment count {m} exceeds seed clique size {m0}")));
    }
    if m0 >= n {
        return Err(Error::param("m0", format!("seed clique size {m0} must be below n={n}")));
    }
    Ok(())
}

/// G(n, p): every unordered pair independently with probability `p`.
pub fn generate_er(n: usize, p: f64, seed: u64) -> Result<Adjacency> {
    check_nodes(n)?;
    check_probability("p", p)?;
    let mut rng = rng::seeded(seed);
    let mut g = AdjacencyBuilder::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                g.insert(i, j);
            }
        }
    }
    Ok(g.finish())
}

/// Watts–Strogatz: ring lattice joining each node to its `k` nearest
/// neighbours, then each lattice edge `(i, i+d)` has its far end moved to a
/// uniformly chosen node with probability `beta`. Self-loops and duplicate
/// edges are never created, so the edge count stays `n*k/2`.
pub fn generate_ws(n: usize, k: usize, beta: f64, seed: u64) -> Result<Adjacency> {
    check_ring_degree(n, k)?;
    check_probability("beta", beta)?;
    let mut rng = rng::seeded(seed);
    let mut g = AdjacencyBuilder::new(n);
    for d in 1..=k / 2 {
        for i in 0..n {
            g.insert(i, (i + d) % n);
        }
    }
    if beta == 0.0 {
        return Ok(g.finish());
    }
    for d in 1..=k / 2 {
        for i in 0..n {
            let j = (i + d) % n;
            if !g.contains(i, j) || rng.random::<f64>() >= beta {
                continue;
            }
            if g.degree(i) >= n - 1 {
                continue;
            }
            let target = loop {
                let t = rng.random_range(0..n);
                if t != i && !g.contains(i, t) {
                    break t;
                }
            };
            g.remove(i, j);
            g.insert(i, target);
        }
    }
    Ok(g.finish())
}

/// Barabási–Albert growth. Starts from a complete graph on `m0` nodes; each
/// later node links to `m` distinct existing nodes drawn with probability
/// proportional to their current degree (uniformly while all degrees are 0).
pub fn generate_sf(n: usize, m: usize, m0: usize, seed: u64) -> Result<Adjacency> {
    check_attachment(n, m, m0)?;
    let mut rng = rng::seeded(seed);
    let mut g = AdjacencyBuilder::new(n);
    // One entry per edge endpoint, so a uniform draw is degree-proportional.
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * (m0 * m0 + m * n));
    for i in 0..m0 {
        for j in (i + 1)..m0 {
            g.insert(i, j);
            endpoints.push(i);
            endpoints.push(j);
        }
    }
    let mut targets: Vec<usize> = Vec::with_capacity(m);
    for new in m0..n {
        targets.clear();
        while targets.len() < m {
            let t = if endpoints.is_empty() {
                rng.random_range(0..new)
            } else {
                endpoints[rng.random_range(0..endpoints.len())]
            };
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            g.insert(new, t);
            endpoints.push(new);
            endpoints.push(t);
        }
    }
    Ok(g.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_extremes() {
        assert_eq!(generate_er(3, 0.0, 1).unwrap().edge_count(), 0);
        assert_eq!(generate_er(3, 1.0, 1).unwrap().edge_count(), 3);
    }

    #[test]
    fn er_rejects_bad_probability() {
        assert!(matches!(generate_er(5, 1.5, 1), Err(Error::Parameter { name: "p", .. })));
        assert!(generate_er(5, -0.1, 1).is_err());
        assert!(generate_er(1, 0.5, 1).is_err());
    }

    #[test]
    fn er_edge_count_within_three_sigma() {
        // Binomial(19900, 0.05): mean 995, sd sqrt(19900*0.05*0.95) = 30.74.
        for seed in 0..10 {
            let e = generate_er(200, 0.05, seed).unwrap().edge_count() as f64;
            assert!((e - 995.0).abs() <= 92.3, "seed {seed}: {e} edges");
        }
    }

    #[test]
    fn ws_unrewired_is_regular_ring() {
        let g = generate_ws(10, 4, 0.0, 3).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 4));
        assert_eq!(g.edge_count(), 20);
        assert!(g.contains(0, 9) && g.contains(0, 8) && !g.contains(0, 7));
    }

    #[test]
    fn ws_rewiring_keeps_edge_count() {
        for seed in 0..5 {
            let g = generate_ws(200, 4, 0.1, seed).unwrap();
            assert_eq!(g.edge_count(), 400);
            let max = *g.degrees().iter().max().unwrap();
            assert!(max <= 12, "WS degree tail too heavy: {max}");
        }
        // Full rewiring still preserves the count.
        assert_eq!(generate_ws(50, 6, 1.0, 9).unwrap().edge_count(), 150);
    }

    #[test]
    fn ws_rejects_odd_or_large_k() {
        assert!(matches!(generate_ws(10, 3, 0.1, 1), Err(Error::Parameter { name: "k", .. })));
        assert!(generate_ws(10, 10, 0.1, 1).is_err());
        assert!(generate_ws(10, 0, 0.1, 1).is_err());
    }

    #[test]
    fn sf_tree_when_single_attachment() {
        let g = generate_sf(5, 1, 1, 11).unwrap();
        assert_eq!(g.edge_count(), 4);
        // connected: BFS reaches every node
        let mut seen = [false; 5];
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            if !std::mem::replace(&mut seen[v], true) {
                stack.extend_from_slice(g.neighbours(v));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn sf_edge_count_and_hubs() {
        for seed in 0..10 {
            let g = generate_sf(200, 2, 3, seed).unwrap();
            assert_eq!(g.edge_count(), 3 + 2 * 197);
            let max = *g.degrees().iter().max().unwrap() as f64;
            assert!(max >= 3.0 * g.mean_degree(), "seed {seed}: max degree {max}");
        }
    }

    #[test]
    fn sf_rejects_m_above_m0() {
        assert!(matches!(generate_sf(10, 3, 2, 1), Err(Error::Parameter { name: "m", .. })));
        assert!(generate_sf(3, 1, 3, 1).is_err());
    }

    #[test]
    fn sf_heavier_tail_than_er_at_same_mean_degree() {
        let mut wins = 0;
        for seed in 0..10 {
            let sf = generate_sf(200, 2, 3, seed).unwrap();
            let p = sf.mean_degree() / 199.0;
            let er = generate_er(200, p, seed + 100).unwrap();
            let max = |g: &Adjacency| *g.degrees().iter().max().unwrap();
            if max(&sf) > max(&er) {
                wins += 1;
            }
        }
        assert_eq!(wins, 10);
    }

    #[test]
    fn generators_are_deterministic() {
        for topo in [
            LayerTopology::ErdosRenyi { edge_probability: 0.05 },
            LayerTopology::small_world(4),
            LayerTopology::scale_free(2),
        ] {
            assert_eq!(topo.generate(100, 5).unwrap(), topo.generate(100, 5).unwrap());
        }
    }
}
