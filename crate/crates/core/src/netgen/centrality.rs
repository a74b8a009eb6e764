use super::adjacency::Adjacency;
use crate::scalar::Scalar;

pub const MAX_ITERATIONS: usize = 10_000;

/// Per-node eigenvector centrality, scaled so the largest entry is 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Centrality<T> {
    pub values: Vec<T>,
    /// Set when the graph has no edges; `values` is then all zeros.
    pub degenerate: bool,
    pub iterations: usize,
}

/// Dominant eigenvector of the adjacency matrix by power iteration.
///
/// Iterates on `A + I`, which has the same eigenvectors as `A` but a strictly
/// dominant eigenvalue even for bipartite graphs (where `A` itself has the
/// pair `±λ` and plain power iteration oscillates). Stops once the max-norm
/// change of the unit-max iterate drops below `1e-10` (or a few ulps for
/// `f32`). Isolated nodes get exactly 0.
pub fn eigenvector_centrality<T: Scalar>(adj: &Adjacency) -> Centrality<T> {
    let n = adj.node_count();
    if adj.edge_count() == 0 {
        return Centrality {
            values: vec![T::zero(); n],
            degenerate: true,
            iterations: 0,
        };
    }
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(8.0));
    let mut x = vec![T::one(); n];
    let mut next = vec![T::zero(); n];
    let mut iterations = 0;
    for it in 1..=MAX_ITERATIONS {
        iterations = it;
        for (i, out) in next.iter_mut().enumerate() {
            *out = x[i] + adj.neighbours(i).iter().map(|&j| x[j]).sum::<T>();
        }
        let max = next.iter().copied().fold(T::zero(), T::max);
        let mut change = T::zero();
        for (xi, &ni) in x.iter_mut().zip(&next) {
            let v = ni / max;
            change = change.max((v - *xi).abs());
            *xi = v;
        }
        if change < tol {
            break;
        }
    }
    for (i, xi) in x.iter_mut().enumerate() {
        if adj.degree(i) == 0 {
            *xi = T::zero();
        }
    }
    Centrality {
        values: x,
        degenerate: false,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn complete_triangle_is_uniform() {
        let g = Adjacency::from_edges(3, [(0, 1), (1, 2), (0, 2)]);
        let c = eigenvector_centrality::<f64>(&g);
        assert!(c.values.iter().all(|&v| close(v, 1.0)));
        assert!(!c.degenerate);
    }

    #[test]
    fn star_leaves_at_half() {
        // Dominant eigenvector of K_{1,4}: leaf/centre = 1/sqrt(4).
        let g = Adjacency::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]);
        let c = eigenvector_centrality::<f64>(&g);
        assert!(close(c.values[0], 1.0));
        for leaf in 1..5 {
            assert!(close(c.values[leaf], 0.5), "{:?}", c.values);
        }
    }

    #[test]
    fn disconnected_equal_cliques() {
        let g = Adjacency::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let c = eigenvector_centrality::<f64>(&g);
        assert!(close(c.values[0], c.values[1]) && close(c.values[1], c.values[2]));
        assert!(close(c.values[3], c.values[4]) && close(c.values[4], c.values[5]));
    }

    #[test]
    fn empty_graph_is_degenerate() {
        let c = eigenvector_centrality::<f64>(&Adjacency::empty(4));
        assert!(c.degenerate);
        assert_eq!(c.values, vec![0.0; 4]);
    }

    #[test]
    fn isolated_nodes_get_zero() {
        let g = Adjacency::from_edges(4, [(0, 1)]);
        let c = eigenvector_centrality::<f64>(&g);
        assert_eq!(c.values[2], 0.0);
        assert_eq!(c.values[3], 0.0);
        assert!(close(c.values[0], 1.0));
    }

    #[test]
    fn single_precision_agrees() {
        let g = Adjacency::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]);
        let c = eigenvector_centrality::<f32>(&g);
        assert!((c.values[1] - 0.5).abs() < 1e-5);
    }
}
