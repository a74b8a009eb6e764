use ndarray::Array2;
use num_traits::{One, Zero};

/// Simple undirected graph on `n` labelled nodes: symmetric 0/1 adjacency
/// with zero diagonal, stored as sorted neighbour lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    neighbours: Vec<Vec<usize>>,
    edges: usize,
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        Adjacency {
            neighbours: vec![Vec::new(); n],
            edges: 0,
        }
    }

    /// Builds from an edge list. Self-loops and repeated pairs are ignored.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut builder = AdjacencyBuilder::new(n);
        for (i, j) in edges {
            builder.insert(i, j);
        }
        builder.finish()
    }

    pub fn node_count(&self) -> usize {
        self.neighbours.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbours[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbours.iter().map(Vec::len).collect()
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edges as f64 / self.node_count() as f64
    }

    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.neighbours[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbours[i].binary_search(&j).is_ok()
    }

    /// Edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbours
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn to_dense<T: Clone + Zero + One>(&self) -> Array2<T> {
        let n = self.node_count();
        let mut a = Array2::zeros((n, n));
        for (i, j) in self.edges() {
            a[[i, j]] = T::one();
            a[[j, i]] = T::one();
        }
        a
    }

    /// Edge present iff present in at least one of `layers`.
    pub fn union<'a>(n: usize, layers: impl IntoIterator<Item = &'a Adjacency>) -> Adjacency {
        let mut builder = AdjacencyBuilder::new(n);
        for layer in layers {
            for (i, j) in layer.edges() {
                builder.insert(i, j);
            }
        }
        builder.finish()
    }
}

/// Dense scratch representation used while a generator is running.
pub(crate) struct AdjacencyBuilder {
    n: usize,
    dense: Vec<bool>,
    neighbours: Vec<Vec<usize>>,
    edges: usize,
}

impl AdjacencyBuilder {
    pub(crate) fn new(n: usize) -> Self {
        AdjacencyBuilder {
            n,
            dense: vec![false; n * n],
            neighbours: vec![Vec::new(); n],
            edges: 0,
        }
    }

    pub(crate) fn contains(&self, i: usize, j: usize) -> bool {
        self.dense[i * self.n + j]
    }

    pub(crate) fn degree(&self, i: usize) -> usize {
        self.neighbours[i].len()
    }

    /// Returns false if the edge was a self-loop or already present.
    pub(crate) fn insert(&mut self, i: usize, j: usize) -> bool {
        if i == j || self.contains(i, j) {
            return false;
        }
        self.dense[i * self.n + j] = true;
        self.dense[j * self.n + i] = true;
        self.neighbours[i].push(j);
        self.neighbours[j].push(i);
        self.edges += 1;
        true
    }

    pub(crate) fn remove(&mut self, i: usize, j: usize) -> bool {
        if !self.contains(i, j) {
            return false;
        }
        self.dense[i * self.n + j] = false;
        self.dense[j * self.n + i] = false;
        self.neighbours[i].retain(|&x| x != j);
        self.neighbours[j].retain(|&x| x != i);
        self.edges -= 1;
        true
    }

    pub(crate) fn finish(mut self) -> Adjacency {
        for nb in &mut self.neighbours {
            nb.sort_unstable();
        }
        Adjacency {
            neighbours: self.neighbours,
            edges: self.edges,
        }
    }
}
