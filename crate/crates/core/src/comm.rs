//! Supra-matrix of the multiplex, its communicability (matrix exponential),
//! and the inter-layer scaling factor built on it.

use std::io::Write;

use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::games::StrategyTable;
use crate::netgen::MultiplexNetwork;
use crate::scalar::Scalar;

/// `NM × NM` block matrix: `Z_α` on the diagonal blocks, `ω I` off the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SupraMatrix<T> {
    pub nodes: usize,
    pub layers: usize,
    pub matrix: Array2<T>,
}

/// `G = exp(𝔐)`; block `(α, β)` holds the communicability between node `i`
/// on layer `α` and node `j` on layer `β`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommunicabilityMatrix<T> {
    pub nodes: usize,
    pub layers: usize,
    pub g: Array2<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaBounds<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> EtaBounds<T> {
    pub fn new(min: T, max: T) -> Result<Self> {
        if !(min > T::zero() && min <= max && max <= T::one()) {
            return Err(Error::param("eta", format!("need 0 < eta_min <= eta_max <= 1, got ({min}, {max})")));
        }
        Ok(EtaBounds { min, max })
    }

    pub fn span(&self) -> T {
        self.max - self.min
    }
}

impl<T: Scalar> Default for EtaBounds<T> {
    fn default() -> Self {
        EtaBounds {
            min: T::lit(0.5),
            max: T::one(),
        }
    }
}

pub fn build_supra<T: Scalar>(net: &MultiplexNetwork<T>, omega: T) -> Result<SupraMatrix<T>> {
    if !(omega >= T::zero()) || !omega.is_finite() {
        return Err(Error::param("omega", "inter-layer strength must be finite and non-negative"));
    }
    let n = net.node_count();
    let m = net.layer_count();
    let mut matrix = Array2::zeros((n * m, n * m));
    for (alpha, layer) in net.layers.iter().enumerate() {
        matrix
            .slice_mut(s![alpha * n..(alpha + 1) * n, alpha * n..(alpha + 1) * n])
            .assign(&layer.z);
        for beta in 0..m {
            if beta != alpha {
                for i in 0..n {
                    matrix[[alpha * n + i, beta * n + i]] = omega;
                }
            }
        }
    }
    Ok(SupraMatrix { nodes: n, layers: m, matrix })
}

fn norm1<T: Scalar>(a: &Array2<T>) -> T {
    a.columns()
        .into_iter()
        .map(|c| c.iter().fold(T::zero(), |acc, &x| acc + x.abs()))
        .fold(T::zero(), T::max)
}

/// Matrix exponential by scaling and squaring.
///
/// The argument is scaled by `2^-s` until its 1-norm is at most 1/2, the
/// Taylor series is summed until a term no longer changes the partial sum
/// at working precision, and the result is squared `s` times.
pub fn expm<T: Scalar>(a: &Array2<T>) -> Result<Array2<T>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Numeric("matrix exponential needs a square matrix".into()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let n = a.nrows();
    let norm = norm1(a);
    let half = T::lit(0.5);
    let mut squarings = 0u32;
    let mut scale = T::one();
    while norm * scale > half {
        scale = scale * half;
        squarings += 1;
    }
    let scaled = a * scale;

    let mut sum = Array2::<T>::eye(n);
    let mut term = Array2::<T>::eye(n);
    for k in 1..=60 {
        term = term.dot(&scaled) / T::from_count(k);
        sum.scaled_add(T::one(), &term);
        if norm1(&term) <= T::epsilon() * norm1(&sum) * T::lit(0.5) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    if sum.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("matrix exponential overflowed".into()));
    }
    Ok(sum)
}

pub fn matrix_exp<T: Scalar>(supra: &SupraMatrix<T>) -> Result<CommunicabilityMatrix<T>> {
    Ok(CommunicabilityMatrix {
        nodes: supra.nodes,
        layers: supra.layers,
        g: expm(&supra.matrix)?,
    })
}

/// Supra-matrix and exponential in one step.
pub fn communicability<T: Scalar>(net: &MultiplexNetwork<T>, omega: T) -> Result<CommunicabilityMatrix<T>> {
    matrix_exp(&build_supra(net, omega)?)
}

impl<T: Scalar> CommunicabilityMatrix<T> {
    #[inline]
    pub fn entry(&self, alpha: usize, i: usize, beta: usize, j: usize) -> T {
        self.g[[alpha * self.nodes + i, beta * self.nodes + j]]
    }

    pub fn block(&self, alpha: usize, beta: usize) -> ArrayView2<'_, T> {
        let n = self.nodes;
        self.g.slice(s![alpha * n..(alpha + 1) * n, beta * n..(beta + 1) * n])
    }

    /// Dense CSV dump, row-major, 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for row in self.g.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    out.write_all(b",")?;
                }
                first = false;
                write!(out, "{v:.16e}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Communicability mass between `(i, α)` and its cross-layer neighbourhood:
/// `(same-strategy part, total)`. On every layer `β ≠ α` the neighbourhood
/// is `i`'s counterpart plus the counterpart's neighbours on `β`.
pub fn cross_layer_agreement<T: Scalar>(
    i: usize,
    alpha: usize,
    comm: &CommunicabilityMatrix<T>,
    strategies: &StrategyTable,
    net: &MultiplexNetwork<T>,
) -> (T, T) {
    let own = strategies.get(i, alpha);
    let row = comm.g.row(alpha * comm.nodes + i);
    let mut same = T::zero();
    let mut total = T::zero();
    for (beta, layer) in net.layers.iter().enumerate() {
        if beta == alpha {
            continue;
        }
        let base = beta * comm.nodes;
        for &j in std::iter::once(&i).chain(layer.adjacency.neighbours(i)) {
            let g = row[base + j];
            total = total + g;
            if strategies.get(j, beta) == own {
                same = same + g;
            }
        }
    }
    (same, total)
}

/// `η = 1 - (η_max - η_min) · f`, with `f` the linear interpolation of the
/// same-strategy communicability fraction. Zero total weight gives 1.
#[inline]
pub fn eta_from_fraction<T: Scalar>(same: T, total: T, bounds: &EtaBounds<T>) -> T {
    if total <= T::zero() {
        return T::one();
    }
    T::one() - bounds.span() * (same / total)
}

pub fn eta<T: Scalar>(
    i: usize,
    alpha: usize,
    comm: &CommunicabilityMatrix<T>,
    strategies: &StrategyTable,
    net: &MultiplexNetwork<T>,
    bounds: &EtaBounds<T>,
) -> T {
    let (same, total) = cross_layer_agreement(i, alpha, comm, strategies, net);
    eta_from_fraction(same, total, bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::Strategy::{Cooperate, Defect};
    use crate::netgen::Adjacency;
    use ndarray::array;

    fn net_from(layers: Vec<Adjacency>, n: usize) -> MultiplexNetwork<f64> {
        MultiplexNetwork::from_parts(layers, Array2::zeros((n, n))).unwrap()
    }

    fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        (a - b).iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn pure_coupling_supra() {
        let net = net_from(vec![Adjacency::empty(2), Adjacency::empty(2)], 2);
        let s = build_supra(&net, 1.0).unwrap();
        let expect = array![[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]];
        assert_eq!(s.matrix, expect);
    }

    #[test]
    fn zero_coupling_is_block_diagonal() {
        let a = Adjacency::from_edges(3, [(0, 1)]);
        let b = Adjacency::from_edges(3, [(1, 2)]);
        let net = net_from(vec![a, b], 3);
        let s = build_supra(&net, 0.0).unwrap();
        assert_eq!(s.matrix.slice(s![0..3, 0..3]), net.layer(0).z);
        assert_eq!(s.matrix.slice(s![3..6, 3..6]), net.layer(1).z);
        assert!(s.matrix.slice(s![0..3, 3..6]).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn one_edge_per_layer_row_sums() {
        let e = Adjacency::from_edges(2, [(0, 1)]);
        let net = net_from(vec![e.clone(), e], 2);
        let s = build_supra(&net, 1.0).unwrap();
        for row in s.matrix.rows() {
            assert_eq!(row.sum(), 2.0);
        }
    }

    #[test]
    fn negative_omega_rejected() {
        let net = net_from(vec![Adjacency::empty(2)], 2);
        assert!(build_supra(&net, -1.0).is_err());
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(expm(&Array2::<f64>::zeros((4, 4))).unwrap(), Array2::eye(4));
    }

    #[test]
    fn exp_of_diagonal() {
        let g = expm(&array![[1.5, 0.0], [0.0, -2.0]]).unwrap();
        assert!((g[[0, 0]] - 1.5f64.exp()).abs() < 1e-13);
        assert!((g[[1, 1]] - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(g[[0, 1]], 0.0);
    }

    #[test]
    fn exp_of_swap_is_cosh_sinh() {
        let g = expm(&array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let (c, s) = (1.0f64.cosh(), 1.0f64.sinh());
        assert!(max_abs_diff(&g, &array![[c, s], [s, c]]) < 1e-14);
        assert!((g[[0, 0]] - 1.5431).abs() < 1e-4 && (g[[0, 1]] - 1.1752).abs() < 1e-4);
    }

    #[test]
    fn exp_rejects_non_finite() {
        assert!(matches!(expm(&array![[f64::NAN]]), Err(Error::Numeric(_))));
        assert!(expm(&Array2::<f64>::zeros((2, 3))).is_err());
    }

    #[test]
    fn exp_large_norm_against_eigen_closed_form() {
        // [[a, b], [b, a]] has eigenvectors (1, ±1): exp = e^a [[cosh b, sinh b], [sinh b, cosh b]].
        let (a, b) = (3.0f64, 5.0f64);
        let g = expm(&array![[a, b], [b, a]]).unwrap();
        let expect = array![[b.cosh(), b.sinh()], [b.sinh(), b.cosh()]] * a.exp();
        let rel = max_abs_diff(&g, &expect) / expect[[0, 0]];
        assert!(rel < 1e-13, "relative error {rel}");
    }

    #[test]
    fn single_precision_exp() {
        let g = expm(&array![[0.0f32, 1.0], [1.0, 0.0]]).unwrap();
        assert!((g[[0, 1]] - 1.0f32.sinh()).abs() < 1e-6);
    }

    #[test]
    fn eta_examples() {
        // Layer 0: edge 0-1. Layer 1: edge 0-1. Node 0 on layer 0 sees
        // counterpart 0 and neighbour 1 on layer 1.
        let e = Adjacency::from_edges(2, [(0, 1)]);
        let net = net_from(vec![e.clone(), e], 2);
        let comm = communicability(&net, 1.0).unwrap();
        let bounds = EtaBounds::new(0.5, 1.0).unwrap();

        let all_same = StrategyTable::filled(2, 2, Cooperate);
        assert!((eta(0, 0, &comm, &all_same, &net, &bounds) - 0.5).abs() < 1e-15);

        let none = StrategyTable::from_fn(2, 2, |_, a| if a == 0 { Cooperate } else { Defect });
        assert_eq!(eta(0, 0, &comm, &none, &net, &bounds), 1.0);

        assert_eq!(eta_from_fraction(1.0, 2.0, &bounds), 0.75);
        assert_eq!(eta_from_fraction(0.0, 0.0, &bounds), 1.0);
    }

    #[test]
    fn eta_single_layer_is_neutral() {
        let net = net_from(vec![Adjacency::from_edges(3, [(0, 1)])], 3);
        let comm = communicability(&net, 1.0).unwrap();
        let st = StrategyTable::filled(3, 1, Cooperate);
        assert_eq!(eta(0, 0, &comm, &st, &net, &EtaBounds::default()), 1.0);
    }

    #[test]
    fn eta_bounds_validation() {
        assert!(EtaBounds::new(0.0, 1.0).is_err());
        assert!(EtaBounds::new(0.8, 0.5).is_err());
        assert!(EtaBounds::new(0.5, 1.1).is_err());
        assert!(EtaBounds::new(0.5, 0.5).is_ok());
    }

    #[test]
    fn block_accessor_matches_entry() {
        let e = Adjacency::from_edges(3, [(0, 1), (1, 2)]);
        let net = net_from(vec![e.clone(), e], 3);
        let comm = communicability(&net, 0.5).unwrap();
        let b = comm.block(1, 0);
        assert_eq!(b[[2, 1]], comm.entry(1, 2, 0, 1));
    }

    #[test]
    fn csv_dump_shape() {
        let net = net_from(vec![Adjacency::from_edges(2, [(0, 1)]); 2], 2);
        let comm = communicability(&net, 1.0).unwrap();
        let mut buf = Vec::new();
        comm.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        let first: Vec<f64> = text.lines().next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first.len(), 4);
        assert_eq!(first[0], comm.g[[0, 0]]);
    }
}
