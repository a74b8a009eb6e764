//! Plain-text multiplex edge list.
//!
//! ```text
//! multiplex v1 <N> <M>
//! <layer> <src> <dst> <weight>     one line per edge, src < dst
//! ...
//! delta <i> <j> <value>            one line per unordered pair, i < j
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Reals are written in
//! shortest round-trip form, so a write/read cycle is exact.

use std::io::{BufRead, Write};

use ndarray::Array2;

use super::{Adjacency, MultiplexNetwork};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &str = "multiplex";
pub const VERSION: &str = "v1";

pub fn write_network<T: Scalar, W: Write>(net: &MultiplexNetwork<T>, mut out: W) -> Result<()> {
    let n = net.node_count();
    writeln!(out, "{MAGIC} {VERSION} {n} {}", net.layer_count())?;
    for (alpha, layer) in net.layers.iter().enumerate() {
        for (i, j) in layer.adjacency.edges() {
            writeln!(out, "{alpha} {i} {j} {}", layer.weights[[i, j]])?;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            writeln!(out, "delta {i} {j} {}", net.delta[[i, j]])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_network<T: Scalar, R: BufRead>(input: R) -> Result<MultiplexNetwork<T>> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges: Vec<Vec<(usize, usize, T)>> = Vec::new();
    let mut delta: Option<Array2<T>> = None;

    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |reason: String| Error::Format { line: line_no, reason };
        let Some((n, m)) = header else {
            if fields.len() != 4 || fields[0] != MAGIC || fields[1] != VERSION {
                return Err(bad(format!("expected `{MAGIC} {VERSION} N M` header")));
            }
            let n = parse_index(fields[2], usize::MAX).map_err(bad)?;
            let m = parse_index(fields[3], usize::MAX).map_err(bad)?;
            if n < 2 || m < 1 {
                return Err(bad(format!("need N >= 2 and M >= 1, got N={n}, M={m}")));
            }
            header = Some((n, m));
            edges = vec![Vec::new(); m];
            delta = Some(Array2::zeros((n, n)));
            continue;
        };
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", fields.len())));
        }
        let i = parse_index(fields[1], n).map_err(bad)?;
        let j = parse_index(fields[2], n).map_err(bad)?;
        if i == j {
            return Err(bad("self-pair".into()));
        }
        let value: T = fields[3]
            .parse()
            .map_err(|_| bad(format!("cannot parse real `{}`", fields[3])))?;
        if !value.is_finite() || value < T::zero() {
            return Err(bad(format!("value must be finite and non-negative, got {}", fields[3])));
        }
        if fields[0] == "delta" {
            let d = delta.as_mut().expect("allocated with header");
            d[[i, j]] = value;
            d[[j, i]] = value;
        } else {
            let alpha = parse_index(fields[0], m).map_err(bad)?;
            edges[alpha].push((i, j, value));
        }
    }

    let Some((n, _)) = header else {
        return Err(Error::Format { line: 0, reason: "empty network file".into() });
    };
    let adjacencies = edges
        .iter()
        .map(|es| Adjacency::from_edges(n, es.iter().map(|&(i, j, _)| (i, j))))
        .collect();
    let mut net = MultiplexNetwork::from_parts(adjacencies, delta.expect("allocated with header"))?;
    for (layer, es) in net.layers.iter_mut().zip(&edges) {
        for &(i, j, w) in es {
            layer.weights[[i, j]] = w;
            layer.weights[[j, i]] = w;
        }
    }
    Ok(net)
}

fn parse_index(s: &str, bound: usize) -> std::result::Result<usize, String> {
    let v: usize = s.parse().map_err(|_| format!("cannot parse index `{s}`"))?;
    if v >= bound {
        return Err(format!("index {v} out of range (< {bound})"));
    }
    Ok(v)
}
