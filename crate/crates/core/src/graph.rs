//! Undirected communication topology.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Undirected simple graph over agents `0..n`.
///
/// Directed pairs `(i, j)` are enumerated lexicographically; since every
/// neighbor list is sorted, the pairs owned by receiver `i` are contiguous
/// and `pair_offset(i) + slot` indexes the pair for the `slot`-th neighbor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    offsets: Vec<usize>,
}

impl NetworkGraph {
    /// Builds a graph from unordered pairs. Self-loops and out-of-range
    /// endpoints are rejected, duplicates (in either orientation) collapse.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one agent".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop at agent {a}")));
            }
            for v in [a, b] {
                if v >= n {
                    return Err(Error::AgentOutOfRange { index: v, n });
                }
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for list in &neighbors {
            offsets.push(acc);
            acc += list.len();
        }
        offsets.push(acc);
        Ok(Self {
            n,
            edges,
            neighbors,
            offsets,
        })
    }

    /// G(n, p): each unordered pair `{i, j}`, `i < j`, visited in
    /// lexicographic order and kept with probability `p_edge`.
    pub fn erdos_renyi(n: usize, p_edge: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "Erdos-Renyi graph needs n >= 2, got {n}"
            )));
        }
        if !(0.0..=1.0).contains(&p_edge) {
            return Err(Error::InvalidArgument(format!(
                "edge probability {p_edge} outside [0, 1]"
            )));
        }
        let mut rng = stream_rng(seed, Stream::Graph);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p_edge {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn num_agents(&self) -> usize {
        self.n
    }

    /// Undirected edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of directed pairs, `m = 2 |E|`.
    pub fn num_directed_pairs(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        self.neighbors
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::AgentOutOfRange { index: i, n: self.n })
    }

    /// Unchecked variant for hot loops over known-valid indices.
    pub(crate) fn neighbors_of(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn directed_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::with_capacity(self.num_directed_pairs());
        for (i, list) in self.neighbors.iter().enumerate() {
            pairs.extend(list.iter().map(|&j| (i, j)));
        }
        pairs
    }

    /// Index of directed pair `(i, j)` in [`directed_pairs`](Self::directed_pairs).
    pub fn pair_index(&self, i: usize, j: usize) -> Option<usize> {
        let slot = self.neighbors.get(i)?.binary_search(&j).ok()?;
        Some(self.offsets[i] + slot)
    }

    pub(crate) fn pair_offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    /// Index of the undirected edge `{i, j}` in [`edges`](Self::edges).
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i.min(j), i.max(j))).ok()
    }

    /// Text edge list: header `n=<count>`, then one `i j` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for (a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidArgument(format!("edge list: {msg}"));
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
        let n: usize = header
            .strip_prefix("n=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(format!("expected header `n=<count>`, got `{header}`")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => edges.push((a, b)),
                _ => return Err(bad(format!("malformed line `{line}`"))),
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}
