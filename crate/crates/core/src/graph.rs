//! Undirected communication graphs, their Laplacians, spectra and Metropolis
//! mixing weights.
//!
//! All edges carry unit weight, so the Laplacian has integer entries and
//! `L x` is evaluated exactly from neighbour lists.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{sorted_symmetric_eigen, Stacked};

/// Relative threshold below which a Laplacian eigenvalue is treated as zero.
pub const ZERO_EIGEN_REL_TOL: f64 = 1e-9;

/// Edges of the 10-agent benchmark topology, 0-indexed.
pub const FIG1_EDGES: [(usize, usize); 11] = [
    (0, 1),
    (1, 2),
    (1, 3),
    (2, 3),
    (2, 6),
    (3, 4),
    (3, 5),
    (4, 5),
    (6, 7),
    (7, 8),
    (8, 9),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph needs at least one agent")]
    Empty,
    #[error("self-loop on agent {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0}, {1}) references an agent outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("unsupported topology {topology} with {n} agents")]
    Unsupported { topology: Topology, n: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph has no positive Laplacian eigenvalue (single agent)")]
    NoPositiveEigenvalue,
    #[error("edge list line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("edge probability must lie in [0, 1], got {0}")]
    BadProbability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Path,
    Ring,
    Star,
    Complete,
    Fig1,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Topology::Path => "path",
            Topology::Ring => "ring",
            Topology::Star => "star",
            Topology::Complete => "complete",
            Topology::Fig1 => "fig1",
        };
        f.write_str(s)
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "path" => Ok(Topology::Path),
            "ring" | "cycle" => Ok(Topology::Ring),
            "star" => Ok(Topology::Star),
            "complete" => Ok(Topology::Complete),
            "fig1" => Ok(Topology::Fig1),
            other => Err(format!("unknown topology '{other}'")),
        }
    }
}

/// Undirected simple graph on agents `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from unordered pairs. Rejects self-loops, duplicates
    /// (in either orientation) and out-of-range agents.
    pub fn new<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(GraphError::OutOfRange(i, j, n));
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            let key = (i.min(j), i.max(j));
            if !set.insert(key) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self { n, edges, neighbors })
    }

    pub fn named(topology: Topology, n: usize) -> Result<Self, GraphError> {
        let unsupported = || GraphError::Unsupported { topology, n };
        if n == 0 {
            return Err(unsupported());
        }
        match topology {
            Topology::Path => Self::new(n, (1..n).map(|i| (i - 1, i))),
            Topology::Ring => {
                if n < 3 {
                    return Err(unsupported());
                }
                Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
            }
            Topology::Star => Self::new(n, (1..n).map(|i| (0, i))),
            Topology::Complete => {
                Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
            }
            Topology::Fig1 => {
                if n != 10 {
                    return Err(unsupported());
                }
                Self::new(10, FIG1_EDGES)
            }
        }
    }

    /// Random connected graph: a uniform spanning tree (Aldous-Broder walk)
    /// plus every remaining pair independently with probability `q`.
    pub fn random_connected(n: usize, q: f64, seed: u64) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(GraphError::BadProbability(q));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut visited = vec![false; n];
        let mut current = rng.random_range(0..n);
        visited[current] = true;
        let mut remaining = n - 1;
        let mut edges = BTreeSet::new();
        while remaining > 0 {
            let next = rng.random_range(0..n);
            if next == current {
                continue;
            }
            if !visited[next] {
                visited[next] = true;
                remaining -= 1;
                edges.insert((current.min(next), current.max(next)));
            }
            current = next;
        }
        for i in 0..n {
            for j in i + 1..n {
                if !edges.contains(&(i, j)) && rng.random::<f64>() < q {
                    edges.insert((i, j));
                }
            }
        }
        Self::new(n, edges)
    }

    /// Parses one `i j` pair per line (0-indexed). Blank lines and `#`
    /// comments are ignored. The agent count is `n` when given, otherwise the
    /// largest index plus one.
    pub fn from_edge_list(text: &str, n: Option<usize>) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |reason: String| GraphError::Parse { line: lineno + 1, reason };
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize, GraphError> {
                let tok = parts.next().ok_or_else(|| parse_err("expected two indices".into()))?;
                tok.parse::<usize>().map_err(|e| parse_err(format!("'{tok}': {e}")))
            };
            let (i, j) = (next()?, next()?);
            if parts.next().is_some() {
                return Err(parse_err("trailing tokens".into()));
            }
            edges.push((i, j));
        }
        let inferred = edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
        Self::new(n.unwrap_or(inferred), edges)
    }

    pub fn to_edge_list(&self) -> String {
        self.edges.iter().map(|(i, j)| format!("{i} {j}\n")).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Breadth-first reachability from agent 0.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &self.neighbors[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.n
    }

    pub fn laplacian(&self) -> Laplacian {
        Laplacian::new(self)
    }

    pub fn spectrum(&self) -> Result<LaplacianSpectrum, GraphError> {
        spectrum(self)
    }

    pub fn metropolis_weights(&self) -> Result<MixingMatrix, GraphError> {
        metropolis_weights(self)
    }
}

/// Unit-weight Laplacian `L = D - A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Laplacian {
    n: usize,
    entries: Vec<i64>,
    neighbors: Vec<Vec<usize>>,
}

impl Laplacian {
    pub fn new(g: &Graph) -> Self {
        let n = g.n();
        let mut entries = vec![0i64; n * n];
        for i in 0..n {
            entries[i * n + i] = g.degree(i) as i64;
            for &j in g.neighbors(i) {
                entries[i * n + j] = -1;
            }
        }
        Self { n, entries, neighbors: g.neighbors.clone() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j) as f64)
    }

    /// `out = L x`, row `i` being `Σ_j L_ij x_j`.
    pub fn apply(&self, x: &Stacked, out: &mut Stacked) {
        debug_assert_eq!(x.rows(), self.n);
        let p = x.cols();
        for i in 0..self.n {
            let deg = self.neighbors[i].len() as f64;
            let xi = x.row(i);
            let oi = out.row_mut(i);
            for c in 0..p {
                oi[c] = deg * xi[c];
            }
            for &j in &self.neighbors[i] {
                let xj = x.row(j);
                for c in 0..p {
                    oi[c] -= xj[c];
                }
            }
        }
    }

    /// Quadratic form `Σ_c x[:,c]ᵀ L x[:,c]`, evaluated edge-wise.
    pub fn quadratic_form(&self, x: &Stacked) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for &j in &self.neighbors[i] {
                if j > i {
                    acc += x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                }
            }
        }
        acc
    }
}

/// Spectral summary of a Laplacian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacianSpectrum {
    /// Largest eigenvalue ρ(L).
    pub rho: f64,
    /// Smallest positive eigenvalue ρ₂(L).
    pub rho2: f64,
    /// Spectral radius of L², from an independent eigensolve of `L·L`.
    pub rho_l2: f64,
    /// All eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
}

/// Eigen-decomposes the Laplacian. Fails for disconnected graphs (checked by
/// BFS, not by the spectral gap) and for single-agent graphs.
pub fn spectrum(g: &Graph) -> Result<LaplacianSpectrum, GraphError> {
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    let l = g.laplacian().to_dmatrix();
    let (eigenvalues, _) = sorted_symmetric_eigen(l.clone());
    let rho = *eigenvalues.last().expect("non-empty graph");
    let rho2 = eigenvalues
        .iter()
        .copied()
        .find(|&e| e > ZERO_EIGEN_REL_TOL * rho)
        .ok_or(GraphError::NoPositiveEigenvalue)?;
    let (sq, _) = sorted_symmetric_eigen(&l * &l);
    let rho_l2 = *sq.last().expect("non-empty graph");
    Ok(LaplacianSpectrum { rho, rho2, rho_l2, eigenvalues })
}

/// Symmetric doubly-stochastic mixing matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    n: usize,
    w: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
}

impl MixingMatrix {
    /// Uniform averaging `W = (1/n) 1 1ᵀ` (complete-graph exact averaging).
    pub fn uniform(n: usize) -> Self {
        let neighbors = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
        Self { n, w: vec![1.0 / n as f64; n * n], neighbors }
    }

    pub fn identity(n: usize) -> Self {
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = 1.0;
        }
        Self { n, w, neighbors: vec![Vec::new(); n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// `out = W x`.
    pub fn apply(&self, x: &Stacked, out: &mut Stacked) {
        let p = x.cols();
        for i in 0..self.n {
            let wii = self.get(i, i);
            let xi = x.row(i);
            let oi = out.row_mut(i);
            for c in 0..p {
                oi[c] = wii * xi[c];
            }
            for &j in &self.neighbors[i] {
                let wij = self.w[i * self.n + j];
                let xj = x.row(j);
                for c in 0..p {
                    oi[c] += wij * xj[c];
                }
            }
        }
    }
}

/// Metropolis weights: `w_ij = 1/(1 + max(d_i, d_j))` on edges, the diagonal
/// absorbing the remainder of each row.
pub fn metropolis_weights(g: &Graph) -> Result<MixingMatrix, GraphError> {
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    let n = g.n();
    let mut w = vec![0.0; n * n];
    for &(i, j) in g.edges() {
        let val = 1.0 / (1.0 + g.degree(i).max(g.degree(j)) as f64);
        w[i * n + j] = val;
        w[j * n + i] = val;
    }
    for i in 0..n {
        let off: f64 = g.neighbors(i).iter().map(|&j| w[i * n + j]).sum();
        w[i * n + i] = 1.0 - off;
    }
    Ok(MixingMatrix { n, w, neighbors: g.neighbors.clone() })
}
