//! Weighted consensus graphs, their Laplacians, and spectral decompositions.
//!
//! Graphs are undirected with strictly positive trust weights and must be
//! connected. Indices are 0-based in memory and 1-based in the JSON file
//! format (`{"n": 3, "edges": [[1, 2, 1.0], [2, 3, 1.0]]}`).

use std::collections::{BTreeSet, VecDeque};
use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge with `i < j` (0-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

/// On-disk form: 1-based `[i, j, weight]` triples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl TryFrom<GraphFile> for WeightedGraph {
    type Error = Error;

    fn try_from(file: GraphFile) -> Result<Self> {
        let mut edges = Vec::with_capacity(file.edges.len());
        for &(i, j, w) in &file.edges {
            if i == 0 || j == 0 || i > file.n || j > file.n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) has an index outside 1..={}",
                    file.n
                )));
            }
            edges.push((i - 1, j - 1, w));
        }
        WeightedGraph::new(file.n, edges)
    }
}

impl From<WeightedGraph> for GraphFile {
    fn from(g: WeightedGraph) -> Self {
        GraphFile {
            n: g.n,
            edges: g.edges.iter().map(|e| (e.i + 1, e.j + 1, e.weight)).collect(),
        }
    }
}

impl WeightedGraph {
    /// Builds a graph from 0-based `(i, j, weight)` triples, rejecting
    /// self-loops, duplicate pairs, non-positive weights and disconnected
    /// topologies.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("agent count must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has an index outside 1..={n}",
                    a + 1,
                    b + 1
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on agent {}", a + 1)));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has non-positive weight {w}",
                    a + 1,
                    b + 1
                )));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((i, j)) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) appears more than once",
                    i + 1,
                    j + 1
                )));
            }
            out.push(Edge { i, j, weight: w });
        }
        let g = WeightedGraph { n, edges: out };
        let unreachable = g.unreachable_from_first();
        if !unreachable.is_empty() {
            return Err(Error::Disconnected {
                component: unreachable.into_iter().map(|k| k + 1).collect(),
            });
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Complete graph with unit weights.
    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0)));
        Self::new(n, edges)
    }

    /// Path `0 - 1 - ... - n-1` with unit weights.
    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|j| (j - 1, j, 1.0)))
    }

    fn unreachable_from_first(&self) -> Vec<usize> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        let mut visited = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        visited[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
        (0..self.n).filter(|&k| !visited[k]).collect()
    }
}

/// Weighted graph Laplacian `l_ii = sum_j a_ij`, `l_ij = -a_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    matrix: DMatrix<f64>,
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.matrix.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// `y = L x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * x[j]).sum())
            .collect()
    }
}

pub fn build_laplacian(g: &WeightedGraph) -> Laplacian {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    for e in g.edges() {
        m[(e.i, e.j)] = -e.weight;
        m[(e.j, e.i)] = -e.weight;
    }
    // Diagonal as the sum of the row's off-diagonal weights, so rows cancel exactly
    // up to a single rounding of that sum.
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)]).sum();
        m[(i, i)] = -off;
    }
    Laplacian { matrix: m }
}

/// A cluster of (numerically) equal eigenvalues and the column range of its
/// eigenvectors in [`SpectralDecomposition::vectors`].
#[derive(Debug, Clone, PartialEq)]
pub struct EigenGroup {
    pub rate: f64,
    pub indices: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
    zero_tol: f64,
    group_tol: f64,
    groups: Vec<EigenGroup>,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors, one per column, in eigenvalue order.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    pub fn group_tol(&self) -> f64 {
        self.group_tol
    }

    /// Distinct-eigenvalue groups in ascending rate order; the first group is
    /// the zero eigenvalue and carries `rate == 0.0` exactly.
    pub fn groups(&self) -> &[EigenGroup] {
        &self.groups
    }

    /// Algebraic connectivity `xi_2`.
    pub fn spectral_gap(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    /// `<Q_j, x>` for every eigenvector.
    pub fn coordinates(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n(), "vector length must match the graph");
        (0..self.n())
            .map(|j| self.vectors.column(j).iter().zip(x).map(|(q, v)| q * v).sum())
            .collect()
    }

    /// `<P_g a, b>` for each group, where `P_g` projects onto eigenspace `g`.
    pub fn group_cross_coefficients(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let ca = self.coordinates(a);
        let cb = self.coordinates(b);
        self.groups
            .iter()
            .map(|g| g.indices.clone().map(|j| ca[j] * cb[j]).sum())
            .collect()
    }

    /// `||P_g b||` for each group.
    pub fn group_projection_norms(&self, b: &[f64]) -> Vec<f64> {
        let cb = self.coordinates(b);
        self.groups
            .iter()
            .map(|g| g.indices.clone().map(|j| cb[j] * cb[j]).sum::<f64>().sqrt())
            .collect()
    }

    /// `Q diag(xi) Q^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues));
        &self.vectors * d * self.vectors.transpose()
    }
}

pub fn spectral_decompose(lap: &Laplacian) -> Result<SpectralDecomposition> {
    let n = lap.n();
    let eig = SymmetricEigen::new(lap.matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).clone_owned();
        // First entry that is not roundoff decides the sign.
        let scale = v.amax();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * scale.max(1e-300)) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        vectors.set_column(col, &v);
    }

    let top = eigenvalues.last().copied().unwrap_or(0.0);
    let zero_tol = 1e-9 * top.max(1.0);
    let group_tol = 1e-8 * top.max(1.0);

    if eigenvalues[0].abs() > zero_tol {
        return Err(Error::Numerical(format!(
            "smallest Laplacian eigenvalue {:e} is not zero within {zero_tol:e}",
            eigenvalues[0]
        )));
    }
    if n > 1 && eigenvalues[1] <= zero_tol {
        return Err(Error::NumericallyDisconnected {
            lambda2: eigenvalues[1],
            tol: zero_tol,
        });
    }

    // The null space of a connected Laplacian is exactly span(1).
    let c = 1.0 / (n as f64).sqrt();
    vectors.column_mut(0).fill(c);

    let mut groups = vec![EigenGroup {
        rate: 0.0,
        indices: 0..1,
    }];
    let mut start = 1;
    while start < n {
        let anchor = eigenvalues[start];
        let mut end = start + 1;
        while end < n && eigenvalues[end] - anchor <= group_tol {
            end += 1;
        }
        let rate = eigenvalues[start..end].iter().sum::<f64>() / (end - start) as f64;
        groups.push(EigenGroup {
            rate,
            indices: start..end,
        });
        start = end;
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        vectors,
        zero_tol,
        group_tol,
        groups,
    })
}

/// A connected random geometric graph and the seed that produced it.
#[derive(Debug, Clone)]
pub struct GeometricGraph {
    pub graph: WeightedGraph,
    pub positions: Vec<(f64, f64)>,
    pub requested_seed: u64,
    pub final_seed: u64,
}

pub const RGG_RETRY_CAP: usize = 1000;

/// Uniform points in the unit square, unit-weight edge iff distance <= radius.
/// Disconnected draws are retried with `seed + 1, seed + 2, ...`.
pub fn random_geometric_graph(n: usize, radius: f64, seed: u64) -> Result<GeometricGraph> {
    if n < 2 {
        return Err(Error::Contract(
            "random geometric graphs need at least 2 agents".into(),
        ));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Contract(format!("radius must be positive, got {radius}")));
    }
    for attempt in 0..RGG_RETRY_CAP {
        let s = seed.wrapping_add(attempt as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let positions: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
            .collect();
        let r2 = radius * radius;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let dx = positions[i].0 - positions[j].0;
                let dy = positions[i].1 - positions[j].1;
                if dx * dx + dy * dy <= r2 {
                    edges.push((i, j, 1.0));
                }
            }
        }
        match WeightedGraph::new(n, edges) {
            Ok(graph) => {
                return Ok(GeometricGraph {
                    graph,
                    positions,
                    requested_seed: seed,
                    final_seed: s,
                })
            }
            Err(Error::Disconnected { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetryCapExceeded {
        n,
        radius,
        attempts: RGG_RETRY_CAP,
    })
}
