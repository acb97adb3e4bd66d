//! Network topology and the system matrices of the averaging update.
//!
//! Ordinary nodes are numbered `0..node_count`; the gateway is a separate
//! [`Endpoint::Gateway`] rather than a reserved index, so no code path can
//! confuse it with an ordinary node.

mod file;
mod generate;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::Scalar;

pub use file::{parse_topology, write_topology};
pub use generate::{generate_topology, GatewayPlacement, TopologyKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("topology must contain at least one ordinary node")]
    Empty,
    #[error("self-loop on {0}")]
    SelfLoop(Endpoint),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(Endpoint, Endpoint),
    #[error("edge endpoint {0} is out of range for {1} ordinary nodes")]
    InvalidEndpoint(Endpoint, usize),
    #[error("node {0} has no neighbors and can never update")]
    IsolatedNode(usize),
    #[error("gateway index {index} is out of range for {total} positions")]
    InvalidPlacement { index: usize, total: usize },
    #[error("invalid topology dimensions: {0}")]
    InvalidDimension(String),
    #[error("edge probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("topology file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One end of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Node(usize),
    Gateway,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Node(i) => write!(f, "{i}"),
            Endpoint::Gateway => f.write_str("gw"),
        }
    }
}

/// Undirected single-gateway network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    node_count: usize,
    /// Canonical `(low, high)` pairs in sorted order.
    edges: Vec<(Endpoint, Endpoint)>,
}

impl Topology {
    /// Validates and canonicalizes an edge list. Edge order in the input does
    /// not matter; `(a, b)` and `(b, a)` are the same edge.
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (Endpoint, Endpoint)>,
    ) -> Result<Self, ModelError> {
        if node_count == 0 {
            return Err(ModelError::Empty);
        }
        let mut seen = BTreeSet::new();
        for (u, v) in edges {
            for end in [u, v] {
                if let Endpoint::Node(i) = end {
                    if i >= node_count {
                        return Err(ModelError::InvalidEndpoint(end, node_count));
                    }
                }
            }
            if u == v {
                return Err(ModelError::SelfLoop(u));
            }
            let key = if u < v { (u, v) } else { (v, u) };
            if !seen.insert(key) {
                return Err(ModelError::DuplicateEdge(key.0, key.1));
            }
        }
        Ok(Self {
            node_count,
            edges: seen.into_iter().collect(),
        })
    }

    /// Number of ordinary (non-gateway) nodes.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(Endpoint, Endpoint)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbor set of every ordinary node, gateway included where linked.
    pub fn neighbors(&self) -> Vec<Vec<Endpoint>> {
        let mut out = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            if let Endpoint::Node(i) = u {
                out[i].push(v);
            }
            if let Endpoint::Node(j) = v {
                out[j].push(u);
            }
        }
        out
    }

    pub fn gateway_degree(&self) -> usize {
        self.edges
            .iter()
            .filter(|(_, v)| *v == Endpoint::Gateway)
            .count()
    }

    /// True iff every ordinary node is reachable from the gateway.
    pub fn has_spanning_path(&self) -> bool {
        let adjacency = self.neighbors();
        let mut reached = vec![false; self.node_count];
        let mut queue: VecDeque<usize> = self
            .edges
            .iter()
            .filter_map(|&(u, v)| match (u, v) {
                (Endpoint::Node(i), Endpoint::Gateway) => Some(i),
                _ => None,
            })
            .collect();
        for &i in &queue {
            reached[i] = true;
        }
        while let Some(i) = queue.pop_front() {
            for end in &adjacency[i] {
                if let Endpoint::Node(j) = *end {
                    if !reached[j] {
                        reached[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        reached.into_iter().all(|r| r)
    }
}

/// The `A` matrix and gateway input vector `b` of the update
/// `T(n+1) = A T(n) + b * delta_t * n`.
///
/// Each row of `[A | b]` is row-stochastic. A node linked to the gateway has
/// `b_i = 1/C_i` and `sum_j a_ij = 1 - b_i < 1`; every other node has a unit
/// row sum in `A` alone.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices<T> {
    n: usize,
    /// Row-major `n x n`.
    a: Vec<T>,
    b: Vec<T>,
}

impl<T: Scalar> SystemMatrices<T> {
    /// Builds from raw parts. `a` is row-major and must have `n * n` entries.
    pub fn from_parts(n: usize, a: Vec<T>, b: Vec<T>) -> Self {
        assert_eq!(a.len(), n * n, "A must be n x n");
        assert_eq!(b.len(), n, "b must have n entries");
        Self { n, a, b }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn a(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    pub fn a_row(&self, i: usize) -> &[T] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    /// `||a_i||_1 + b_i`.
    pub fn row_sum(&self, i: usize) -> T {
        self.a_row(i)
            .iter()
            .fold(self.b[i], |acc, &x| acc + x.abs())
    }

    /// `A x`.
    pub fn apply_a(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                self.a_row(i)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &x)| acc + a * x)
            })
            .collect()
    }
}

/// Applies the uniform `1/C_i` averaging rule to a topology.
pub fn build_matrices<T: Scalar>(topo: &Topology) -> Result<SystemMatrices<T>, ModelError> {
    assemble(
        topo.node_count(),
        topo.edges().iter().copied(),
        IsolatedPolicy::Reject,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IsolatedPolicy {
    Reject,
    /// Isolated nodes keep their value: `a_ii = 1`.
    Hold,
}

/// Shared by [`build_matrices`] and the per-round channel matrices so that a
/// full edge set yields bit-identical results through either path.
pub(crate) fn assemble<T: Scalar>(
    n: usize,
    edges: impl Iterator<Item = (Endpoint, Endpoint)> + Clone,
    isolated: IsolatedPolicy,
) -> Result<SystemMatrices<T>, ModelError> {
    let mut degree = vec![0usize; n];
    for (u, v) in edges.clone() {
        for end in [u, v] {
            if let Endpoint::Node(i) = end {
                degree[i] += 1;
            }
        }
    }
    let mut a = vec![T::zero(); n * n];
    let mut b = vec![T::zero(); n];
    for (i, &c) in degree.iter().enumerate() {
        if c == 0 {
            match isolated {
                IsolatedPolicy::Reject => return Err(ModelError::IsolatedNode(i)),
                IsolatedPolicy::Hold => a[i * n + i] = T::one(),
            }
        }
    }
    let weight = |i: usize| T::one() / T::of_usize(degree[i]);
    let mut link = |from: Endpoint, to: Endpoint| {
        if let Endpoint::Node(i) = from {
            match to {
                Endpoint::Node(j) => a[i * n + j] = weight(i),
                Endpoint::Gateway => b[i] = weight(i),
            }
        }
    };
    for (u, v) in edges {
        link(u, v);
        link(v, u);
    }
    Ok(SystemMatrices { n, a, b })
}
