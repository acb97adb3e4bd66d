use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Endpoint, ModelError, Topology};

/// Topology families. Every size counts *all* positions, gateway included,
/// so `Grid { rows: 4, cols: 4 }` has 15 ordinary nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologyKind {
    /// 4-neighbor lattice, positions numbered row-major.
    Grid {
        rows: usize,
        cols: usize,
    },
    Line(usize),
    Ring(usize),
    /// Erdos-Renyi: each unordered pair is linked with `edge_prob`.
    Random {
        n: usize,
        edge_prob: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GatewayPlacement {
    /// Position 0: the top-left grid corner, one end of a line.
    #[default]
    Corner,
    Index(usize),
}

impl TopologyKind {
    pub fn positions(&self) -> usize {
        match *self {
            TopologyKind::Grid { rows, cols } => rows * cols,
            TopologyKind::Line(n) | TopologyKind::Ring(n) => n,
            TopologyKind::Random { n, .. } => n,
        }
    }

    fn position_edges(&self) -> Result<Vec<(usize, usize)>, ModelError> {
        let mut edges = Vec::new();
        match *self {
            TopologyKind::Grid { rows, cols } => {
                if rows == 0 || cols == 0 {
                    return Err(ModelError::InvalidDimension(format!("grid {rows}x{cols}")));
                }
                for r in 0..rows {
                    for c in 0..cols {
                        let here = r * cols + c;
                        if c + 1 < cols {
                            edges.push((here, here + 1));
                        }
                        if r + 1 < rows {
                            edges.push((here, here + cols));
                        }
                    }
                }
            }
            TopologyKind::Line(n) => {
                if n == 0 {
                    return Err(ModelError::InvalidDimension("line of length 0".into()));
                }
                edges.extend((1..n).map(|i| (i - 1, i)));
            }
            TopologyKind::Ring(n) => {
                if n == 0 {
                    return Err(ModelError::InvalidDimension("ring of length 0".into()));
                }
                edges.extend((1..n).map(|i| (i - 1, i)));
                // A 2-ring would duplicate its only edge.
                if n > 2 {
                    edges.push((n - 1, 0));
                }
            }
            TopologyKind::Random { n, edge_prob, seed } => {
                if n == 0 {
                    return Err(ModelError::InvalidDimension(
                        "random graph of size 0".into(),
                    ));
                }
                if !(0.0..=1.0).contains(&edge_prob) {
                    return Err(ModelError::InvalidProbability(edge_prob));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for i in 0..n {
                    for j in i + 1..n {
                        if rng.gen_bool(edge_prob) {
                            edges.push((i, j));
                        }
                    }
                }
            }
        }
        Ok(edges)
    }
}

/// Lays out `kind` and relabels it so the gateway position becomes
/// [`Endpoint::Gateway`] and the remaining positions become ordinary nodes
/// `0..positions-1` in increasing position order.
pub fn generate_topology(
    kind: &TopologyKind,
    placement: GatewayPlacement,
) -> Result<Topology, ModelError> {
    let total = kind.positions();
    let edges = kind.position_edges()?;
    let gateway = match placement {
        GatewayPlacement::Corner => 0,
        GatewayPlacement::Index(i) => i,
    };
    if gateway >= total {
        return Err(ModelError::InvalidPlacement {
            index: gateway,
            total,
        });
    }
    let relabel = |p: usize| match p.cmp(&gateway) {
        std::cmp::Ordering::Less => Endpoint::Node(p),
        std::cmp::Ordering::Equal => Endpoint::Gateway,
        std::cmp::Ordering::Greater => Endpoint::Node(p - 1),
    };
    Topology::new(
        total - 1,
        edges.into_iter().map(|(u, v)| (relabel(u), relabel(v))),
    )
}
