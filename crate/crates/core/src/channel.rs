//! Per-round Bernoulli link availability.
//!
//! Each undirected edge is up with probability `p`, independently per round.
//! The draw for `(seed, round, edge)` is fixed: round `n` reads the ChaCha
//! stream `n` of the seed, one coin per edge in canonical edge order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{assemble, IsolatedPolicy, SystemMatrices, Topology};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    p: f64,
    seed: u64,
}

impl ChannelModel {
    /// `None` if `p` is outside `[0, 1]`.
    pub fn new(p: f64, seed: u64) -> Option<Self> {
        (0.0..=1.0).contains(&p).then_some(Self { p, seed })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_deterministic(&self) -> bool {
        self.p >= 1.0
    }
}

/// Availability of each edge of a topology, aligned with
/// [`Topology::edges`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMask(pub Vec<bool>);

impl EdgeMask {
    pub fn full(topo: &Topology) -> Self {
        Self(vec![true; topo.edge_count()])
    }

    pub fn available(&self) -> usize {
        self.0.iter().filter(|&&up| up).count()
    }
}

pub fn sample_mask(model: &ChannelModel, topo: &Topology, round: u64) -> EdgeMask {
    let m = topo.edge_count();
    if model.p >= 1.0 {
        return EdgeMask(vec![true; m]);
    }
    if model.p <= 0.0 {
        return EdgeMask(vec![false; m]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    rng.set_stream(round);
    EdgeMask((0..m).map(|_| rng.gen_bool(model.p)).collect())
}

/// Averaging matrices over the available edges only. A node with no
/// available neighbor this round keeps its clock (`a_ii = 1`).
pub fn effective_matrices<T: Scalar>(topo: &Topology, mask: &EdgeMask) -> SystemMatrices<T> {
    assert_eq!(
        mask.0.len(),
        topo.edge_count(),
        "mask does not match topology"
    );
    let edges = topo
        .edges()
        .iter()
        .zip(&mask.0)
        .filter(|(_, &up)| up)
        .map(|(&e, _)| e);
    assemble(topo.node_count(), edges, IsolatedPolicy::Hold)
        .expect("hold policy never rejects a node")
}
