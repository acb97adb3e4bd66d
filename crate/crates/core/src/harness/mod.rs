//! Experiment runner: evolves a network, runs one detector per node, and
//! reduces the trace to per-node dip metrics and size sweeps.

mod config;
mod csv;
mod summary;
mod sweep;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channel::{effective_matrices, sample_mask, ChannelModel, EdgeMask};
use crate::detector::{DetectionEvent, OnlineDetector};
use crate::dynamics::{self, ClockState, DynamicsError};
use crate::model::{build_matrices, Endpoint, ModelError, SystemMatrices};
use crate::Scalar;

pub use config::{SimConfig, TopologySpec};
pub use csv::{write_summary_csv, write_sweep_csv, write_trace_csv};
pub use summary::{summarize, NodeSummary};
pub use sweep::{fit_line, scaling_sweep, LinearFit, SweepPoint, SweepReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Stream of the run seed reserved for initial clocks; channel rounds use
/// streams `0..=n_max`.
const INIT_STREAM: u64 = u64::MAX;

/// Full record of one run. All series are indexed by node, then round
/// `0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<T> {
    pub config: SimConfig,
    pub n_max: u64,
    pub clocks: Vec<Vec<T>>,
    pub errors: Vec<Vec<T>>,
    /// `filter[i][m]` is `y(m)`, defined for `3 <= m <= n_max - 3`.
    pub filter: Vec<Vec<Option<T>>>,
    pub detections: Vec<Option<DetectionEvent<T>>>,
    /// Whether every node can reach the gateway over the full edge set.
    pub connected: bool,
    pub warnings: Vec<String>,
}

impl<T: Scalar> RunTrace<T> {
    pub fn node_count(&self) -> usize {
        self.clocks.len()
    }
}

fn initial_clocks<T: Scalar>(cfg: &SimConfig, n: usize) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(INIT_STREAM);
    let (lo, hi) = (cfg.init_min, cfg.init_max());
    (0..n)
        .map(|_| T::of(if hi > lo { rng.gen_range(lo..=hi) } else { lo }))
        .collect()
}

/// Runs `cfg` to `n_max`. Detecting nodes record their freeze point and, unless
/// `halt_on_detect` is set, keep averaging so the steady state is observed.
pub fn run<T: Scalar>(cfg: &SimConfig) -> Result<RunTrace<T>, HarnessError> {
    cfg.validate()?;
    let topo = cfg.topology.resolve(cfg.gateway, cfg.seed)?;
    let n = topo.node_count();
    let connected = topo.has_spanning_path();
    let mut warnings = Vec::new();
    if !connected {
        warnings
            .push("topology has no spanning path from the gateway; errors will not settle".into());
    }

    let channel = ChannelModel::new(cfg.p, cfg.seed)
        .ok_or_else(|| HarnessError::ConfigInvalid(format!("p = {}", cfg.p)))?;
    let static_mats: Option<SystemMatrices<T>> = if channel.is_deterministic() {
        Some(build_matrices(&topo)?)
    } else {
        None
    };
    let detector_cfg = cfg.detector::<T>()?;
    let delta_t = T::of(cfg.delta_t);
    let n_max = cfg.rounds;
    let len = n_max as usize + 1;

    let mut state = ClockState::new(initial_clocks(cfg, n), delta_t)?;
    let mut clocks = vec![Vec::with_capacity(len); n];
    let mut errors = vec![Vec::with_capacity(len); n];
    let mut filter = vec![vec![None; len]; n];
    let mut detections: Vec<Option<DetectionEvent<T>>> = vec![None; n];
    let mut detectors: Vec<_> = (0..n).map(|_| OnlineDetector::new(detector_cfg)).collect();
    let mut halted = vec![false; n];

    loop {
        let round = state.round;
        let err = dynamics::error_of(&state);
        for i in 0..n {
            let clock = state.times[i];
            clocks[i].push(clock);
            errors[i].push(err.errors[i]);
            let x = cfg.filter_input.sample(clock, round, delta_t);
            let step = detectors[i].push(x);
            if let Some((m, y)) = step.output {
                filter[i][m as usize] = Some(y);
            }
            if let Some(flip) = step.flip {
                detections[i] = Some(flip.into_event(i, clock));
                if cfg.halt_on_detect {
                    halted[i] = true;
                }
            }
        }
        if round == n_max {
            break;
        }

        let any_halted = halted.iter().any(|&h| h);
        let round_mats;
        let mats = match &static_mats {
            Some(m) if !any_halted => m,
            _ => {
                let mut mask = match &static_mats {
                    Some(_) => EdgeMask::full(&topo),
                    None => sample_mask(&channel, &topo, round),
                };
                if any_halted {
                    let silent = |e: Endpoint| matches!(e, Endpoint::Node(i) if halted[i]);
                    for (up, &(u, v)) in mask.0.iter_mut().zip(topo.edges()) {
                        if silent(u) || silent(v) {
                            *up = false;
                        }
                    }
                }
                round_mats = effective_matrices(&topo, &mask);
                &round_mats
            }
        };
        let mut next = dynamics::step(&state, mats)?;
        for (i, _) in halted.iter().enumerate().filter(|(_, &h)| h) {
            next.times[i] = state.times[i] + delta_t;
        }
        state = next;
    }

    Ok(RunTrace {
        config: cfg.clone(),
        n_max,
        clocks,
        errors,
        filter,
        detections,
        connected,
        warnings,
    })
}
