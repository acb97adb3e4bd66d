//! Single-hop consensus time synchronization for randomly connected sensor
//! networks.
//!
//! Every ordinary node replaces its clock with the average of its neighbors'
//! clocks once per communication round; one neighbor may be the gateway,
//! whose clock is the exact ramp `delta_t * n`. The resulting linear system
//! converges to a fixed lag behind the gateway, but passes through a
//! transient dip where every node's error is far smaller than that lag. A
//! per-node FIR difference filter plus a polarity-change rule stops each node
//! near the dip.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the harness and CLI use.

pub mod channel;
pub mod cli;
pub mod detector;
pub mod dynamics;
pub mod harness;
pub mod model;
pub mod scalar;

pub use scalar::Scalar;

pub type SystemMatrices = model::SystemMatrices<f64>;
pub type ClockState = dynamics::ClockState<f64>;
pub type ErrorState = dynamics::ErrorState<f64>;
pub type SteadyStateResult = dynamics::SteadyStateResult<f64>;
pub type DetectorConfig = detector::DetectorConfig<f64>;
pub type DetectionEvent = detector::DetectionEvent<f64>;
pub type RunTrace = harness::RunTrace<f64>;
pub type NodeSummary = harness::NodeSummary<f64>;

pub type SystemMatrices32 = model::SystemMatrices<f32>;
pub type ClockState32 = dynamics::ClockState<f32>;
pub type RunTrace32 = harness::RunTrace<f32>;

pub use model::{Endpoint, Topology};
