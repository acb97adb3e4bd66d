use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::detector::{DetectorConfig, FilterInput, DEFAULT_GAIN, DEFAULT_K_GUARD};
use crate::model::{self, generate_topology, GatewayPlacement, Topology, TopologyKind};
use crate::Scalar;

use super::HarnessError;

/// Topology argument as written on the command line. Sizes count every
/// position including the gateway; `random` draws its edges from the run
/// seed.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    Grid { rows: usize, cols: usize },
    Line(usize),
    Ring(usize),
    Random { n: usize, edge_prob: f64 },
    File(PathBuf),
}

impl TopologySpec {
    pub fn resolve(&self, gateway: GatewayPlacement, seed: u64) -> Result<Topology, HarnessError> {
        let kind = match *self {
            TopologySpec::Grid { rows, cols } => TopologyKind::Grid { rows, cols },
            TopologySpec::Line(n) => TopologyKind::Line(n),
            TopologySpec::Ring(n) => TopologyKind::Ring(n),
            TopologySpec::Random { n, edge_prob } => TopologyKind::Random {
                n,
                edge_prob,
                seed: topology_seed(seed),
            },
            TopologySpec::File(ref path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    HarnessError::ConfigInvalid(format!("cannot read {}: {e}", path.display()))
                })?;
                return Ok(model::parse_topology(&text)?);
            }
        };
        Ok(generate_topology(&kind, gateway)?)
    }
}

/// Keeps the topology draw independent of the channel streams, which use the
/// raw seed.
fn topology_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::Grid { rows, cols } => write!(f, "grid:{rows}x{cols}"),
            TopologySpec::Line(n) => write!(f, "line:{n}"),
            TopologySpec::Ring(n) => write!(f, "ring:{n}"),
            TopologySpec::Random { n, edge_prob } => write!(f, "random:{n}:{edge_prob}"),
            TopologySpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for TopologySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad =
            || format!("bad topology `{s}` (expected grid:RxC|line:N|ring:N|random:N:P|file:PATH)");
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let num = |v: &str| v.parse::<usize>().map_err(|_| bad());
        match kind {
            "grid" => {
                let (r, c) = rest.split_once('x').ok_or_else(bad)?;
                Ok(TopologySpec::Grid {
                    rows: num(r)?,
                    cols: num(c)?,
                })
            }
            "line" => Ok(TopologySpec::Line(num(rest)?)),
            "ring" => Ok(TopologySpec::Ring(num(rest)?)),
            "random" => {
                let (n, p) = rest.split_once(':').ok_or_else(bad)?;
                Ok(TopologySpec::Random {
                    n: num(n)?,
                    edge_prob: p.parse().map_err(|_| bad())?,
                })
            }
            "file" if !rest.is_empty() => Ok(TopologySpec::File(PathBuf::from(rest))),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for GatewayPlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GatewayPlacement::Corner => f.write_str("corner"),
            GatewayPlacement::Index(i) => write!(f, "{i}"),
        }
    }
}

impl FromStr for GatewayPlacement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "corner" {
            return Ok(GatewayPlacement::Corner);
        }
        s.parse()
            .map(GatewayPlacement::Index)
            .map_err(|_| format!("bad gateway `{s}` (expected an index or `corner`)"))
    }
}

/// Everything that determines a run. Two equal configs give bit-identical
/// traces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub topology: TopologySpec,
    pub gateway: GatewayPlacement,
    /// Communication period in seconds.
    pub delta_t: f64,
    /// Last simulated round `n_max`.
    pub rounds: u64,
    /// Per-round link availability.
    pub p: f64,
    pub seed: u64,
    /// Initial clocks are uniform in `[init_min, init_max]` seconds.
    pub init_min: f64,
    /// `None` means `100 * delta_t`.
    pub init_max: Option<f64>,
    pub c_f: f64,
    pub k_guard: usize,
    pub filter_input: FilterInput,
    /// Detecting nodes stop exchanging messages and free-run their clocks.
    pub halt_on_detect: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            topology: TopologySpec::Grid { rows: 4, cols: 4 },
            gateway: GatewayPlacement::Corner,
            delta_t: 0.001,
            rounds: 500,
            p: 1.0,
            seed: 0,
            init_min: 0.0,
            init_max: None,
            c_f: DEFAULT_GAIN,
            k_guard: DEFAULT_K_GUARD,
            filter_input: FilterInput::Clock,
            halt_on_detect: false,
        }
    }
}

impl SimConfig {
    pub fn init_max(&self) -> f64 {
        self.init_max.unwrap_or(100.0 * self.delta_t)
    }

    pub fn detector<T: Scalar>(&self) -> Result<DetectorConfig<T>, HarnessError> {
        DetectorConfig::new(T::of(self.c_f), self.k_guard)
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |m: String| Err(HarnessError::ConfigInvalid(m));
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return invalid(format!("delta-t must be positive, got {}", self.delta_t));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return invalid(format!("p must be in [0, 1], got {}", self.p));
        }
        let min_rounds = self.k_guard as u64 + 7;
        if self.rounds < min_rounds {
            return invalid(format!(
                "rounds must be at least k-guard + 7 = {min_rounds}"
            ));
        }
        let (lo, hi) = (self.init_min, self.init_max());
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return invalid(format!("initial clock range [{lo}, {hi}] is empty"));
        }
        self.detector::<f64>()?;
        Ok(())
    }
}
