//! Dip detection: a 7-tap FIR difference filter and the polarity-change
//! stopping rule.
//!
//! The filter at instant `m` is
//!
//! ```text
//! y(m) = c_f * (0.2 x(m+3) + 0.5 x(m+2) + 0.2 x(m+1))
//!            - (0.2 x(m-1) + 0.5 x(m-2) + 0.2 x(m-3))
//! ```
//!
//! a smoothed slope estimate that needs three samples of lookahead, so `y(m)`
//! is only known once sample `m + 3` has arrived. A node stops at the first
//! sign change of `y` at an instant `m >= k_guard`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::Scalar;

/// Samples of lookahead the filter needs.
pub const FILTER_LAG: usize = 3;
const WINDOW: usize = 2 * FILTER_LAG + 1;
/// Weights for offsets 1, 2, 3 on either side of the center.
const SIDE_WEIGHTS: [f64; FILTER_LAG] = [0.2, 0.5, 0.2];

pub const DEFAULT_GAIN: f64 = 1.002;
pub const DEFAULT_K_GUARD: usize = 11;
pub const GAIN_RANGE: (f64, f64) = (0.95, 1.05);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("filter needs at least {WINDOW} samples, got {0}")]
    SeriesTooShort(usize),
    #[error("filter gain c_f = {0} is outside [{lo}, {hi}]", lo = GAIN_RANGE.0, hi = GAIN_RANGE.1)]
    GainOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig<T> {
    c_f: T,
    k_guard: usize,
}

impl<T: Scalar> DetectorConfig<T> {
    pub fn new(c_f: T, k_guard: usize) -> Result<Self, DetectorError> {
        let g = c_f.to_f64_lossy();
        if !(GAIN_RANGE.0..=GAIN_RANGE.1).contains(&g) {
            return Err(DetectorError::GainOutOfRange(g));
        }
        Ok(Self { c_f, k_guard })
    }

    pub fn c_f(&self) -> T {
        self.c_f
    }

    pub fn k_guard(&self) -> usize {
        self.k_guard
    }

    /// Impulse response `h(-3) ..= h(3)`.
    pub fn taps(&self) -> [T; WINDOW] {
        let w = SIDE_WEIGHTS.map(T::of);
        [
            self.c_f * w[2],
            self.c_f * w[1],
            self.c_f * w[0],
            T::zero(),
            -w[0],
            -w[1],
            -w[2],
        ]
    }

    /// `window[k]` is `x(m - 3 + k)`.
    fn output(&self, window: impl Fn(usize) -> T) -> T {
        SIDE_WEIGHTS
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (k, &w)| {
                let ahead = window(FILTER_LAG + k + 1);
                let behind = window(FILTER_LAG - k - 1);
                acc + T::of(w) * (self.c_f * ahead - behind)
            })
    }
}

impl<T: Scalar> Default for DetectorConfig<T> {
    fn default() -> Self {
        Self {
            c_f: T::of(DEFAULT_GAIN),
            k_guard: DEFAULT_K_GUARD,
        }
    }
}

/// Filter outputs for `m = 3 ..= len - 4`; element `k` is `y(k + 3)`.
pub fn filter_response<T: Scalar>(
    series: &[T],
    cfg: &DetectorConfig<T>,
) -> Result<Vec<T>, DetectorError> {
    if series.len() < WINDOW {
        return Err(DetectorError::SeriesTooShort(series.len()));
    }
    Ok(series
        .windows(WINDOW)
        .map(|w| cfg.output(|k| w[k]))
        .collect())
}

/// The instant a stopping decision refers to and the round it was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolarityFlip {
    /// Filter center `m`.
    pub target_round: u64,
    /// Sample index of the last input consumed, `m + 3`.
    pub detect_round: u64,
}

impl PolarityFlip {
    fn at(m: u64) -> Self {
        Self {
            target_round: m,
            detect_round: m + FILTER_LAG as u64,
        }
    }

    pub fn into_event<T>(self, node_id: usize, frozen_time: T) -> DetectionEvent<T> {
        DetectionEvent {
            node_id,
            detect_round: self.detect_round,
            target_round: self.target_round,
            frozen_time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent<T> {
    pub node_id: usize,
    pub detect_round: u64,
    pub target_round: u64,
    /// Clock value the node adopts, read at `detect_round`.
    pub frozen_time: T,
}

/// Tracks the last nonzero filter output and reports the first strict sign
/// change at or after the guard. Zero outputs are skipped, not treated as a
/// sign.
#[derive(Debug, Clone)]
pub struct PolarityRule<T> {
    k_guard: u64,
    last_nonzero: Option<T>,
    fired: Option<u64>,
}

impl<T: Scalar> PolarityRule<T> {
    pub fn new(k_guard: usize) -> Self {
        Self {
            k_guard: k_guard as u64,
            last_nonzero: None,
            fired: None,
        }
    }

    /// Feeds `y(m)`; returns `Some(m)` the first time the rule triggers.
    pub fn observe(&mut self, m: u64, y: T) -> Option<u64> {
        if self.fired.is_some() || y == T::zero() || y.is_nan() {
            return None;
        }
        let flipped = self.last_nonzero.is_some_and(|prev| prev * y < T::zero());
        self.last_nonzero = Some(y);
        if flipped && m >= self.k_guard {
            self.fired = Some(m);
            return Some(m);
        }
        None
    }

    pub fn fired(&self) -> Option<u64> {
        self.fired
    }
}

/// First polarity change in an already computed `(m, y(m))` sequence.
pub fn first_polarity_change<T: Scalar>(
    outputs: impl IntoIterator<Item = (u64, T)>,
    k_guard: usize,
) -> Option<u64> {
    let mut rule = PolarityRule::new(k_guard);
    outputs.into_iter().find_map(|(m, y)| rule.observe(m, y))
}

/// What a streaming detector produced for one input sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorStep<T> {
    /// `(m, y(m))` completed by this sample.
    pub output: Option<(u64, T)>,
    pub flip: Option<PolarityFlip>,
}

/// Streaming filter plus stopping rule for one node.
#[derive(Debug, Clone)]
pub struct OnlineDetector<T> {
    cfg: DetectorConfig<T>,
    window: VecDeque<T>,
    samples: u64,
    rule: PolarityRule<T>,
}

impl<T: Scalar> OnlineDetector<T> {
    pub fn new(cfg: DetectorConfig<T>) -> Self {
        Self {
            cfg,
            window: VecDeque::with_capacity(WINDOW),
            samples: 0,
            rule: PolarityRule::new(cfg.k_guard),
        }
    }

    pub fn push(&mut self, x: T) -> DetectorStep<T> {
        if self.window.len() == WINDOW {
            self.window.pop_front();
        }
        self.window.push_back(x);
        self.samples += 1;
        if self.window.len() < WINDOW {
            return DetectorStep {
                output: None,
                flip: None,
            };
        }
        let m = self.samples - 1 - FILTER_LAG as u64;
        let y = self.cfg.output(|k| self.window[k]);
        let flip = self.rule.observe(m, y).map(PolarityFlip::at);
        DetectorStep {
            output: Some((m, y)),
            flip,
        }
    }

    pub fn flip(&self) -> Option<PolarityFlip> {
        self.rule.fired().map(PolarityFlip::at)
    }
}

/// Runs the stopping rule over a complete series.
pub fn detect<T: Scalar>(series: &[T], cfg: &DetectorConfig<T>) -> Option<PolarityFlip> {
    let mut det = OnlineDetector::new(*cfg);
    series.iter().find_map(|&x| det.push(x).flip)
}

/// Which node-local signal the filter sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterInput {
    /// The node's clock `t_i(n)` as is.
    #[default]
    Clock,
    /// `t_i(n) - n * delta_t`, see [`node_filter_input`].
    Detrended,
}

impl FilterInput {
    pub fn sample<T: Scalar>(self, clock: T, round: u64, delta_t: T) -> T {
        match self {
            FilterInput::Clock => clock,
            FilterInput::Detrended => clock - delta_t * T::from_u64(round).expect("round fits"),
        }
    }
}

impl fmt::Display for FilterInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterInput::Clock => "clock",
            FilterInput::Detrended => "detrended",
        })
    }
}

impl FromStr for FilterInput {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clock" => Ok(FilterInput::Clock),
            "detrended" => Ok(FilterInput::Detrended),
            other => Err(format!(
                "unknown filter input `{other}` (expected clock|detrended)"
            )),
        }
    }
}

/// `d_i(n) = t_i(n) - n * delta_t` using the node's own round counter.
pub fn node_filter_input<T: Scalar>(clock_series: &[T], delta_t: T) -> Vec<T> {
    clock_series
        .iter()
        .enumerate()
        .map(|(n, &t)| FilterInput::Detrended.sample(t, n as u64, delta_t))
        .collect()
}
