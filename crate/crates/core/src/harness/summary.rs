use crate::Scalar;

use super::RunTrace;

/// Per-node dip metrics. All values are absolute errors in seconds; instants
/// are rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSummary<T> {
    pub node_id: usize,
    /// First round `n >= 1` attaining the minimum `|e_i(n)|`.
    pub min_error_instant: u64,
    pub min_error_value: T,
    pub ss_error_instant: u64,
    pub ss_error_value: T,
    pub detected_instant: Option<u64>,
    pub detected_error_value: Option<T>,
}

/// Round 0 is excluded from the minimum: it holds the arbitrary initial
/// offsets, not anything the protocol produced.
pub fn summarize<T: Scalar>(trace: &RunTrace<T>) -> Vec<NodeSummary<T>> {
    let last = trace.n_max as usize;
    trace
        .errors
        .iter()
        .enumerate()
        .map(|(i, series)| {
            let (min_at, min_val) = series
                .iter()
                .enumerate()
                .skip(1)
                .map(|(n, e)| (n, e.abs()))
                .fold(
                    (0, T::infinity()),
                    |best, cur| if cur.1 < best.1 { cur } else { best },
                );
            let detection = trace.detections[i];
            NodeSummary {
                node_id: i,
                min_error_instant: min_at as u64,
                min_error_value: min_val,
                ss_error_instant: trace.n_max,
                ss_error_value: series[last].abs(),
                detected_instant: detection.map(|d| d.detect_round),
                detected_error_value: detection.map(|d| series[d.detect_round as usize].abs()),
            }
        })
        .collect()
}
