//! CSV emitters. Numbers use Rust's shortest round-trip formatting, so the
//! files are byte-stable for a given trace.

use std::io::{self, Write};

use crate::Scalar;

use super::{NodeSummary, RunTrace, SweepReport};

pub const TRACE_HEADER: &str = "round,node,clock,error,filter_out,detected";
pub const SUMMARY_HEADER: &str =
    "node,min_instant,min_value,ss_instant,ss_value,detected_instant,detected_value";
pub const SWEEP_HEADER: &str = "nodes,instant_mean,instant_min,instant_max";

fn opt<V: std::fmt::Display>(v: Option<V>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per `(round, node)`. `filter_out` is empty where the filter is
/// undefined; `detected` is 1 on the row where the node's stopping decision
/// was taken.
pub fn write_trace_csv<T: Scalar, W: Write>(trace: &RunTrace<T>, mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for n in 0..=trace.n_max as usize {
        for i in 0..trace.node_count() {
            let detected = trace.detections[i].is_some_and(|d| d.detect_round as usize == n);
            writeln!(
                out,
                "{n},{i},{},{},{},{}",
                trace.clocks[i][n],
                trace.errors[i][n],
                opt(trace.filter[i][n]),
                u8::from(detected)
            )?;
        }
    }
    Ok(())
}

pub fn write_summary_csv<T: Scalar, W: Write>(
    rows: &[NodeSummary<T>],
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.node_id,
            r.min_error_instant,
            r.min_error_value,
            r.ss_error_instant,
            r.ss_error_value,
            opt(r.detected_instant),
            opt(r.detected_error_value)
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(report: &SweepReport, mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for p in &report.points {
        writeln!(
            out,
            "{},{},{},{}",
            p.nodes, p.instant_mean, p.instant_min, p.instant_max
        )?;
    }
    Ok(())
}
