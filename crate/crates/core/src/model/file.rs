//! Plain-text topology files:
//!
//! ```text
//! N 2
//! G gw
//! E gw 0
//! E 0 1
//! ```
//!
//! Ordinary nodes are `0..N`. The gateway is written `gw`; the reserved index
//! `N` is accepted as an alias when reading. Blank lines and `#` comments are
//! ignored.

use std::fmt::Write as _;

use super::{Endpoint, ModelError, Topology};

pub fn parse_topology(text: &str) -> Result<Topology, ModelError> {
    let mut node_count = None;
    let mut gateway_seen = false;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| ModelError::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["N", count] => {
                let n: usize = count
                    .parse()
                    .map_err(|_| err(format!("bad node count `{count}`")))?;
                node_count = Some(n);
            }
            ["G", id] => {
                let n = node_count.ok_or_else(|| err("`G` before `N`".into()))?;
                if *id != "gw" && id.parse::<usize>().ok() != Some(n) {
                    return Err(err(format!("gateway id must be `gw` or {n}, got `{id}`")));
                }
                gateway_seen = true;
            }
            ["E", u, v] => {
                let n = node_count.ok_or_else(|| err("`E` before `N`".into()))?;
                let end = |s: &str| -> Result<Endpoint, ModelError> {
                    if s == "gw" {
                        return Ok(Endpoint::Gateway);
                    }
                    match s.parse::<usize>() {
                        Ok(i) if i == n => Ok(Endpoint::Gateway),
                        Ok(i) => Ok(Endpoint::Node(i)),
                        Err(_) => Err(err(format!("bad node id `{s}`"))),
                    }
                };
                edges.push((end(u)?, end(v)?));
            }
            _ => return Err(err(format!("unrecognized line `{line}`"))),
        }
    }
    let n = node_count.ok_or(ModelError::Parse {
        line: 0,
        message: "missing `N` line".into(),
    })?;
    if !gateway_seen {
        return Err(ModelError::Parse {
            line: 0,
            message: "missing `G` line".into(),
        });
    }
    Topology::new(n, edges)
}

pub fn write_topology(topo: &Topology) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "N {}", topo.node_count());
    out.push_str("G gw\n");
    for (u, v) in topo.edges() {
        let _ = writeln!(out, "E {u} {v}");
    }
    out
}
