//! Flat `key=value` configuration files. Keys are the long flag names
//! without the leading `--`; `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::harness::SimConfig;

/// Resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub sim: SimConfig,
    pub require_connected: bool,
    pub out: PathBuf,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            require_connected: false,
            out: PathBuf::from("out"),
        }
    }
}

pub const KEYS: &[&str] = &[
    "topology",
    "gateway",
    "delta-t",
    "rounds",
    "p",
    "seed",
    "init-min",
    "init-max",
    "cf",
    "k-guard",
    "filter-input",
    "halt-on-detect",
    "require-connected",
    "out",
];

fn parse_value<V: std::str::FromStr>(key: &str, value: &str) -> Result<V, String>
where
    V::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("bad value `{value}` for `{key}`: {e}"))
}

impl Settings {
    /// Applies one setting; used for both file entries and flag overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let sim = &mut self.sim;
        match key {
            "topology" => sim.topology = parse_value(key, value)?,
            "gateway" => sim.gateway = parse_value(key, value)?,
            "delta-t" => sim.delta_t = parse_value(key, value)?,
            "rounds" => sim.rounds = parse_value(key, value)?,
            "p" => sim.p = parse_value(key, value)?,
            "seed" => sim.seed = parse_value(key, value)?,
            "init-min" => sim.init_min = parse_value(key, value)?,
            "init-max" => sim.init_max = Some(parse_value(key, value)?),
            "cf" => sim.c_f = parse_value(key, value)?,
            "k-guard" => sim.k_guard = parse_value(key, value)?,
            "filter-input" => sim.filter_input = parse_value(key, value)?,
            "halt-on-detect" => sim.halt_on_detect = parse_value(key, value)?,
            "require-connected" => self.require_connected = parse_value(key, value)?,
            "out" => self.out = PathBuf::from(value),
            other => return Err(format!("unknown config key `{other}`")),
        }
        Ok(())
    }

    pub fn apply_file(&mut self, text: &str) -> Result<(), String> {
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", idx + 1))?;
            let key = key.trim();
            if seen.insert(key.to_string(), ()).is_some() {
                return Err(format!("config line {}: `{key}` set twice", idx + 1));
            }
            self.set(key, value.trim())
                .map_err(|e| format!("config line {}: {e}", idx + 1))?;
        }
        Ok(())
    }

    /// Every key with its effective value; parses back to an equal
    /// configuration.
    pub fn dump(&self) -> String {
        let s = &self.sim;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("topology", s.topology.to_string());
        put("gateway", s.gateway.to_string());
        put("delta-t", s.delta_t.to_string());
        put("rounds", s.rounds.to_string());
        put("p", s.p.to_string());
        put("seed", s.seed.to_string());
        put("init-min", s.init_min.to_string());
        put("init-max", s.init_max().to_string());
        put("cf", s.c_f.to_string());
        put("k-guard", s.k_guard.to_string());
        put("filter-input", s.filter_input.to_string());
        put("halt-on-detect", s.halt_on_detect.to_string());
        put("require-connected", self.require_connected.to_string());
        put("out", self.out.display().to_string());
        out
    }
}
