//! `hopsync` command line: `simulate`, `sweep`, and `steady-state`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 no spanning path with
//! `--require-connected`, 4 steady state does not exist.

mod config;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dynamics::{steady_state_error, DynamicsError};
use crate::harness::{
    run, scaling_sweep, summarize, write_summary_csv, write_sweep_csv, write_trace_csv,
    HarnessError, NodeSummary,
};
use crate::model::{build_matrices, ModelError};

pub use config::{Settings, KEYS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DISCONNECTED: i32 = 3;
pub const EXIT_NOT_CONVERGENT: i32 = 4;
/// Output files could not be written.
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "hopsync",
    version,
    about = "Single-hop consensus clock synchronization simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment; writes trace.csv and summary.csv.
    Simulate(CommonArgs),
    /// Grid-size sweep of the min-error instant; writes sweep.csv.
    Sweep(SweepArgs),
    /// Print the closed-form steady-state error of every node.
    SteadyState(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// key=value file; flags override its entries
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// grid:RxC | line:N | ring:N | random:N:P | file:PATH [default: grid:4x4]
    #[arg(long)]
    topology: Option<String>,
    /// Gateway position index, or `corner` [default: corner]
    #[arg(long)]
    gateway: Option<String>,
    /// Communication period in seconds [default: 0.001]
    #[arg(long = "delta-t", value_name = "SEC")]
    delta_t: Option<String>,
    /// Last simulated round [default: 500]
    #[arg(long)]
    rounds: Option<String>,
    /// Per-round link availability probability [default: 1]
    #[arg(long)]
    p: Option<String>,
    /// Seed for initial clocks, random topologies, and link draws [default: 0]
    #[arg(long)]
    seed: Option<String>,
    /// Lower bound of initial clocks, seconds [default: 0]
    #[arg(long = "init-min", value_name = "SEC")]
    init_min: Option<String>,
    /// Upper bound of initial clocks, seconds [default: 100 * delta-t]
    #[arg(long = "init-max", value_name = "SEC")]
    init_max: Option<String>,
    /// Filter gain c_f, within [0.95, 1.05] [default: 1.002]
    #[arg(long)]
    cf: Option<String>,
    /// Earliest round a polarity change may stop a node [default: 11]
    #[arg(long = "k-guard")]
    k_guard: Option<String>,
    /// Detector input: clock | detrended [default: clock]
    #[arg(long = "filter-input")]
    filter_input: Option<String>,
    /// Detecting nodes stop communicating and free-run their clock
    #[arg(long = "halt-on-detect")]
    halt_on_detect: bool,
    /// Exit 3 if some node cannot reach the gateway
    #[arg(long = "require-connected")]
    require_connected: bool,
    /// Output directory [default: out]
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    /// Print the effective configuration as key=value and exit
    #[arg(long = "dump-config")]
    dump_config: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated grid sizes, e.g. 2x2,3x3,4x4
    #[arg(long, default_value = "")]
    sizes: String,
    /// Seeds per size
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Run sizes one after another instead of in parallel
    #[arg(long)]
    serial: bool,
}

impl CommonArgs {
    fn settings(&self) -> Result<Settings, String> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            s.apply_file(&text)?;
        }
        let overrides = [
            ("topology", &self.topology),
            ("gateway", &self.gateway),
            ("delta-t", &self.delta_t),
            ("rounds", &self.rounds),
            ("p", &self.p),
            ("seed", &self.seed),
            ("init-min", &self.init_min),
            ("init-max", &self.init_max),
            ("cf", &self.cf),
            ("k-guard", &self.k_guard),
            ("filter-input", &self.filter_input),
            ("out", &self.out),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                s.set(key, v)?;
            }
        }
        if self.halt_on_detect {
            s.sim.halt_on_detect = true;
        }
        if self.require_connected {
            s.require_connected = true;
        }
        s.sim.validate().map_err(|e| e.to_string())?;
        Ok(s)
    }
}

/// Parses `2x2,3x3`.
pub fn parse_sizes(text: &str) -> Result<Vec<(usize, usize)>, String> {
    let sizes = text
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (r, c) = t.split_once('x').ok_or_else(|| format!("bad size `{t}`"))?;
            let r: usize = r.parse().map_err(|_| format!("bad size `{t}`"))?;
            let c: usize = c.parse().map_err(|_| format!("bad size `{t}`"))?;
            if r < 2 || c < 2 {
                return Err(format!("size `{t}` is smaller than 2x2"));
            }
            Ok((r, c))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if sizes.is_empty() {
        return Err("no sizes given".into());
    }
    Ok(sizes)
}

fn config_error(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_CONFIG
}

fn create(dir: &Path, name: &str) -> std::io::Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn print_summary(rows: &[NodeSummary<f64>]) {
    println!(
        "{:>5} {:>10} {:>14} {:>10} {:>14} {:>10} {:>14}",
        "node", "min_at", "min_error", "ss_at", "ss_error", "detect_at", "detect_error"
    );
    for r in rows {
        let at = r
            .detected_instant
            .map_or("-".to_string(), |v| v.to_string());
        let val = r
            .detected_error_value
            .map_or("not detected".to_string(), |v| format!("{v:.7}"));
        println!(
            "{:>5} {:>10} {:>14.7} {:>10} {:>14.7} {:>10} {:>14}",
            r.node_id,
            r.min_error_instant,
            r.min_error_value,
            r.ss_error_instant,
            r.ss_error_value,
            at,
            val
        );
    }
}

fn simulate(args: &CommonArgs) -> i32 {
    let settings = match args.settings() {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    if args.dump_config {
        print!("{}", settings.dump());
        return EXIT_OK;
    }
    let sim = &settings.sim;
    let topo = match sim.topology.resolve(sim.gateway, sim.seed) {
        Ok(t) => t,
        Err(e) => return config_error(e),
    };
    if !topo.has_spanning_path() {
        if settings.require_connected {
            eprintln!("error: topology has no spanning path from the gateway");
            return EXIT_DISCONNECTED;
        }
        eprintln!("warning: topology has no spanning path from the gateway");
    }
    let trace = match run::<f64>(sim) {
        Ok(t) => t,
        Err(e) => return config_error(e),
    };
    let rows = summarize(&trace);
    let written = create(&settings.out, "trace.csv")
        .and_then(|mut w| write_trace_csv(&trace, &mut w).and_then(|_| w.flush()))
        .and_then(|_| create(&settings.out, "summary.csv"))
        .and_then(|mut w| write_summary_csv(&rows, &mut w).and_then(|_| w.flush()));
    if let Err(e) = written {
        eprintln!("error: writing output: {e}");
        return EXIT_IO;
    }
    print_summary(&rows);
    EXIT_OK
}

fn steady_state(args: &CommonArgs) -> i32 {
    let settings = match args.settings() {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    if args.dump_config {
        print!("{}", settings.dump());
        return EXIT_OK;
    }
    let sim = &settings.sim;
    let topo = match sim.topology.resolve(sim.gateway, sim.seed) {
        Ok(t) => t,
        Err(e) => return config_error(e),
    };
    let mats = match build_matrices::<f64>(&topo) {
        Ok(m) => m,
        Err(e @ ModelError::IsolatedNode(_)) => {
            eprintln!("error: {e}");
            return EXIT_NOT_CONVERGENT;
        }
        Err(e) => return config_error(e),
    };
    match steady_state_error(&mats, sim.delta_t) {
        Ok(res) => {
            println!("node ess");
            for (i, e) in res.ess.iter().enumerate() {
                println!("{i} {e}");
            }
            EXIT_OK
        }
        Err(e @ DynamicsError::NotConvergent { .. }) => {
            eprintln!("error: {e}");
            EXIT_NOT_CONVERGENT
        }
        Err(e) => config_error(e),
    }
}

fn sweep(args: &SweepArgs) -> i32 {
    let settings = match args.common.settings() {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    if args.common.dump_config {
        print!("{}", settings.dump());
        return EXIT_OK;
    }
    let sizes = match parse_sizes(&args.sizes) {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    let report = match scaling_sweep(&sizes, &settings.sim, args.seeds, !args.serial) {
        Ok(r) => r,
        Err(e @ HarnessError::ConfigInvalid(_)) => return config_error(e),
        Err(e) => return config_error(e),
    };
    let written = create(&settings.out, "sweep.csv")
        .and_then(|mut w| write_sweep_csv(&report, &mut w).and_then(|_| w.flush()));
    if let Err(e) = written {
        eprintln!("error: writing output: {e}");
        return EXIT_IO;
    }
    for p in &report.points {
        println!(
            "{}x{} nodes={} instant_mean={} min={} max={}",
            p.rows, p.cols, p.nodes, p.instant_mean, p.instant_min, p.instant_max
        );
    }
    match &report.fit {
        Some(f) => println!(
            "fit slope={} intercept={} r2={}",
            f.slope,
            f.intercept,
            f.r_squared
                .map_or("undefined".to_string(), |r| r.to_string())
        ),
        None => println!("fit undefined (fewer than two sizes)"),
    }
    EXIT_OK
}

/// Entry point shared by the binary and tests; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::SteadyState(a) => steady_state(a),
    }
}
