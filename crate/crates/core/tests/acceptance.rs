//! Exit criteria. Each test prints one `[PASS]`/`[FAIL]` line with the
//! measured values; run with `--nocapture` to see them.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hopsync::detector::{detect, filter_response, DetectorConfig};
use hopsync::dynamics::{error_of, error_step, steady_state_error, step, ClockState};
use hopsync::harness::{run, scaling_sweep, summarize, NodeSummary, SimConfig, TopologySpec};
use hopsync::model::{build_matrices, generate_topology, GatewayPlacement, TopologyKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DT: f64 = 1e-3;

fn verdict(id: &str, name: &str, pass: bool, detail: String) -> bool {
    println!(
        "[{}] {id} {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn within(start: Instant, limit: Duration) -> bool {
    start.elapsed() < limit
}

/// 16-node grid, corner gateway, clocks starting 400 to 500 rounds ahead of
/// the gateway so the dip lands near round 100.
fn grid16(seed: u64) -> SimConfig {
    SimConfig {
        topology: TopologySpec::Grid { rows: 4, cols: 4 },
        delta_t: DT,
        rounds: 500,
        p: 1.0,
        seed,
        init_min: 400.0 * DT,
        init_max: Some(500.0 * DT),
        ..SimConfig::default()
    }
}

fn rows_for(cfg: &SimConfig) -> Vec<NodeSummary<f64>> {
    summarize(&run::<f64>(cfg).expect("run"))
}

#[test]
fn c1_clock_and_error_recursions_agree() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut topologies = 0;
    let mut worst = 0.0f64;
    let mut attempt = 0u64;
    while topologies < 50 {
        attempt += 1;
        let n = rng.gen_range(2..=25);
        let kind = TopologyKind::Random {
            n,
            edge_prob: rng.gen_range(0.15..0.8),
            seed: attempt,
        };
        let topo = generate_topology(&kind, GatewayPlacement::Index(rng.gen_range(0..n))).unwrap();
        if !topo.has_spanning_path() {
            continue;
        }
        topologies += 1;
        let mats = build_matrices::<f64>(&topo).unwrap();
        let init = (0..topo.node_count())
            .map(|_| rng.gen_range(0.0..100.0 * DT))
            .collect();
        let mut s = ClockState::new(init, DT).unwrap();
        let mut e = error_of(&s);
        for _ in 0..200 {
            s = step(&s, &mats).unwrap();
            e = error_step(&e, &mats, DT).unwrap();
            let direct = error_of(&s).errors;
            let scale = direct.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let diff = direct
                .iter()
                .zip(&e.errors)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            worst = worst.max(diff / scale);
        }
    }
    let fast = within(start, Duration::from_secs(5));
    let pass = worst <= 1e-9 && fast;
    assert!(verdict(
        "C1",
        "clock vs error recursion",
        pass,
        format!(
            "50 topologies, worst relative gap {worst:.2e} (<= 1e-9), {:?}",
            start.elapsed()
        )
    ));
}

#[test]
fn c2_steady_state_matches_long_run() {
    let start = Instant::now();
    let mut detail = Vec::new();
    let mut pass = true;
    for (label, kind, hand) in [
        (
            "line(3)",
            TopologyKind::Line(3),
            Some(vec![3.0 * DT, 4.0 * DT]),
        ),
        ("grid 4x4", TopologyKind::Grid { rows: 4, cols: 4 }, None),
    ] {
        let topo = generate_topology(&kind, GatewayPlacement::Corner).unwrap();
        let mats = build_matrices::<f64>(&topo).unwrap();
        let ess = steady_state_error(&mats, DT).unwrap().ess;
        if let Some(hand) = hand {
            let gap = ess
                .iter()
                .zip(&hand)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            pass &= gap < 1e-12 * DT;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let init = (0..topo.node_count())
            .map(|_| rng.gen_range(0.0..100.0 * DT))
            .collect();
        let mut s = ClockState::new(init, DT).unwrap();
        for _ in 0..5000 {
            s = step(&s, &mats).unwrap();
        }
        let gap = error_of(&s)
            .errors
            .iter()
            .zip(&ess)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        pass &= gap < 1e-6 * DT;
        detail.push(format!("{label} |E(5000) - Ess| = {:.2e} dt", gap / DT));
    }
    pass &= within(start, Duration::from_secs(5));
    assert!(verdict(
        "C2",
        "steady-state oracle",
        pass,
        detail.join("; ")
    ));
}

#[test]
fn c3_dip_reproduction() {
    let start = Instant::now();
    let mut worst_min = 0.0f64;
    let mut above_half = 0;
    let mut not_below_ss = 0;
    let mut worst_spread = 0;
    for seed in 0..25 {
        let rows = rows_for(&grid16(seed));
        for r in &rows {
            worst_min = worst_min.max(r.min_error_value);
            above_half += usize::from(r.min_error_value >= 0.5 * DT);
            not_below_ss += usize::from(r.min_error_value >= r.ss_error_value);
        }
        let lo = rows.iter().map(|r| r.min_error_instant).min().unwrap();
        let hi = rows.iter().map(|r| r.min_error_instant).max().unwrap();
        worst_spread = worst_spread.max(hi - lo);
    }
    let fast = within(start, Duration::from_secs(10));
    let pass = above_half == 0 && not_below_ss == 0 && worst_spread <= 10 && fast;
    assert!(verdict(
        "C3",
        "dip reproduction",
        pass,
        format!(
            "375 node-runs: {above_half} with min|e| >= 0.5 dt (worst {:.3} dt), \
             {not_below_ss} not below steady state, widest instant spread {worst_spread} rounds (<= 10), {:?}",
            worst_min / DT,
            start.elapsed()
        )
    ));
}

#[test]
fn c4_detector_efficacy() {
    let start = Instant::now();
    let mut fewest_fired = usize::MAX;
    let mut above_ss = 0;
    let mut outside_window = 0;
    let (mut lag_lo, mut lag_hi) = (i64::MAX, i64::MIN);
    for seed in 0..25 {
        let rows = rows_for(&grid16(seed));
        let fired: Vec<_> = rows
            .iter()
            .filter(|r| r.detected_instant.is_some())
            .collect();
        fewest_fired = fewest_fired.min(fired.len());
        for r in fired {
            let at = r.detected_instant.unwrap() as i64;
            let lag = at - r.min_error_instant as i64;
            lag_lo = lag_lo.min(lag);
            lag_hi = lag_hi.max(lag);
            above_ss += usize::from(r.detected_error_value.unwrap() > r.ss_error_value);
            outside_window += usize::from(!(-2..=15).contains(&lag));
        }
    }
    let fast = within(start, Duration::from_secs(10));
    let pass = fewest_fired >= 13 && above_ss == 0 && outside_window == 0 && fast;
    assert!(verdict(
        "C4",
        "detector efficacy",
        pass,
        format!(
            "25 seeds: fewest firing nodes {fewest_fired}/15 (>= 13), {above_ss} detections above steady state, \
             {outside_window} outside [min-2, min+15] (lags {lag_lo}..{lag_hi}), {:?}",
            start.elapsed()
        )
    ));
}

#[test]
fn c5_dip_persists_on_unreliable_links() {
    let start = Instant::now();
    let mut failing_seeds = 0;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let cfg = SimConfig {
            topology: TopologySpec::Grid { rows: 3, cols: 3 },
            p: 0.5,
            ..grid16(seed)
        };
        let rows = rows_for(&cfg);
        let seed_worst = rows.iter().map(|r| r.min_error_value).fold(0.0, f64::max);
        worst = worst.max(seed_worst);
        failing_seeds += usize::from(seed_worst >= DT);
    }
    let fast = within(start, Duration::from_secs(10));
    let pass = failing_seeds == 0 && fast;
    assert!(verdict(
        "C5",
        "stochastic dip persistence",
        pass,
        format!(
            "3x3 grid, p = 0.5: {failing_seeds}/20 seeds with some node min|e| >= dt (worst {:.3} dt), {:?}",
            worst / DT,
            start.elapsed()
        )
    ));
}

#[test]
fn c6_near_linear_scaling() {
    let start = Instant::now();
    let sizes: Vec<_> = (2..=8).map(|s| (s, s)).collect();
    let template = SimConfig {
        rounds: 1000,
        ..grid16(0)
    };
    let report = scaling_sweep(&sizes, &template, 5, true).unwrap();
    let r2 = report
        .fit
        .as_ref()
        .and_then(|f| f.r_squared)
        .unwrap_or(f64::NAN);
    let fast = within(start, Duration::from_secs(30));
    let means: Vec<String> = report
        .points
        .iter()
        .map(|p| format!("{}:{:.1}", p.nodes, p.instant_mean))
        .collect();
    assert!(verdict(
        "C6",
        "scaling",
        r2 >= 0.9 && fast,
        format!(
            "R^2 = {r2:.4} (>= 0.9), nodes:instant {}, {:?}",
            means.join(" "),
            start.elapsed()
        )
    ));
}

#[test]
fn c7_filter_unit_truths() {
    let start = Instant::now();
    let unit = DetectorConfig::new(1.0, 11).unwrap();
    let guardless = DetectorConfig::new(1.0, 0).unwrap();

    let constant = filter_response(&[7.25; 40], &unit).unwrap();
    let zero_on_constant = constant.iter().all(|&y| y == 0.0);

    let ramp: Vec<f64> = (0..40).map(f64::from).collect();
    let ramp_out = filter_response(&ramp, &unit).unwrap();
    let ramp_exact = ramp_out.iter().all(|&y| y == 3.6);

    let mut affine_quiet = true;
    for (a, b) in [
        (0.0, 1.0),
        (5.0, -2.0),
        (-3.5, 0.25),
        (100.0, 0.0),
        (1e3, -7.0),
    ] {
        let x: Vec<f64> = (0..200).map(|m| a + b * m as f64).collect();
        affine_quiet &= detect(&x, &guardless).is_none();
    }

    let mut vertex_ok = true;
    for vertex in [10.0, 20.5, 33.25] {
        let x: Vec<f64> = (0..60).map(|m| -(m as f64 - vertex).powi(2)).collect();
        let flip = detect(&x, &guardless).expect("peak must flip");
        vertex_ok &= (flip.target_round as f64 - vertex).abs() <= 1.0;
    }

    let pass = zero_on_constant
        && ramp_exact
        && affine_quiet
        && vertex_ok
        && within(start, Duration::from_secs(1));
    assert!(verdict(
        "C7",
        "filter unit truths",
        pass,
        format!(
            "constant->0: {zero_on_constant}, ramp->3.6: {ramp_exact}, affine silent: {affine_quiet}, \
             vertex within 1: {vertex_ok}"
        )
    ));
}

fn simulate_into(dir: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_hopsync"))
        .args([
            "simulate",
            "--topology",
            "grid:4x4",
            "--p",
            "0.5",
            "--seed",
            "7",
            "--out",
        ])
        .arg(dir)
        .stdout(std::process::Stdio::null())
        .status()
        .expect("spawn hopsync");
    assert!(status.success());
}

#[test]
fn c8_identical_flags_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate_into(a.path());
    simulate_into(b.path());
    let mut same = true;
    for name in ["trace.csv", "summary.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        same &= !x.is_empty() && x == y;
    }
    assert!(verdict(
        "C8",
        "determinism",
        same,
        "two `simulate --p 0.5 --seed 7` runs, trace.csv and summary.csv byte-identical".into()
    ));
}
