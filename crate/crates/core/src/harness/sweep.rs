use rayon::prelude::*;

use super::{run, summarize, HarnessError, SimConfig, TopologySpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub rows: usize,
    pub cols: usize,
    /// Ordinary nodes, `rows * cols - 1`.
    pub nodes: usize,
    /// Per-seed mean (over nodes) of the min-error instant, aggregated over
    /// seeds.
    pub instant_mean: f64,
    pub instant_min: f64,
    pub instant_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` when the responses have zero variance.
    pub r_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// `None` with fewer than two distinct sizes.
    pub fit: Option<LinearFit>,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn fit_line(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.is_empty() {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let r_squared = (syy > 0.0).then(|| 1.0 - ss_res / syy);
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

fn mean_min_instant(cfg: &SimConfig) -> Result<f64, HarnessError> {
    let rows = summarize(&run::<f64>(cfg)?);
    Ok(rows.iter().map(|r| r.min_error_instant as f64).sum::<f64>() / rows.len() as f64)
}

/// Runs every grid size with `seeds` consecutive seeds starting at
/// `template.seed`. Points are independent, so `parallel` only changes
/// wall time, never results.
pub fn scaling_sweep(
    sizes: &[(usize, usize)],
    template: &SimConfig,
    seeds: u64,
    parallel: bool,
) -> Result<SweepReport, HarnessError> {
    if seeds == 0 {
        return Err(HarnessError::ConfigInvalid(
            "sweep needs at least one seed".into(),
        ));
    }
    let jobs: Vec<(usize, u64)> = (0..sizes.len())
        .flat_map(|s| (0..seeds).map(move |k| (s, k)))
        .collect();
    let job = |&(s, k): &(usize, u64)| {
        let (rows, cols) = sizes[s];
        let cfg = SimConfig {
            topology: TopologySpec::Grid { rows, cols },
            seed: template.seed.wrapping_add(k),
            ..template.clone()
        };
        mean_min_instant(&cfg)
    };
    let results: Vec<f64> = if parallel {
        jobs.par_iter().map(job).collect::<Result<_, _>>()?
    } else {
        jobs.iter().map(job).collect::<Result<_, _>>()?
    };

    let points: Vec<SweepPoint> = sizes
        .iter()
        .zip(results.chunks(seeds as usize))
        .map(|(&(rows, cols), per_seed)| SweepPoint {
            rows,
            cols,
            nodes: rows * cols - 1,
            instant_mean: per_seed.iter().sum::<f64>() / per_seed.len() as f64,
            instant_min: per_seed.iter().copied().fold(f64::INFINITY, f64::min),
            instant_max: per_seed.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect();
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.nodes as f64, p.instant_mean))
        .collect();
    Ok(SweepReport {
        fit: fit_line(&xy),
        points,
    })
}
