//! Cross-seed aggregates, computed only from checkpoint traces.

use serde::{Deserialize, Serialize};

use crate::engine::Checkpoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointAggregate {
    pub t: u64,
    pub regret_mean: f64,
    pub regret_std: f64,
    pub infidelity_mean: Option<f64>,
    pub infidelity_std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub d: usize,
    pub horizon: u64,
    /// Seeds of the completed runs the aggregates cover.
    pub seeds: Vec<u64>,
    pub final_regret_mean: f64,
    pub final_regret_std: f64,
    pub final_infidelity_mean: Option<f64>,
    /// Checkpoint times shared by every run.
    pub checkpoints: Vec<CheckpointAggregate>,
    /// Least-squares slope of mean regret against `ln² t` over rows with `t > T_0`.
    pub regret_log2_slope: Option<f64>,
    /// Least-squares slope of `ln(mean infidelity)` against `ln t`; `−1` is `1/t` decay.
    pub infidelity_exponent: Option<f64>,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Ordinary least-squares `(intercept, slope)`; `None` for fewer than two
/// distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Aggregates the traces of completed runs of one `(d, horizon)` cell group.
///
/// Returns `None` when `runs` is empty.
pub fn scaling_report(d: usize, horizon: u64, runs: &[(u64, &[Checkpoint])]) -> Option<ScalingReport> {
    let (_, first) = runs.first()?;
    let shared: Vec<u64> = first
        .iter()
        .map(|c| c.t)
        .filter(|t| runs.iter().all(|(_, tr)| tr.binary_search_by_key(t, |c| c.t).is_ok()))
        .collect();
    let row = |tr: &[Checkpoint], t: u64| tr[tr.binary_search_by_key(&t, |c| c.t).unwrap()].clone();
    let mut checkpoints = Vec::with_capacity(shared.len());
    for &t in &shared {
        let rows: Vec<Checkpoint> = runs.iter().map(|(_, tr)| row(tr, t)).collect();
        let regrets: Vec<f64> = rows.iter().map(|c| c.cumulative_regret).collect();
        let (regret_mean, regret_std) = mean_std(&regrets);
        let infs: Option<Vec<f64>> = rows.iter().map(|c| c.online_infidelity).collect();
        let (infidelity_mean, infidelity_std) = match infs {
            Some(v) => {
                let (m, s) = mean_std(&v);
                (Some(m), Some(s))
            }
            None => (None, None),
        };
        checkpoints.push(CheckpointAggregate { t, regret_mean, regret_std, infidelity_mean, infidelity_std });
    }
    let finals: Vec<f64> = runs.iter().map(|(_, tr)| tr.last().map_or(0.0, |c| c.cumulative_regret)).collect();
    let (final_regret_mean, final_regret_std) = mean_std(&finals);
    let final_infs: Option<Vec<f64>> = runs.iter().map(|(_, tr)| tr.last().and_then(|c| c.online_infidelity)).collect();
    let post: Vec<&CheckpointAggregate> = checkpoints.iter().filter(|c| c.infidelity_mean.is_some()).collect();
    let regret_log2_slope = {
        let xs: Vec<f64> = post.iter().map(|c| (c.t as f64).ln().powi(2)).collect();
        let ys: Vec<f64> = post.iter().map(|c| c.regret_mean).collect();
        fit_line(&xs, &ys).map(|(_, b)| b)
    };
    let infidelity_exponent = {
        let pts: Vec<(f64, f64)> = post
            .iter()
            .filter_map(|c| c.infidelity_mean.filter(|&m| m > 0.0).map(|m| ((c.t as f64).ln(), m.ln())))
            .collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        fit_line(&xs, &ys).map(|(_, b)| b)
    };
    Some(ScalingReport {
        d,
        horizon,
        seeds: runs.iter().map(|(s, _)| *s).collect(),
        final_regret_mean,
        final_regret_std,
        final_infidelity_mean: final_infs.map(|v| mean_std(&v).0),
        checkpoints,
        regret_log2_slope,
        infidelity_exponent,
    })
}
