use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::initializer::InitMethod;

use super::config::ExperimentConfig;
use super::stats::{median, wilson_interval};
use super::trial::{run_trial, run_trial_detailed, TrialCell, TrialRecord};

/// Sweeps with fewer trials per cell are flagged as low confidence.
pub const LOW_CONFIDENCE_TRIALS: usize = 30;

/// Runs `trials` trials of one cell with seeds `seed_base + i`.
pub fn run_cell(cell: &TrialCell, trials: usize, seed_base: u64, exec: Execution) -> Vec<TrialRecord> {
    map_indexed(trials, exec, |i| run_trial(cell, seed_base.wrapping_add(i as u64)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub k: usize,
    pub n: usize,
    pub ratio: f64,
    pub init_method: InitMethod,
    pub trials: usize,
    pub successes: usize,
    pub failed: usize,
    pub success_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// Median iterations over the trials that recovered exactly.
    pub median_iterations: Option<f64>,
    pub mean_final_err: Option<f64>,
}

impl CellSummary {
    pub fn from_records(cell: &TrialCell, records: &[TrialRecord]) -> Self {
        let trials = records.len();
        let successes = records.iter().filter(|r| r.exact).count();
        let (wilson_low, wilson_high) = wilson_interval(successes, trials);
        let iterations: Vec<f64> = records
            .iter()
            .filter(|r| r.exact)
            .map(|r| r.iterations_used as f64)
            .collect();
        let errs: Vec<f64> = records.iter().filter_map(|r| r.final_err).collect();
        CellSummary {
            k: cell.k,
            n: cell.n,
            ratio: cell.n as f64 / cell.k as f64,
            init_method: cell.init,
            trials,
            successes,
            failed: records.iter().filter(|r| r.failure.is_some()).count(),
            success_rate: if trials == 0 {
                0.0
            } else {
                successes as f64 / trials as f64
            },
            wilson_low,
            wilson_high,
            median_iterations: median(&iterations),
            mean_final_err: (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64),
        }
    }
}

/// Cell summaries together with their raw trial records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellRuns {
    pub summaries: Vec<CellSummary>,
    pub records: Vec<TrialRecord>,
}

impl CellRuns {
    fn push(&mut self, cell: &TrialCell, records: Vec<TrialRecord>) -> CellSummary {
        let summary = CellSummary::from_records(cell, &records);
        self.summaries.push(summary.clone());
        self.records.extend(records);
        summary
    }
}

/// Distinct sample counts `ceil(r · k)` over the ratio grid, increasing.
pub fn n_grid(k: usize, ratios: &[f64]) -> Vec<usize> {
    let mut out: Vec<usize> = ratios.iter().map(|r| ((r * k as f64).ceil() as usize).max(1)).collect();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    /// Smallest grid N reaching the target; absent when censored.
    pub n_star: Option<usize>,
    pub success_rate: Option<f64>,
    pub wilson_low: Option<f64>,
    pub wilson_high: Option<f64>,
    pub trials: usize,
    pub censored: bool,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Every cell evaluated during the search, in evaluation order.
    pub cells: CellRuns,
}

/// For each k, bisects the N grid (assuming success is monotone in N) for the
/// smallest N whose success rate over `cfg.trials` trials reaches `target`.
/// The largest grid N is evaluated first; if it misses, the row is censored.
/// Uses the first configured init method.
pub fn sample_complexity_sweep(cfg: &ExperimentConfig, target: f64) -> Result<SweepResult> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::Config("target must lie in [0, 1]".into()));
    }
    let init = cfg.init[0];
    let mut cells = CellRuns::default();
    let mut rows = Vec::with_capacity(cfg.k.len());
    for &k in &cfg.k {
        let grid = n_grid(k, &cfg.ratios);
        if grid.is_empty() {
            return Err(Error::Config("ratio grid is empty".into()));
        }
        let mut seen: BTreeMap<usize, CellSummary> = BTreeMap::new();
        let mut rate_at = |j: usize, cells: &mut CellRuns| -> f64 {
            if let Some(s) = seen.get(&j) {
                return s.success_rate;
            }
            let cell = TrialCell::from_config(cfg, k, grid[j], init);
            let summary = cells.push(&cell, run_cell(&cell, cfg.trials, cfg.seed_base, cfg.execution));
            let rate = summary.success_rate;
            seen.insert(j, summary);
            rate
        };
        let last = grid.len() - 1;
        let n_star_index = if rate_at(last, &mut cells) < target {
            None
        } else {
            // Invariant: index `hi` meets the target, every index <= `lo` is assumed not to.
            let (mut lo, mut hi) = (-1i64, last as i64);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if rate_at(mid as usize, &mut cells) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi as usize)
        };
        let at = n_star_index.and_then(|j| seen.get(&j));
        rows.push(SweepRow {
            k,
            n_star: n_star_index.map(|j| grid[j]),
            success_rate: at.map(|s| s.success_rate),
            wilson_low: at.map(|s| s.wilson_low),
            wilson_high: at.map(|s| s.wilson_high),
            trials: cfg.trials,
            censored: n_star_index.is_none(),
            low_confidence: cfg.trials < LOW_CONFIDENCE_TRIALS,
        });
    }
    Ok(SweepResult { rows, cells })
}

/// Success rate at every `(k, N/k)` grid point, for the first configured init.
pub fn phase_transition(cfg: &ExperimentConfig) -> Result<CellRuns> {
    let init = cfg.init[0];
    let mut out = CellRuns::default();
    for &k in &cfg.k {
        for &r in &cfg.ratios {
            let n = ((r * k as f64).ceil() as usize).max(1);
            let cell = TrialCell::from_config(cfg, k, n, init);
            let records = run_cell(&cell, cfg.trials, cfg.seed_base, cfg.execution);
            let mut summary = CellSummary::from_records(&cell, &records);
            summary.ratio = r;
            out.summaries.push(summary);
            out.records.extend(records);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub init_method: InitMethod,
    pub seed: u64,
    pub iteration: usize,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMean {
    pub init_method: InitMethod,
    pub iteration: usize,
    pub mean_err: f64,
    /// Trials contributing (failed trials are excluded).
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub k: usize,
    pub n: usize,
    pub means: Vec<TraceMean>,
    pub points: Vec<TracePoint>,
    pub failed: usize,
}

/// Per-iteration error `err^(t)`, `t = 0..=t0`, for every configured init
/// method at `(k[0], n[0])`. A run that stops early on exact recovery is a
/// fixed point, so its last error is carried forward.
pub fn convergence_trace(cfg: &ExperimentConfig) -> Result<TraceResult> {
    let (&k, &n) = match (cfg.k.first(), cfg.n.first()) {
        (Some(k), Some(n)) => (k, n),
        _ => return Err(Error::Config("convergence trace needs k and n".into())),
    };
    let len = cfg.t0 + 1;
    let mut means = Vec::new();
    let mut points = Vec::new();
    let mut failed = 0;
    for &init in &cfg.init {
        let cell = TrialCell::from_config(cfg, k, n, init);
        let traces: Vec<Option<Vec<f64>>> = map_indexed(cfg.trials, cfg.execution, |i| {
            let run = run_trial_detailed(&cell, cfg.seed_base.wrapping_add(i as u64)).ok()?;
            let mut errs: Vec<f64> = run.trace.records.iter().filter_map(|r| r.err).collect();
            let last = *errs.last()?;
            errs.resize(len, last);
            Some(errs)
        });
        let mut sums = vec![0.0; len];
        let mut count = 0;
        for (i, t) in traces.iter().enumerate() {
            let Some(errs) = t else {
                failed += 1;
                continue;
            };
            count += 1;
            for (it, e) in errs.iter().enumerate() {
                sums[it] += e;
                points.push(TracePoint {
                    init_method: init,
                    seed: cfg.seed_base.wrapping_add(i as u64),
                    iteration: it,
                    err: *e,
                });
            }
        }
        for (iteration, s) in sums.into_iter().enumerate() {
            means.push(TraceMean {
                init_method: init,
                iteration,
                mean_err: if count == 0 { f64::NAN } else { s / count as f64 },
                trials: count,
            });
        }
    }
    Ok(TraceResult {
        k,
        n,
        means,
        points,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            k: vec![4],
            n: vec![80],
            ratios: vec![0.5, 2.0, 6.0, 12.0, 30.0],
            trials: 8,
            t0: 10,
            init: vec![InitMethod::Grid],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn n_grid_dedups() {
        assert_eq!(n_grid(4, &[0.1, 0.2, 1.0, 1.1]), vec![1, 4, 5]);
    }

    #[test]
    fn sweep_target_zero_returns_smallest_n() {
        let r = sample_complexity_sweep(&small_cfg(), 0.0).unwrap();
        assert_eq!(r.rows[0].n_star, Some(2));
        assert!(r.rows[0].low_confidence);
    }

    #[test]
    fn sweep_single_trial_is_legal() {
        let cfg = ExperimentConfig {
            trials: 1,
            ..small_cfg()
        };
        let r = sample_complexity_sweep(&cfg, 0.95).unwrap();
        assert!(r.rows[0].low_confidence);
        assert_eq!(r.cells.records.len(), r.cells.summaries.len());
    }

    #[test]
    fn sweep_censored_when_grid_too_small() {
        let cfg = ExperimentConfig {
            ratios: vec![0.5, 0.75],
            ..small_cfg()
        };
        let r = sample_complexity_sweep(&cfg, 0.95).unwrap();
        assert!(r.rows[0].censored);
        assert_eq!(r.rows[0].n_star, None);
    }

    #[test]
    fn phase_rates_bounded_and_intervals_contain_estimate() {
        let r = phase_transition(&small_cfg()).unwrap();
        assert_eq!(r.summaries.len(), 5);
        for s in &r.summaries {
            assert!((0.0..=1.0).contains(&s.success_rate));
            assert!(s.wilson_low <= s.success_rate && s.success_rate <= s.wilson_high);
        }
        assert_eq!(r.summaries[0].success_rate, 0.0);
    }

    #[test]
    fn trace_with_single_iteration() {
        let cfg = ExperimentConfig {
            t0: 1,
            init: vec![InitMethod::Grid, InitMethod::Random],
            ..small_cfg()
        };
        let r = convergence_trace(&cfg).unwrap();
        assert_eq!(r.means.len(), 4);
        assert!(r.means.iter().all(|m| m.iteration <= 1));
    }

    #[test]
    fn execution_modes_agree() {
        let cell = TrialCell::new(4, 60);
        let strip = |mut v: Vec<TrialRecord>| {
            v.iter_mut().for_each(|r| r.wall_time = 0.0);
            v
        };
        let a = strip(run_cell(&cell, 6, 11, Execution::Sequential));
        let b = strip(run_cell(&cell, 6, 11, Execution::Parallel));
        assert_eq!(a, b);
    }
}
