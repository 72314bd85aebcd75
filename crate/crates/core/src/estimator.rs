//! Alternating minimization (hard-assignment EM) for two-component mixed
//! linear regression, with and without per-iteration resampling.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{distance, dot, least_squares};
use crate::model::{equal_blocks, MixtureModel, Observations, SampleSet};

/// Per-sample squared residual below which the fit counts as exact.
pub const EXACT_LOSS_PER_SAMPLE: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatePair {
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
}

impl EstimatePair {
    pub fn new(beta1: Vec<f64>, beta2: Vec<f64>) -> Result<Self> {
        if beta1.len() != beta2.len() {
            return Err(invalid("estimate components have different dimensions"));
        }
        Ok(EstimatePair { beta1, beta2 })
    }

    pub fn truth(model: &MixtureModel) -> Self {
        EstimatePair {
            beta1: model.beta1().to_vec(),
            beta2: model.beta2().to_vec(),
        }
    }

    pub fn swapped(&self) -> Self {
        EstimatePair {
            beta1: self.beta2.clone(),
            beta2: self.beta1.clone(),
        }
    }

    pub fn k(&self) -> usize {
        self.beta1.len()
    }
}

/// Guessed partition of a block of sample indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelAssignment {
    pub j1: Vec<usize>,
    pub j2: Vec<usize>,
}

/// `Σ_i min((y_i − ⟨x_i, β1⟩)², (y_i − ⟨x_i, β2⟩)²)` over `indices`.
pub fn loss(est: &EstimatePair, obs: &Observations, indices: &[usize]) -> f64 {
    indices
        .iter()
        .map(|&i| {
            let x = obs.x(i);
            let y = obs.y(i);
            let r1 = y - dot(x, &est.beta1);
            let r2 = y - dot(x, &est.beta2);
            (r1 * r1).min(r2 * r2)
        })
        .sum()
}

/// Sample `i` goes to `j1` iff `|y_i − ⟨x_i, β1⟩| < |y_i − ⟨x_i, β2⟩|`; ties go to `j2`.
pub fn assign_labels(est: &EstimatePair, obs: &Observations, indices: &[usize]) -> LabelAssignment {
    let mut labels = LabelAssignment::default();
    for &i in indices {
        let x = obs.x(i);
        let y = obs.y(i);
        if (y - dot(x, &est.beta1)).abs() < (y - dot(x, &est.beta2)).abs() {
            labels.j1.push(i);
        } else {
            labels.j2.push(i);
        }
    }
    labels
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub estimate: EstimatePair,
    pub labels: LabelAssignment,
    /// Some group had fewer than `k` samples (minimum-norm refit) or none at
    /// all (previous coefficients kept).
    pub degenerate: bool,
}

fn refit(previous: &[f64], obs: &Observations, group: &[usize], degenerate: &mut bool) -> Result<Vec<f64>> {
    if group.is_empty() {
        *degenerate = true;
        return Ok(previous.to_vec());
    }
    if group.len() < obs.k() {
        *degenerate = true;
    }
    let rows: Vec<&[f64]> = group.iter().map(|&i| obs.x(i)).collect();
    let targets: Vec<f64> = group.iter().map(|&i| obs.y(i)).collect();
    least_squares(&rows, &targets)
}

/// One label-guess / least-squares round on the samples in `indices`.
pub fn em_step(est: &EstimatePair, obs: &Observations, indices: &[usize]) -> Result<StepOutcome> {
    if est.k() != obs.k() {
        return Err(invalid("estimate dimension does not match the design"));
    }
    let labels = assign_labels(est, obs, indices);
    let mut degenerate = false;
    let beta1 = refit(&est.beta1, obs, &labels.j1, &mut degenerate)?;
    let beta2 = refit(&est.beta2, obs, &labels.j2, &mut degenerate)?;
    Ok(StepOutcome {
        estimate: EstimatePair { beta1, beta2 },
        labels,
        degenerate,
    })
}

/// `min` over the two pairings of `max(‖β_a − β1*‖, ‖β_b − β2*‖)`.
pub fn error_metric(est: &EstimatePair, truth: &MixtureModel) -> f64 {
    let direct = distance(&est.beta1, truth.beta1()).max(distance(&est.beta2, truth.beta2()));
    let swapped = distance(&est.beta2, truth.beta1()).max(distance(&est.beta1, truth.beta2()));
    direct.min(swapped)
}

fn fits_exactly(est: &EstimatePair, obs: &Observations) -> bool {
    loss(est, obs, &obs.all_indices()) <= obs.n() as f64 * EXACT_LOSS_PER_SAMPLE
}

/// Zero empirical loss on noiseless samples, up to `N · 1e-20`.
pub fn exact_recovery(est: &EstimatePair, samples: &SampleSet) -> Result<bool> {
    if !samples.is_noiseless() {
        return Err(invalid("exact recovery is only defined for noiseless samples"));
    }
    Ok(fits_exactly(est, samples.observations()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmOptions {
    /// Iteration budget.
    pub t0: usize,
    /// Use a fresh disjoint block per iteration instead of reusing all samples.
    pub resample: bool,
    /// Stop as soon as the estimate fits every sample exactly.
    pub stop_on_exact: bool,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            t0: 25,
            resample: false,
            stop_on_exact: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Error against the ground truth, when one was supplied.
    pub err: Option<f64>,
    /// Loss over all samples.
    pub loss: f64,
    pub j1: usize,
    pub j2: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmTrace {
    pub records: Vec<IterationRecord>,
    pub estimate: EstimatePair,
    /// Whether the final estimate fits all samples exactly.
    pub exact: bool,
}

impl EmTrace {
    /// Number of EM steps actually performed.
    pub fn iterations_used(&self) -> usize {
        self.records.last().map_or(0, |r| r.iteration)
    }

    pub fn final_err(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.err)
    }
}

/// Runs up to `t0` EM steps from `init`. With `resample`, the samples are cut
/// into `t0` equal contiguous blocks (remainder to the last) and step `t` uses
/// block `t`; otherwise every step uses all samples.
pub fn run_em(
    init: &EstimatePair,
    obs: &Observations,
    options: &EmOptions,
    truth: Option<&MixtureModel>,
) -> Result<EmTrace> {
    if init.k() != obs.k() {
        return Err(invalid("initial estimate dimension does not match the design"));
    }
    if let Some(m) = truth {
        if m.k() != obs.k() {
            return Err(invalid("ground truth dimension does not match the design"));
        }
    }
    let all = obs.all_indices();
    let blocks = if options.resample && options.t0 > 0 {
        let min_block = obs.k();
        if obs.n() < options.t0 * min_block {
            return Err(invalid(format!(
                "resampling {} iterations needs at least {} samples, have {}",
                options.t0,
                options.t0 * min_block,
                obs.n()
            )));
        }
        Some(equal_blocks(obs.n(), options.t0)?)
    } else {
        None
    };

    let mut est = init.clone();
    let record = |iteration: usize, est: &EstimatePair, j1: usize, j2: usize, degenerate: bool| IterationRecord {
        iteration,
        err: truth.map(|m| error_metric(est, m)),
        loss: loss(est, obs, &all),
        j1,
        j2,
        degenerate,
    };
    let mut records = vec![record(0, &est, 0, 0, false)];
    let mut exact = fits_exactly(&est, obs);
    for t in 0..options.t0 {
        if exact && options.stop_on_exact {
            break;
        }
        let indices: &[usize] = match &blocks {
            Some(p) => p.block(t),
            None => &all,
        };
        let step = em_step(&est, obs, indices)?;
        est = step.estimate;
        exact = fits_exactly(&est, obs);
        records.push(record(
            t + 1,
            &est,
            step.labels.j1.len(),
            step.labels.j2.len(),
            step.degenerate,
        ));
    }
    Ok(EmTrace {
        records,
        estimate: est,
        exact,
    })
}
