use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimator::{exact_recovery, run_em, EmOptions, EmTrace};
use crate::initializer::{
    default_delta, grid_init, moment_matrix, proportion_init, random_init, GridConfig, InitMethod, InitResult,
};
use crate::model::{generate, split, MixtureModel, SampleSet};
use crate::rng::{self, Stream};

use super::config::{BetaSpec, DeltaRule, ExperimentConfig};

/// Largest `err` against the truth that still counts as exact recovery. Zero
/// loss alone is not enough: with few samples each group can be interpolated.
pub const EXACT_ERR_TOL: f64 = 1e-6;

/// Everything that defines a trial except its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialCell {
    pub k: usize,
    pub n: usize,
    pub p1: f64,
    pub delta: DeltaRule,
    pub t0: usize,
    pub init: InitMethod,
    pub resample: bool,
    pub beta: BetaSpec,
    pub noise_sigma: f64,
}

impl TrialCell {
    /// Noiseless, non-resampled grid-init cell with the default β spec.
    pub fn new(k: usize, n: usize) -> Self {
        TrialCell {
            k,
            n,
            p1: 0.5,
            delta: DeltaRule::default(),
            t0: 25,
            init: InitMethod::Grid,
            resample: false,
            beta: BetaSpec::default(),
            noise_sigma: 0.0,
        }
    }

    pub fn from_config(cfg: &ExperimentConfig, k: usize, n: usize, init: InitMethod) -> Self {
        TrialCell {
            k,
            n,
            p1: cfg.p1,
            delta: cfg.delta,
            t0: cfg.t0,
            init,
            resample: cfg.resample,
            beta: cfg.beta,
            noise_sigma: cfg.noise_sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    pub p1: f64,
    /// Grid resolution used; absent for random init.
    pub delta: Option<f64>,
    pub init_method: InitMethod,
    pub resample: bool,
    pub t0: usize,
    pub iterations_used: usize,
    pub final_err: Option<f64>,
    pub exact: bool,
    pub degenerate_fallback: bool,
    /// Error kind and message when the trial could not complete.
    pub failure: Option<String>,
    pub wall_time: f64,
}

/// Model, data, initialization, and EM trace of one completed trial.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub model: MixtureModel,
    pub samples: SampleSet,
    pub init: InitResult,
    pub delta: Option<f64>,
    pub trace: EmTrace,
    /// Zero loss on every sample and `err ≤ EXACT_ERR_TOL`.
    pub exact: bool,
}

/// Ground truth of a trial: drawn from the model stream of `seed`.
pub fn trial_model(cell: &TrialCell, seed: u64) -> Result<MixtureModel> {
    let mut rng = rng::stream(seed, Stream::Model);
    MixtureModel::random_with_inner_product(cell.k, cell.beta.radius, cell.beta.inner_product, cell.p1, &mut rng)
}

/// Runs one trial end to end. With `resample`, the first quarter of the
/// samples builds the moment matrix, the second quarter scores the
/// initializer, and EM resamples from the rest; otherwise all samples are
/// used everywhere.
pub fn run_trial_detailed(cell: &TrialCell, seed: u64) -> Result<TrialRun> {
    let model = trial_model(cell, seed)?;
    let samples = generate(&model, cell.n, cell.noise_sigma, seed)?;
    let obs = samples.observations();
    let delta = match cell.delta {
        DeltaRule::Fixed(d) => d,
        DeltaRule::Rule { c } => default_delta(model.separation(), model.pmin(), c)?,
    };
    let grid = GridConfig::new(delta)?;
    let all = obs.all_indices();
    let (star, plus, rest) = if cell.resample {
        let q = cell.n / 4;
        let parts = split(cell.n, &[q, q, cell.n - 2 * q])?;
        (
            parts.block(0).to_vec(),
            parts.block(1).to_vec(),
            parts.block(2).to_vec(),
        )
    } else {
        (all.clone(), all.clone(), all)
    };
    let init = match cell.init {
        InitMethod::Grid => grid_init(&moment_matrix(obs, &star)?, &grid, obs, &plus)?,
        InitMethod::Proportion => proportion_init(
            &moment_matrix(obs, &star)?,
            model.p1(),
            model.p2(),
            None,
            &grid,
            obs,
            &plus,
        )?,
        InitMethod::Random => random_init(cell.k, seed)?,
    };
    let options = EmOptions {
        t0: cell.t0,
        resample: cell.resample,
        stop_on_exact: true,
    };
    let trace = if cell.resample {
        run_em(&init.estimate, &obs.select(&rest), &options, Some(&model))?
    } else {
        run_em(&init.estimate, obs, &options, Some(&model))?
    };
    let exact = samples.is_noiseless()
        && exact_recovery(&trace.estimate, &samples)?
        && trace.final_err().is_some_and(|e| e <= EXACT_ERR_TOL);
    let delta = (cell.init != InitMethod::Random).then_some(delta);
    Ok(TrialRun {
        model,
        samples,
        init,
        delta,
        trace,
        exact,
    })
}

/// Runs one trial and records the outcome. Errors become a failed record.
pub fn run_trial(cell: &TrialCell, seed: u64) -> TrialRecord {
    let start = Instant::now();
    let outcome = run_trial_detailed(cell, seed);
    let wall_time = start.elapsed().as_secs_f64();
    let mut record = TrialRecord {
        seed,
        k: cell.k,
        n: cell.n,
        p1: cell.p1,
        delta: None,
        init_method: cell.init,
        resample: cell.resample,
        t0: cell.t0,
        iterations_used: 0,
        final_err: None,
        exact: false,
        degenerate_fallback: false,
        failure: None,
        wall_time,
    };
    match outcome {
        Ok(run) => {
            record.delta = run.delta;
            record.iterations_used = run.trace.iterations_used();
            record.final_err = run.trace.final_err();
            record.exact = run.exact;
            record.degenerate_fallback = run.init.degenerate_fallback;
        }
        Err(e) => record.failure = Some(format!("{}: {e}", e.kind())),
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let cell = TrialCell::new(5, 150);
        let mut a = run_trial(&cell, 3);
        let mut b = run_trial(&cell, 3);
        a.wall_time = 0.0;
        b.wall_time = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn grid_trial_recovers_in_paper_regime() {
        let rec = run_trial(&TrialCell::new(10, 300), 1);
        assert!(rec.failure.is_none(), "{:?}", rec.failure);
        assert!(rec.exact);
        assert_eq!(rec.final_err.map(|e| e < 1e-8), Some(true));
        assert_eq!(rec.delta, Some(0.3));
    }

    #[test]
    fn too_few_samples_do_not_recover() {
        let rec = run_trial(&TrialCell::new(10, 10), 2);
        assert!(!rec.exact);
    }

    #[test]
    fn resampled_trial_runs() {
        let mut cell = TrialCell::new(5, 2000);
        cell.resample = true;
        cell.t0 = 10;
        let rec = run_trial(&cell, 4);
        assert!(rec.failure.is_none(), "{:?}", rec.failure);
        assert!(rec.iterations_used <= 10);
    }

    #[test]
    fn failures_are_recorded() {
        let mut cell = TrialCell::new(5, 100);
        cell.resample = true;
        cell.t0 = 100;
        let rec = run_trial(&cell, 0);
        assert!(rec.failure.as_deref().unwrap().starts_with("invalid_input"));
        assert!(!rec.exact);
    }

    #[test]
    fn random_init_has_no_delta() {
        let mut cell = TrialCell::new(5, 100);
        cell.init = InitMethod::Random;
        assert_eq!(run_trial(&cell, 0).delta, None);
    }
}
