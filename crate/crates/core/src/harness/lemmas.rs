//! Randomized suites built on the lemma oracles. Each check yields one row.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimator::EstimatePair;
use crate::exec::{map_indexed, Execution};
use crate::initializer::moment_matrix;
use crate::linalg::{axpy, norm, scale, spectral_norm, SymmetricMatrix};
use crate::model::{generate, random_unit, MixtureModel};
use crate::oracles::{cone_spectrum_mc, loss_sandwich_check, perturbation_check, ConeSpectrumReport};
use crate::rng::{self, Stream};

use super::config::{LemmaConfig, LemmaSuite};

/// Absolute tolerance for the orthogonal-pair cone eigenvalues and the
/// shifted moment eigenvalues.
pub const SPECTRUM_TOL: f64 = 0.02;
/// Monte-Carlo tolerance in standard errors.
pub const MC_SIGMAS: f64 = 5.0;
/// `‖M − E[M]‖` tolerance for the moment suite.
pub const MOMENT_TOL: f64 = 0.05;
/// Required pass fraction for the sandwich and moment suites.
pub const SEED_PASS_RATE: f64 = 0.95;
/// Error levels of the sandwich suite.
pub const SIM_ERRORS: [f64; 3] = [0.05, 0.2, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub suite: LemmaSuite,
    pub case: String,
    pub quantity: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteVerdict {
    pub suite: LemmaSuite,
    pub checks: usize,
    pub passed_checks: usize,
    pub passed: bool,
    pub summary: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
    pub verdicts: Vec<SuiteVerdict>,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

fn check(suite: LemmaSuite, case: String, quantity: &str, value: f64, bound: f64, passed: bool) -> LemmaCheck {
    LemmaCheck {
        suite,
        case,
        quantity: quantity.to_string(),
        value,
        bound,
        passed,
    }
}

/// Runs the requested suites with seeds derived from `seed`.
pub fn run_lemma_suites(cfg: &LemmaConfig, seed: u64, exec: Execution) -> Result<LemmaReport> {
    let mut report = LemmaReport::default();
    for &suite in &cfg.suites {
        let (checks, verdict) = match suite {
            LemmaSuite::Cone => cone_suite(cfg.n_mc, cfg.cone_pairs, seed, exec)?,
            LemmaSuite::Matbound => matbound_suite(cfg.matbound_pairs, seed, exec)?,
            LemmaSuite::Sim => sim_suite(cfg, seed, exec)?,
            LemmaSuite::Moment => moment_suite(cfg.moment_seeds, cfg.moment_samples, seed, exec)?,
        };
        report.checks.extend(checks);
        report.verdicts.push(verdict);
    }
    Ok(report)
}

fn verdict(suite: LemmaSuite, checks: &[LemmaCheck], passed: bool, summary: String) -> SuiteVerdict {
    SuiteVerdict {
        suite,
        checks: checks.len(),
        passed_checks: checks.iter().filter(|c| c.passed).count(),
        passed,
        summary,
    }
}

/// Orthogonal unit pair against the closed forms at `SPECTRUM_TOL`, then the
/// probability bounds on `pairs` random pairs at `MC_SIGMAS` standard errors.
pub fn cone_suite(n_mc: usize, pairs: usize, seed: u64, exec: Execution) -> Result<(Vec<LemmaCheck>, SuiteVerdict)> {
    let suite = LemmaSuite::Cone;
    let mut checks = Vec::new();
    let r = cone_spectrum_mc(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], n_mc, seed, exec)?;
    let case = "u=e1,v=e2".to_string();
    let dmax = (r.sigma_max_mc - r.sigma_max_theory()).abs();
    let dmin = (r.sigma_min_mc - r.sigma_min_theory()).abs();
    checks.push(check(
        suite,
        case.clone(),
        "|sigma_max - (1 + 2/pi)|",
        dmax,
        SPECTRUM_TOL,
        dmax <= SPECTRUM_TOL,
    ));
    checks.push(check(
        suite,
        case,
        "|sigma_min - (1 - 2/pi)|",
        dmin,
        SPECTRUM_TOL,
        dmin <= SPECTRUM_TOL,
    ));

    let mut rng = rng::stream(seed, Stream::Oracle);
    for p in 0..pairs {
        let k = 2 + p % 4;
        let u = scale(
            &random_unit(k, &mut rng),
            0.1 + 1.9 * rand::Rng::random::<f64>(&mut rng),
        );
        let v = scale(
            &random_unit(k, &mut rng),
            0.1 + 1.9 * rand::Rng::random::<f64>(&mut rng),
        );
        let r = cone_spectrum_mc(&u, &v, n_mc, seed.wrapping_add(1 + p as u64), exec)?;
        checks.push(probability_check(&r, norm(&u), norm(&v), format!("pair {p}, k={k}")));
    }
    let passed = checks.iter().all(|c| c.passed);
    let summary = format!(
        "sigma_max {:.4} (theory {:.4}), sigma_min {:.4} (theory {:.4}); {} / {} probability bounds hold",
        r.sigma_max_mc,
        r.sigma_max_theory(),
        r.sigma_min_mc,
        r.sigma_min_theory(),
        checks.iter().skip(2).filter(|c| c.passed).count(),
        pairs
    );
    let v = verdict(suite, &checks, passed, summary);
    Ok((checks, v))
}

/// `P > 1/2` when `‖u‖ > ‖v‖`, else `P ≤ ‖u‖/‖v‖`, each at `MC_SIGMAS` standard errors.
pub fn probability_check(r: &ConeSpectrumReport, nu: f64, nv: f64, case: String) -> LemmaCheck {
    let slack = MC_SIGMAS * r.prob_se;
    if nu > nv {
        check(
            LemmaSuite::Cone,
            case,
            "prob (lower bound 1/2)",
            r.prob_mc,
            0.5,
            r.prob_mc + slack > 0.5,
        )
    } else {
        let bound = nu / nv;
        check(
            LemmaSuite::Cone,
            case,
            "prob (upper bound |u|/|v|)",
            r.prob_mc,
            bound,
            r.prob_mc <= bound + slack,
        )
    }
}

/// Random orthogonal matrix (rows) from Gram-Schmidt on Gaussian vectors.
fn random_orthonormal(k: usize, rng: &mut rng::Rng) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
    while out.len() < k {
        let mut v = random_unit(k, rng);
        for q in &out {
            let c = crate::linalg::dot(&v, q);
            axpy(-c, q, &mut v);
        }
        let n = norm(&v);
        if n > 1e-6 {
            out.push(scale(&v, 1.0 / n));
        }
    }
    out
}

/// A random `(Σ, M)` pair meeting the gap precondition. Every tenth pair has
/// a repeated top eigenvalue.
pub fn random_perturbation_pair(index: usize, seed: u64) -> (SymmetricMatrix, SymmetricMatrix) {
    use rand::Rng;
    let mut rng = rng::stream(seed.wrapping_add(index as u64), Stream::Perturbation);
    let k = 3 + index % 6;
    let mut lam: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..3.0)).collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    if lam[1] - lam[2] < 0.05 {
        lam[1] = lam[2] + 0.05 + rng.random::<f64>();
        lam[0] = lam[0].max(lam[1]);
    }
    if index.is_multiple_of(10) {
        lam[0] = lam[1];
    }
    let q = random_orthonormal(k, &mut rng);
    let mut sigma = SymmetricMatrix::zeros(k);
    for (l, v) in lam.iter().zip(&q) {
        sigma.add_outer(*l, v);
    }
    let entries: Vec<f64> = (0..k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let noise = SymmetricMatrix::new(k, entries).expect("square");
    let unit = noise.scaled(1.0 / spectral_norm(&noise).max(f64::MIN_POSITIVE));
    let eps = rng.random::<f64>() * 0.49 * (lam[1] - lam[2]);
    (sigma.clone(), sigma.plus(eps, &unit))
}

/// All three perturbation bounds on `pairs` random pairs.
pub fn matbound_suite(pairs: usize, seed: u64, exec: Execution) -> Result<(Vec<LemmaCheck>, SuiteVerdict)> {
    let suite = LemmaSuite::Matbound;
    let reports = map_indexed(pairs, exec, |i| {
        let (s, m) = random_perturbation_pair(i, seed);
        perturbation_check(&s, &m)
    });
    let mut checks = Vec::new();
    let mut skipped = 0;
    for (i, r) in reports.into_iter().enumerate() {
        match r? {
            crate::oracles::PerturbationReport::PreconditionNotMet { .. } => skipped += 1,
            crate::oracles::PerturbationReport::Checked { space, u1, u2, .. } => {
                let case = format!("pair {i}");
                for (j, b) in space.iter().enumerate() {
                    checks.push(check(
                        suite,
                        case.clone(),
                        &format!("space u{}", j + 1),
                        b.lhs,
                        b.rhs,
                        b.holds(),
                    ));
                }
                for (name, b) in [("u1", u1), ("u2", u2)] {
                    if let Some(b) = b {
                        checks.push(check(suite, case.clone(), name, b.lhs, b.rhs, b.holds()));
                    }
                }
            }
        }
    }
    let violations = checks.iter().filter(|c| !c.passed).count();
    let summary = format!(
        "{} pairs, {} bound evaluations, {violations} violations, {skipped} skipped for precondition",
        pairs,
        checks.len()
    );
    let v = verdict(suite, &checks, violations == 0 && skipped == 0, summary);
    Ok((checks, v))
}

/// Estimate at error exactly `err`: each truth vector moved by `err` along a random direction.
pub fn perturbed_estimate(truth: &MixtureModel, err: f64, rng: &mut rng::Rng) -> EstimatePair {
    let k = truth.k();
    let mut b1 = truth.beta1().to_vec();
    let mut b2 = truth.beta2().to_vec();
    axpy(err, &random_unit(k, rng), &mut b1);
    axpy(err, &random_unit(k, rng), &mut b2);
    EstimatePair { beta1: b1, beta2: b2 }
}

/// Sandwich bounds for unit vectors at 60 degrees, `p = 0.5`, at each level in [`SIM_ERRORS`].
pub fn sim_suite(cfg: &LemmaConfig, seed: u64, exec: Execution) -> Result<(Vec<LemmaCheck>, SuiteVerdict)> {
    let suite = LemmaSuite::Sim;
    let mut checks = Vec::new();
    let mut rates = Vec::new();
    for (level, &err) in SIM_ERRORS.iter().enumerate() {
        let outcomes = map_indexed(cfg.sim_seeds, exec, |s| -> Result<_> {
            let trial_seed = seed.wrapping_add((level * 1_000_003 + s) as u64);
            let mut rng = rng::stream(trial_seed, Stream::Model);
            let truth = MixtureModel::random_with_inner_product(cfg.sim_k, 1.0, 0.5, 0.5, &mut rng)?;
            let est = perturbed_estimate(&truth, err, &mut rng);
            let samples = generate(&truth, cfg.sim_samples, 0.0, trial_seed)?;
            let obs = samples.observations();
            loss_sandwich_check(&est, &truth, obs, &obs.all_indices(), cfg.sim_c)
        });
        let mut held = 0;
        for (s, r) in outcomes.into_iter().enumerate() {
            let r = r?;
            let ok = r.upper_holds() && r.lower_holds();
            held += usize::from(ok);
            let case = format!("err={err}, seed {s}");
            checks.push(check(
                suite,
                case.clone(),
                "sqrt(L/|S|) <= 1.1 err",
                r.root_mean_loss,
                r.upper,
                r.upper_holds(),
            ));
            checks.push(check(
                suite,
                case,
                "sqrt(L/|S|) >= lower",
                r.root_mean_loss,
                r.lower,
                r.lower_holds(),
            ));
        }
        rates.push((err, held as f64 / cfg.sim_seeds.max(1) as f64));
    }
    let passed = rates.iter().all(|(_, r)| *r >= SEED_PASS_RATE);
    let summary = rates
        .iter()
        .map(|(e, r)| format!("err={e}: bracket held in {:.0}% of seeds", 100.0 * r))
        .collect::<Vec<_>>()
        .join("; ");
    let v = verdict(suite, &checks, passed, summary);
    Ok((checks, v))
}

/// Outcome of one moment-matrix seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeed {
    pub deviation: f64,
    pub shifted: (f64, f64),
    pub expected_shifted: (f64, f64),
}

impl MomentSeed {
    pub fn norm_ok(&self) -> bool {
        self.deviation <= MOMENT_TOL
    }
    pub fn eigen_ok(&self) -> bool {
        (self.shifted.0 - self.expected_shifted.0).abs() <= SPECTRUM_TOL
            && (self.shifted.1 - self.expected_shifted.1).abs() <= SPECTRUM_TOL
    }
}

/// `k = 4`, unit vectors with inner product 0.5, `p = 0.5`.
pub fn moment_seed(samples: usize, seed: u64) -> Result<MomentSeed> {
    let mut rng = rng::stream(seed, Stream::Model);
    let truth = MixtureModel::random_with_inner_product(4, 1.0, 0.5, 0.5, &mut rng)?;
    let data = generate(&truth, samples, 0.0, seed)?;
    let obs = data.observations();
    let spec = moment_matrix(obs, &obs.all_indices())?;
    let mut expected = SymmetricMatrix::identity(4);
    expected.add_outer(2.0 * truth.p1(), truth.beta1());
    expected.add_outer(2.0 * truth.p2(), truth.beta2());
    let c = crate::linalg::dot(truth.beta1(), truth.beta2());
    let kappa = (1.0 - 4.0 * (1.0 - c * c) * truth.p1() * truth.p2()).sqrt();
    Ok(MomentSeed {
        deviation: spectral_norm(&spec.m.plus(-1.0, &expected)),
        shifted: (spec.shifted.0.value, spec.shifted.1.value),
        expected_shifted: ((1.0 + kappa) / 2.0, (1.0 - kappa) / 2.0),
    })
}

/// Both the norm bound and the eigenvalue bound must hold in `SEED_PASS_RATE` of seeds.
pub fn moment_suite(
    seeds: usize,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<(Vec<LemmaCheck>, SuiteVerdict)> {
    let suite = LemmaSuite::Moment;
    let outcomes = map_indexed(seeds, exec, |s| moment_seed(samples, seed.wrapping_add(s as u64)));
    let mut checks = Vec::new();
    let (mut norm_ok, mut eig_ok) = (0, 0);
    for (s, o) in outcomes.into_iter().enumerate() {
        let o = o?;
        norm_ok += usize::from(o.norm_ok());
        eig_ok += usize::from(o.eigen_ok());
        let case = format!("seed {s}");
        checks.push(check(
            suite,
            case.clone(),
            "||M - E[M]||",
            o.deviation,
            MOMENT_TOL,
            o.norm_ok(),
        ));
        let d = (o.shifted.0 - o.expected_shifted.0)
            .abs()
            .max((o.shifted.1 - o.expected_shifted.1).abs());
        checks.push(check(
            suite,
            case,
            "max shifted eigenvalue deviation",
            d,
            SPECTRUM_TOL,
            o.eigen_ok(),
        ));
    }
    let n = seeds.max(1) as f64;
    let passed = norm_ok as f64 / n >= SEED_PASS_RATE && eig_ok as f64 / n >= SEED_PASS_RATE;
    let summary = format!("norm bound held in {norm_ok}/{seeds} seeds, eigenvalue bound in {eig_ok}/{seeds}");
    let v = verdict(suite, &checks, passed, summary);
    Ok((checks, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_pairs_meet_precondition_and_are_reproducible() {
        for i in 0..30 {
            let (s, m) = random_perturbation_pair(i, 5);
            assert_eq!((s.clone(), m.clone()), random_perturbation_pair(i, 5));
            let r = perturbation_check(&s, &m).unwrap();
            assert!(r.precondition_met(), "pair {i}");
            assert!(r.all_hold(), "pair {i}: {r:?}");
        }
    }

    #[test]
    fn perturbed_estimate_has_requested_error() {
        let mut rng = rng::stream(1, Stream::Model);
        let truth = MixtureModel::random_with_inner_product(10, 1.0, 0.5, 0.5, &mut rng).unwrap();
        let est = perturbed_estimate(&truth, 0.2, &mut rng);
        assert!((crate::estimator::error_metric(&est, &truth) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn small_suites_run() {
        let cfg = LemmaConfig {
            n_mc: 20_000,
            cone_pairs: 2,
            matbound_pairs: 20,
            sim_seeds: 3,
            moment_seeds: 2,
            moment_samples: 2_000,
            ..LemmaConfig::default()
        };
        let r = run_lemma_suites(&cfg, 1, Execution::Parallel).unwrap();
        assert_eq!(r.verdicts.len(), 4);
        assert!(
            r.verdicts
                .iter()
                .find(|v| v.suite == LemmaSuite::Matbound)
                .unwrap()
                .passed
        );
    }
}
