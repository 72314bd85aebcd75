use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::initializer::InitMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SampleComplexity,
    PhaseTransition,
    Convergence,
    LemmaSuite,
    HardnessDemo,
}

/// How the true coefficient vectors of each trial are drawn: both of norm
/// `radius` with the given inner product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSpec {
    pub radius: f64,
    pub inner_product: f64,
}

impl BetaSpec {
    /// Norm 1.5 with inner product 1.73 (cosine about 0.769).
    pub const EXPERIMENT: BetaSpec = BetaSpec {
        radius: 1.5,
        inner_product: 1.73,
    };
    /// Unit vectors with inner product 0.5.
    pub const UNIT: BetaSpec = BetaSpec {
        radius: 1.0,
        inner_product: 0.5,
    };

    pub fn cosine(&self) -> f64 {
        self.inner_product / (self.radius * self.radius)
    }
}

impl Default for BetaSpec {
    fn default() -> Self {
        BetaSpec::EXPERIMENT
    }
}

/// Grid resolution: a fixed `delta`, or `c · ‖β1 − β2‖ · pmin^{3/2}` per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DeltaRule {
    Fixed(f64),
    Rule { c: f64 },
}

impl Default for DeltaRule {
    fn default() -> Self {
        DeltaRule::Fixed(0.3)
    }
}

/// Settings for the lemma suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaConfig {
    pub suites: Vec<LemmaSuite>,
    pub n_mc: usize,
    pub cone_pairs: usize,
    pub matbound_pairs: usize,
    pub sim_seeds: usize,
    pub sim_k: usize,
    pub sim_samples: usize,
    /// Required `|S₊| ≥ c · k / pmin`.
    pub sim_c: f64,
    pub moment_seeds: usize,
    pub moment_samples: usize,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        LemmaConfig {
            suites: vec![
                LemmaSuite::Cone,
                LemmaSuite::Matbound,
                LemmaSuite::Sim,
                LemmaSuite::Moment,
            ],
            n_mc: 1_000_000,
            cone_pairs: 20,
            matbound_pairs: 1_000,
            sim_seeds: 100,
            sim_k: 10,
            sim_samples: 2_000,
            sim_c: 10.0,
            moment_seeds: 20,
            moment_samples: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaSuite {
    Cone,
    Matbound,
    Sim,
    Moment,
}

impl LemmaSuite {
    pub const ALL: [LemmaSuite; 4] = [
        LemmaSuite::Cone,
        LemmaSuite::Matbound,
        LemmaSuite::Sim,
        LemmaSuite::Moment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LemmaSuite::Cone => "cone",
            LemmaSuite::Matbound => "matbound",
            LemmaSuite::Sim => "sim",
            LemmaSuite::Moment => "moment",
        }
    }
}

/// One experiment, as read from a JSON config file. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Dimensions to run.
    pub k: Vec<usize>,
    /// Absolute sample counts (convergence traces and single cells).
    pub n: Vec<usize>,
    /// `N / k` grid for sweeps and phase curves.
    pub ratios: Vec<f64>,
    pub trials: usize,
    /// Success-rate threshold for the sample-complexity sweep.
    pub target: f64,
    pub t0: usize,
    pub delta: DeltaRule,
    pub resample: bool,
    pub seed_base: u64,
    pub p1: f64,
    pub init: Vec<InitMethod>,
    pub beta: BetaSpec,
    pub noise_sigma: f64,
    pub execution: Execution,
    pub lemma: LemmaConfig,
    /// SubsetSum values for the hardness demo.
    pub values: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Convergence,
            k: vec![10],
            n: vec![300],
            ratios: (4..=160).map(|i| i as f64 * 0.5).collect(),
            trials: 100,
            target: 0.95,
            t0: 25,
            delta: DeltaRule::default(),
            resample: false,
            seed_base: 0,
            p1: 0.5,
            init: vec![InitMethod::Grid, InitMethod::Random],
            beta: BetaSpec::default(),
            noise_sigma: 0.0,
            execution: Execution::default(),
            lemma: LemmaConfig::default(),
            values: vec![1.0, 2.0, 3.0],
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.trials < 1 {
            return bad("trials must be at least 1");
        }
        if !(self.target > 0.0 && self.target <= 1.0) {
            return bad("target success rate must lie in (0, 1]");
        }
        if !(self.p1 > 0.0 && self.p1 < 1.0) {
            return bad("p1 must lie in (0, 1)");
        }
        if self.k.iter().any(|&k| k < 2) {
            return bad("every k must be at least 2");
        }
        if self.n.contains(&0) {
            return bad("every n must be positive");
        }
        if self.ratios.iter().any(|r| !(*r > 0.0)) {
            return bad("ratios must be positive");
        }
        if self.ratios.windows(2).any(|w| w[0] >= w[1]) {
            return bad("ratios must be strictly increasing");
        }
        match self.delta {
            DeltaRule::Fixed(d) if !(d > 0.0 && d < std::f64::consts::TAU) => {
                return bad("delta must lie in (0, 2π)");
            }
            DeltaRule::Rule { c } if !(c > 0.0) => return bad("delta rule constant must be positive"),
            _ => {}
        }
        if !(self.beta.radius > 0.0) || !(self.beta.cosine().abs() < 1.0) {
            return bad("beta spec must have positive radius and |inner_product| < radius²");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be nonnegative");
        }
        if self.init.is_empty() {
            return bad("at least one init method is required");
        }
        if self.experiment == ExperimentKind::HardnessDemo && self.values.is_empty() {
            return bad("hardness demo needs at least one value");
        }
        Ok(())
    }
}
