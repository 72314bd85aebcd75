//! Spectral initialization.
//!
//! The second-moment matrix `M = (1/|S|) Σ y_i² x_i x_iᵀ` has expectation
//! `I + 2 p1 β1β1ᵀ + 2 p2 β2β2ᵀ` for unit-norm β's under a standard Gaussian
//! design, so its top-2 eigenspace estimates `span(β1, β2)`. Two ways of
//! turning that subspace into a starting pair are provided:
//!
//! * [`grid_init`]: search a `δ`-grid on the unit circle of the subspace for the
//!   pair with the lowest mixed loss.
//! * [`proportion_init`]: with known proportions, reconstruct β1 and β2 in
//!   closed form from the eigenpairs of `(M − I)/2`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimator::{loss, EstimatePair};
use crate::linalg::{axpy, scale, top2_eig, EigenPair, SymmetricMatrix, Top2, EIG_MAX_ITER, EIG_TOL};
use crate::model::{random_unit, Observations};
use crate::rng::{self, Stream};

const DELTA_CLAMP: f64 = 1e-6;

/// `M`, its top-2 eigenpairs, and the matching eigenpairs of `(M − I)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSpectrum {
    pub m: SymmetricMatrix,
    pub pairs: Top2,
    pub shifted: (EigenPair, EigenPair),
}

impl MomentSpectrum {
    pub fn from_matrix(m: SymmetricMatrix) -> Result<Self> {
        let pairs = top2_eig(&m, EIG_TOL, EIG_MAX_ITER)?;
        let shift = |p: &EigenPair| EigenPair {
            value: (p.value - 1.0) / 2.0,
            vector: p.vector.clone(),
        };
        let shifted = (shift(&pairs.first), shift(&pairs.second));
        Ok(MomentSpectrum { m, pairs, shifted })
    }

    pub fn v1(&self) -> &[f64] {
        &self.pairs.first.vector
    }

    pub fn v2(&self) -> &[f64] {
        &self.pairs.second.vector
    }

    /// Same spectrum with the eigenvector signs flipped as requested.
    pub fn with_signs(&self, flip1: bool, flip2: bool) -> Self {
        let mut out = self.clone();
        let flip = |p: &mut EigenPair, f: bool| {
            if f {
                p.vector.iter_mut().for_each(|x| *x = -*x);
            }
        };
        flip(&mut out.pairs.first, flip1);
        flip(&mut out.pairs.second, flip2);
        flip(&mut out.shifted.0, flip1);
        flip(&mut out.shifted.1, flip2);
        out
    }
}

/// Second-moment matrix over the (possibly repeating) sample indices.
pub fn moment_matrix(obs: &Observations, indices: &[usize]) -> Result<MomentSpectrum> {
    if indices.len() < 2 {
        return Err(invalid("moment matrix needs at least two samples"));
    }
    if obs.k() < 2 {
        return Err(invalid("moment matrix needs dimension k >= 2"));
    }
    let mut m = SymmetricMatrix::zeros(obs.k());
    let w = 1.0 / indices.len() as f64;
    for &i in indices {
        let y = obs.y(i);
        m.add_outer(w * y * y, obs.x(i));
    }
    MomentSpectrum::from_matrix(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    delta: f64,
}

impl GridConfig {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 2.0 * std::f64::consts::PI) {
            return Err(invalid(format!("grid resolution {delta} must lie in (0, 2π)")));
        }
        Ok(GridConfig { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of grid points, `⌈2π/δ⌉ + 1`.
    pub fn len(&self) -> usize {
        (2.0 * std::f64::consts::PI / self.delta).ceil() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `v1 cos(δt) + v2 sin(δt)` for `t = 0..=⌈2π/δ⌉`.
pub fn grid_points(v1: &[f64], v2: &[f64], grid: &GridConfig) -> Vec<Vec<f64>> {
    (0..grid.len())
        .map(|t| {
            let angle = grid.delta * t as f64;
            let mut g = scale(v1, angle.cos());
            axpy(angle.sin(), v2, &mut g);
            g
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    Grid,
    Proportion,
    Random,
}

impl InitMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMethod::Grid => "grid",
            InitMethod::Proportion => "proportion",
            InitMethod::Random => "random",
        }
    }
}

impl std::str::FromStr for InitMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(InitMethod::Grid),
            "proportion" => Ok(InitMethod::Proportion),
            "random" => Ok(InitMethod::Random),
            other => Err(invalid(format!("unknown init method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitResult {
    pub estimate: EstimatePair,
    pub method: InitMethod,
    /// Proportion-aware init fell back to the grid search.
    pub degenerate_fallback: bool,
}

/// Picks the ordered pair of grid points with the lowest loss on `loss_indices`.
/// Ties resolve to the lexicographically smallest `(t1, t2)`.
pub fn grid_init(
    spectrum: &MomentSpectrum,
    grid: &GridConfig,
    obs: &Observations,
    loss_indices: &[usize],
) -> Result<InitResult> {
    if loss_indices.is_empty() {
        return Err(invalid("grid search needs at least one loss sample"));
    }
    let points = grid_points(spectrum.v1(), spectrum.v2(), grid);
    // Squared residual of every loss sample against every grid point.
    let residuals: Vec<Vec<f64>> = points
        .iter()
        .map(|g| {
            loss_indices
                .iter()
                .map(|&i| {
                    let r = obs.y(i) - crate::linalg::dot(obs.x(i), g);
                    r * r
                })
                .collect()
        })
        .collect();
    let mut best = (f64::INFINITY, 0, 0);
    for (t1, r1) in residuals.iter().enumerate() {
        for (t2, r2) in residuals.iter().enumerate() {
            let l: f64 = r1.iter().zip(r2).map(|(a, b)| a.min(*b)).sum();
            if l < best.0 {
                best = (l, t1, t2);
            }
        }
    }
    let (_, t1, t2) = best;
    Ok(InitResult {
        estimate: EstimatePair {
            beta1: points[t1].clone(),
            beta2: points[t2].clone(),
        },
        method: InitMethod::Grid,
        degenerate_fallback: false,
    })
}

/// Grid resolution rule `c · ‖β1 − β2‖ · pmin^{3/2}`.
pub fn default_delta(norm_gap: f64, pmin: f64, c: f64) -> Result<f64> {
    if !(norm_gap > 0.0) {
        return Err(invalid("norm gap must be positive"));
    }
    if !(pmin > 0.0 && pmin <= 0.5) {
        return Err(invalid("pmin must lie in (0, 0.5]"));
    }
    if !(c > 0.0) {
        return Err(invalid("constant c must be positive"));
    }
    Ok(c * norm_gap * pmin.powf(1.5))
}

/// Default duplicate-eigenvalue band for [`proportion_init`].
pub fn default_gap_tol(spectrum: &MomentSpectrum) -> f64 {
    let (a, b) = (&spectrum.shifted.0, &spectrum.shifted.1);
    1e-3 * a.value.abs().max(b.value.abs()).max(1.0)
}

/// `Δ_b = ((λ_b − λ_{−b})² + p_b² − p_{−b}²) / (2 (λ_{−b} − λ_b) p_b)`, clamped
/// into `[−1, 1]` when within `1e-6` of it.
fn delta_coefficient(lambda_b: f64, lambda_other: f64, p_b: f64, p_other: f64) -> Result<f64> {
    let d =
        ((lambda_b - lambda_other).powi(2) + p_b * p_b - p_other * p_other) / (2.0 * (lambda_other - lambda_b) * p_b);
    if !d.is_finite() || d.abs() > 1.0 + DELTA_CLAMP {
        return Err(Error::NumericInconsistency(format!(
            "closed-form coefficient {d} lies outside [-1, 1]"
        )));
    }
    Ok(d.clamp(-1.0, 1.0))
}

/// Closed-form reconstruction from the eigenpairs of `(M − I)/2`.
///
/// `β_b = √((1 − Δ_b)/2) v_b + sign(b) √((1 + Δ_b)/2) v_{−b}` recovers each
/// vector up to sign, since the spectrum cannot distinguish `β_b` from `−β_b`.
/// All eigenvector sign choices and both signs of β2 are scored by loss on
/// `loss_indices` and the best candidate (first in enumeration order on ties)
/// is returned. When `|λ1 − λ2| < gap_tol` the grid search runs instead.
pub fn proportion_init(
    spectrum: &MomentSpectrum,
    p1: f64,
    p2: f64,
    gap_tol: Option<f64>,
    fallback: &GridConfig,
    obs: &Observations,
    loss_indices: &[usize],
) -> Result<InitResult> {
    if !(p1 > 0.0 && p2 > 0.0) || (p1 + p2 - 1.0).abs() > 1e-12 {
        return Err(invalid("proportions must be positive and sum to one"));
    }
    if loss_indices.is_empty() {
        return Err(invalid("candidate selection needs at least one loss sample"));
    }
    let gap_tol = gap_tol.unwrap_or_else(|| default_gap_tol(spectrum));
    let (l1, l2) = (spectrum.shifted.0.value, spectrum.shifted.1.value);
    if (l1 - l2).abs() < gap_tol {
        let mut out = grid_init(spectrum, fallback, obs, loss_indices)?;
        out.degenerate_fallback = true;
        return Ok(out);
    }
    let d1 = delta_coefficient(l1, l2, p1, p2)?;
    let d2 = delta_coefficient(l2, l1, p2, p1)?;
    let (v1, v2) = (&spectrum.shifted.0.vector, &spectrum.shifted.1.vector);

    let mut best: Option<(f64, EstimatePair)> = None;
    for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let u1 = scale(v1, s1);
        let u2 = scale(v2, s2);
        let mut beta1 = scale(&u1, ((1.0 - d1) / 2.0).sqrt());
        axpy(((1.0 + d1) / 2.0).sqrt(), &u2, &mut beta1);
        let mut beta2 = scale(&u2, ((1.0 - d2) / 2.0).sqrt());
        axpy(-((1.0 + d2) / 2.0).sqrt(), &u1, &mut beta2);
        for g in [1.0, -1.0] {
            let cand = EstimatePair {
                beta1: beta1.clone(),
                beta2: scale(&beta2, g),
            };
            let l = loss(&cand, obs, loss_indices);
            if best.as_ref().is_none_or(|(bl, _)| l < *bl) {
                best = Some((l, cand));
            }
        }
    }
    let (_, estimate) = best.expect("eight candidates evaluated");
    Ok(InitResult {
        estimate,
        method: InitMethod::Proportion,
        degenerate_fallback: false,
    })
}

/// Two independent uniformly random unit vectors from the init stream of `seed`.
pub fn random_init(k: usize, seed: u64) -> Result<InitResult> {
    if k == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let mut rng = rng::stream(seed, Stream::Init);
    let beta1 = random_unit(k, &mut rng);
    let beta2 = random_unit(k, &mut rng);
    Ok(InitResult {
        estimate: EstimatePair { beta1, beta2 },
        method: InitMethod::Random,
        degenerate_fallback: false,
    })
}
