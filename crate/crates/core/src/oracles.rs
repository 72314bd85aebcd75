//! Numerical checks of the supporting lemmas and the SubsetSum reduction.
//!
//! Nothing here is used by the estimators. These are independent references:
//! Monte-Carlo estimates compared against closed forms, explicit evaluation of
//! eigenvector perturbation bounds, and exhaustive search for exact mixed fits.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimator::{error_metric, loss, EstimatePair};
use crate::exec::{map_indexed, Execution};
use crate::linalg::{add, dot, least_squares, norm, sub, symmetric_eigen, SymmetricMatrix};
use crate::model::{MixtureModel, Observations};
use crate::rng::{self, Stream};

/// Smallest Monte-Carlo sample accepted by [`cone_spectrum_mc`].
pub const MIN_CONE_SAMPLES: usize = 10_000;
const CONE_CHUNKS: usize = 64;

/// Monte-Carlo view of `E[x xᵀ | (xᵀu)² > (xᵀv)²]` for standard normal `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSpectrumReport {
    /// `arccos((v − u)ᵀ(v + u) / (‖u + v‖ ‖u − v‖))`, in `[0, π]`.
    pub alpha: f64,
    pub sigma_max_mc: f64,
    pub sigma_min_mc: f64,
    /// Standard errors of the two eigenvalue estimates.
    pub sigma_max_se: f64,
    pub sigma_min_se: f64,
    pub prob_mc: f64,
    pub prob_se: f64,
    pub n_mc: usize,
    pub accepted: usize,
}

impl ConeSpectrumReport {
    /// Closed form `1 + sin α / α`.
    pub fn sigma_max_theory(&self) -> f64 {
        1.0 + sinc(self.alpha)
    }
    /// Closed form `1 − sin α / α`.
    pub fn sigma_min_theory(&self) -> f64 {
        1.0 - sinc(self.alpha)
    }
    /// Closed form `α / π`.
    pub fn prob_theory(&self) -> f64 {
        self.alpha / std::f64::consts::PI
    }
}

fn sinc(a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        a.sin() / a
    }
}

/// Angle parameter of the cone event for the pair `(u, v)`.
pub fn cone_alpha(u: &[f64], v: &[f64]) -> f64 {
    let a = sub(v, u);
    let b = add(v, u);
    let denom = norm(&a) * norm(&b);
    if denom == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    (dot(&a, &b) / denom).clamp(-1.0, 1.0).acos()
}

fn cone_chunk_rng(seed: u64, chunk: usize) -> rng::Rng {
    rng::stream(
        seed ^ (chunk as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        Stream::Oracle,
    )
}

fn chunk_len(n_mc: usize, chunk: usize) -> usize {
    n_mc / CONE_CHUNKS + usize::from(chunk < n_mc % CONE_CHUNKS)
}

/// Replays the draws of one chunk, calling `f` on every accepted `x`.
fn for_each_accepted(u: &[f64], v: &[f64], seed: u64, chunk: usize, n_mc: usize, mut f: impl FnMut(&[f64])) {
    let k = u.len();
    let mut rng = cone_chunk_rng(seed, chunk);
    let mut x = vec![0.0; k];
    for _ in 0..chunk_len(n_mc, chunk) {
        for xi in x.iter_mut() {
            *xi = StandardNormal.sample(&mut rng);
        }
        let (a, b) = (dot(&x, u), dot(&x, v));
        if a * a > b * b {
            f(&x);
        }
    }
}

/// Estimates the conditional second moment, its extreme eigenvalues, and the
/// event probability from `n_mc` standard normal draws. Work is split into a
/// fixed number of seeded chunks, so results do not depend on `exec`.
pub fn cone_spectrum_mc(u: &[f64], v: &[f64], n_mc: usize, seed: u64, exec: Execution) -> Result<ConeSpectrumReport> {
    let k = u.len();
    if k == 0 || v.len() != k {
        return Err(invalid("u and v must be nonempty and of equal length"));
    }
    if norm(u) == 0.0 || norm(v) == 0.0 {
        return Err(invalid("u and v must be nonzero"));
    }
    if n_mc < MIN_CONE_SAMPLES {
        return Err(invalid(format!("need at least {MIN_CONE_SAMPLES} Monte-Carlo draws")));
    }
    let partial = map_indexed(CONE_CHUNKS, exec, |c| {
        let mut acc = SymmetricMatrix::zeros(k);
        let mut count = 0usize;
        for_each_accepted(u, v, seed, c, n_mc, |x| {
            acc.add_outer(1.0, x);
            count += 1;
        });
        (acc, count)
    });
    let mut sum = SymmetricMatrix::zeros(k);
    let mut accepted = 0;
    for (m, c) in &partial {
        sum = sum.plus(1.0, m);
        accepted += c;
    }
    if accepted == 0 {
        return Err(Error::DegenerateEvent("no draw satisfied (xᵀu)² > (xᵀv)²".into()));
    }
    let sigma = sum.scaled(1.0 / accepted as f64);
    let (values, vectors) = symmetric_eigen(&sigma);
    let (top, bottom) = (&vectors[0], &vectors[k - 1]);

    // Second pass for the spread of (xᵀw)² along both extreme directions.
    let spread = map_indexed(CONE_CHUNKS, exec, |c| {
        let mut s = [0.0f64; 4];
        for_each_accepted(u, v, seed, c, n_mc, |x| {
            let a = dot(x, top).powi(2);
            let b = dot(x, bottom).powi(2);
            s[0] += a;
            s[1] += a * a;
            s[2] += b;
            s[3] += b * b;
        });
        s
    });
    let tot = spread.iter().fold([0.0; 4], |mut acc, s| {
        for i in 0..4 {
            acc[i] += s[i];
        }
        acc
    });
    let nf = accepted as f64;
    let se = |s1: f64, s2: f64| ((s2 / nf - (s1 / nf).powi(2)).max(0.0) / nf).sqrt();
    let prob = nf / n_mc as f64;
    Ok(ConeSpectrumReport {
        alpha: cone_alpha(u, v),
        sigma_max_mc: values[0],
        sigma_min_mc: values[k - 1],
        sigma_max_se: se(tot[0], tot[1]),
        sigma_min_se: se(tot[2], tot[3]),
        prob_mc: prob,
        prob_se: (prob * (1.0 - prob) / n_mc as f64).sqrt(),
        n_mc,
        accepted,
    })
}

/// Floating-point slack allowed when comparing a bound with its left-hand side.
pub const BOUND_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + BOUND_SLACK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PerturbationReport {
    /// `λ2 ≤ λ3`, or `ε ≥ (λ2 − λ3)/2`.
    PreconditionNotMet { epsilon: f64, gap23: f64 },
    Checked {
        epsilon: f64,
        gap12: f64,
        gap23: f64,
        /// `‖ũ_i − P_{T(u1,u2)} ũ_i‖² ≤ 4ε/(λ2 − λ3)` for i = 1, 2.
        space: [BoundCheck; 2],
        /// `‖u1 − ũ1‖² ≤ 4ε/(λ1 − λ2)`, skipped when `λ1 = λ2`.
        u1: Option<BoundCheck>,
        /// `‖u2 − ũ2‖² ≤ 4ε/(λ1 − λ2) + 8ε/(λ2 − λ3)`, skipped when `λ1 = λ2`.
        u2: Option<BoundCheck>,
    },
}

impl PerturbationReport {
    /// True when the precondition held and every evaluated bound held.
    pub fn all_hold(&self) -> bool {
        match self {
            PerturbationReport::PreconditionNotMet { .. } => false,
            PerturbationReport::Checked { space, u1, u2, .. } => {
                space.iter().all(BoundCheck::holds)
                    && u1.as_ref().is_none_or(BoundCheck::holds)
                    && u2.as_ref().is_none_or(BoundCheck::holds)
            }
        }
    }

    pub fn precondition_met(&self) -> bool {
        matches!(self, PerturbationReport::Checked { .. })
    }
}

/// Evaluates the top-2 eigenvector perturbation bounds for `M` against `Σ`.
/// Each `ũ_i` is sign-aligned with `u_i` before measuring distances.
pub fn perturbation_check(sigma: &SymmetricMatrix, m: &SymmetricMatrix) -> Result<PerturbationReport> {
    if sigma.dim() != m.dim() {
        return Err(invalid("matrices have different dimensions"));
    }
    if sigma.dim() < 3 {
        return Err(invalid("perturbation check needs dimension >= 3"));
    }
    let epsilon = crate::linalg::spectral_norm(&m.plus(-1.0, sigma));
    let (lam, u) = symmetric_eigen(sigma);
    let (_, ut) = symmetric_eigen(m);
    let gap12 = lam[0] - lam[1];
    let gap23 = lam[1] - lam[2];
    if !(gap23 > 0.0) || epsilon >= gap23 / 2.0 {
        return Ok(PerturbationReport::PreconditionNotMet { epsilon, gap23 });
    }
    let aligned = |tilde: &[f64], reference: &[f64]| -> Vec<f64> {
        if dot(tilde, reference) < 0.0 {
            tilde.iter().map(|x| -x).collect()
        } else {
            tilde.to_vec()
        }
    };
    let off_span = |w: &[f64]| -> f64 {
        let mut r = w.to_vec();
        for basis in [&u[0], &u[1]] {
            crate::linalg::axpy(-dot(w, basis), basis, &mut r);
        }
        dot(&r, &r)
    };
    let space_rhs = 4.0 * epsilon / gap23;
    let space = [
        BoundCheck {
            lhs: off_span(&ut[0]),
            rhs: space_rhs,
        },
        BoundCheck {
            lhs: off_span(&ut[1]),
            rhs: space_rhs,
        },
    ];
    let scale = lam[0].abs().max(lam[1].abs()).max(f64::MIN_POSITIVE);
    let (u1, u2) = if gap12 > 1e-12 * scale {
        let d1 = sub(&u[0], &aligned(&ut[0], &u[0]));
        let d2 = sub(&u[1], &aligned(&ut[1], &u[1]));
        (
            Some(BoundCheck {
                lhs: dot(&d1, &d1),
                rhs: 4.0 * epsilon / gap12,
            }),
            Some(BoundCheck {
                lhs: dot(&d2, &d2),
                rhs: 4.0 * epsilon / gap12 + 8.0 * epsilon / gap23,
            }),
        )
    } else {
        (None, None)
    };
    Ok(PerturbationReport::Checked {
        epsilon,
        gap12,
        gap23,
        space,
        u1,
        u2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerArm {
    /// The lower bound used `err`.
    Error,
    /// The lower bound used `‖β1* − β2*‖ / 2`.
    HalfSeparation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub err: f64,
    /// `sqrt(L / |S₊|)`
    pub root_mean_loss: f64,
    /// `1.1 err`
    pub upper: f64,
    /// `(1/5) √pmin · min(err, ‖β1* − β2*‖/2)`
    pub lower: f64,
    pub lower_arm: LowerArm,
}

impl SandwichReport {
    pub fn upper_holds(&self) -> bool {
        self.root_mean_loss <= self.upper
    }
    pub fn lower_holds(&self) -> bool {
        self.root_mean_loss >= self.lower
    }
}

/// Brackets the root-mean loss of `est` by its error against `truth`.
/// Requires `|S₊| ≥ c · k / pmin`.
pub fn loss_sandwich_check(
    est: &EstimatePair,
    truth: &MixtureModel,
    obs: &Observations,
    indices: &[usize],
    c: f64,
) -> Result<SandwichReport> {
    if truth.pmin() <= 0.0 {
        return Err(invalid("both mixture proportions must be positive"));
    }
    let needed = c * truth.k() as f64 / truth.pmin();
    if (indices.len() as f64) < needed {
        return Err(invalid(format!(
            "need at least {needed:.0} test samples, have {}",
            indices.len()
        )));
    }
    let err = error_metric(est, truth);
    let half_sep = truth.separation() / 2.0;
    let (arm, lower_arm) = if err <= half_sep {
        (err, LowerArm::Error)
    } else {
        (half_sep, LowerArm::HalfSeparation)
    };
    Ok(SandwichReport {
        err,
        root_mean_loss: (loss(est, obs, indices) / indices.len() as f64).sqrt(),
        upper: 1.1 * err,
        lower: 0.2 * truth.pmin().sqrt() * arm,
        lower_arm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSumInstance {
    values: Vec<f64>,
}

impl SubsetSumInstance {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("SubsetSum instance must be nonempty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("SubsetSum values must be finite"));
        }
        Ok(SubsetSumInstance { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// Direct enumeration: a mask of a subset whose sum equals that of its
    /// complement, if one exists. Lowest mask wins.
    pub fn equal_partition(&self) -> Option<Vec<bool>> {
        let k = self.values.len();
        let total: f64 = self.values.iter().sum();
        let tol = 1e-9 * (1.0 + self.values.iter().map(|v| v.abs()).sum::<f64>());
        (0u64..(1u64 << k)).find_map(|mask| {
            let s: f64 = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| self.values[i]).sum();
            ((2.0 * s - total).abs() <= tol).then(|| (0..k).map(|i| mask >> i & 1 == 1).collect())
        })
    }
}

/// `X = [I_k; I_k; 1ᵀ]`, `y = (a; 0; Σa/2)`.
pub fn hardness_gadget(instance: &SubsetSumInstance) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = instance.k();
    let unit = |i: usize| {
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        e
    };
    let mut rows: Vec<Vec<f64>> = (0..k).map(unit).collect();
    rows.extend((0..k).map(unit));
    rows.push(vec![1.0; k]);
    let mut ys = instance.values.clone();
    ys.extend(std::iter::repeat_n(0.0, k));
    ys.push(instance.values.iter().sum::<f64>() / 2.0);
    (rows, ys)
}

/// Largest system accepted by [`brute_force_mixed_solve`].
pub const MAX_BRUTE_FORCE_ROWS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedSolution {
    pub estimate: EstimatePair,
    /// `true` where the row is explained by `beta1`.
    pub assignment: Vec<bool>,
    pub residual: f64,
}

/// Row space of one group with targets: `q_j` orthonormal and `t_j` such that
/// any consistent row `x` has `y = Σ ⟨x, q_j⟩ t_j`.
#[derive(Clone, Default)]
struct GroupState {
    basis: Vec<(Vec<f64>, f64)>,
}

impl GroupState {
    /// Adds `(x, y)`; false if it contradicts rows already in the group.
    fn push(&mut self, x: &[f64], y: f64, tol: f64) -> bool {
        let mut r = x.to_vec();
        let mut predicted = 0.0;
        for (q, t) in &self.basis {
            let c = dot(x, q);
            crate::linalg::axpy(-c, q, &mut r);
            predicted += c * t;
        }
        let rho = norm(&r);
        if rho <= 1e-10 * norm(x).max(1.0) {
            return (y - predicted).abs() <= tol;
        }
        r.iter_mut().for_each(|v| *v /= rho);
        self.basis.push((r, (y - predicted) / rho));
        true
    }
}

/// Searches all `2^N` label assignments, in increasing order of the assignment
/// index (row 0 most significant, bit set = second group), for one where both
/// groups are fit with total squared residual `≤ tol`. Subtrees whose partial
/// groups are already inconsistent are skipped; adding rows never restores
/// consistency, so no solution is missed. `tol` defaults to `1e-9 (1 + ‖y‖)`.
pub fn brute_force_mixed_solve(rows: &[Vec<f64>], ys: &[f64], tol: Option<f64>) -> Result<Option<MixedSolution>> {
    if rows.is_empty() || rows.len() != ys.len() {
        return Err(invalid("need a nonempty system with one response per row"));
    }
    if rows.len() > MAX_BRUTE_FORCE_ROWS {
        return Err(invalid(format!(
            "brute force is limited to {MAX_BRUTE_FORCE_ROWS} rows, got {}",
            rows.len()
        )));
    }
    let k = rows[0].len();
    if k == 0 || rows.iter().any(|r| r.len() != k) {
        return Err(invalid("rows must share a positive length"));
    }
    let tol = tol.unwrap_or(1e-9 * (1.0 + norm(ys)));
    let mut assignment = Vec::with_capacity(rows.len());
    let mut found = None;
    search(
        rows,
        ys,
        tol,
        &GroupState::default(),
        &GroupState::default(),
        &mut assignment,
        &mut found,
    )?;
    Ok(found)
}

fn search(
    rows: &[Vec<f64>],
    ys: &[f64],
    tol: f64,
    g1: &GroupState,
    g2: &GroupState,
    assignment: &mut Vec<bool>,
    found: &mut Option<MixedSolution>,
) -> Result<()> {
    if found.is_some() {
        return Ok(());
    }
    let i = assignment.len();
    if i == rows.len() {
        if let Some(sol) = verify(rows, ys, assignment, tol)? {
            *found = Some(sol);
        }
        return Ok(());
    }
    for first in [true, false] {
        let (mut a, mut b) = (g1.clone(), g2.clone());
        let ok = if first {
            a.push(&rows[i], ys[i], tol)
        } else {
            b.push(&rows[i], ys[i], tol)
        };
        if ok {
            assignment.push(first);
            search(rows, ys, tol, &a, &b, assignment, found)?;
            assignment.pop();
            if found.is_some() {
                return Ok(());
            }
        }
    }
    Ok(())
}

/// Least-squares refit of both groups; accepts when the total residual is within `tol`.
fn verify(rows: &[Vec<f64>], ys: &[f64], assignment: &[bool], tol: f64) -> Result<Option<MixedSolution>> {
    let k = rows[0].len();
    let fit = |want: bool| -> Result<(Vec<f64>, f64)> {
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| assignment[i] == want).collect();
        if idx.is_empty() {
            return Ok((vec![0.0; k], 0.0));
        }
        let sub_rows: Vec<&[f64]> = idx.iter().map(|&i| rows[i].as_slice()).collect();
        let sub_y: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
        let beta = least_squares(&sub_rows, &sub_y)?;
        let res: f64 = idx.iter().map(|&i| (ys[i] - dot(&rows[i], &beta)).powi(2)).sum();
        Ok((beta, res))
    };
    let (beta1, r1) = fit(true)?;
    let (beta2, r2) = fit(false)?;
    let residual = r1 + r2;
    Ok((residual <= tol).then(|| MixedSolution {
        estimate: EstimatePair { beta1, beta2 },
        assignment: assignment.to_vec(),
        residual,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gadget_layout() {
        let (x, y) = hardness_gadget(&SubsetSumInstance::new(vec![1.0, 1.0]).unwrap());
        assert_eq!(x.len(), 5);
        assert_eq!(x[0], vec![1.0, 0.0]);
        assert_eq!(x[3], vec![0.0, 1.0]);
        assert_eq!(x[4], vec![1.0, 1.0]);
        assert_eq!(y, vec![1.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn single_value_gadget_has_no_solution() {
        let inst = SubsetSumInstance::new(vec![3.0]).unwrap();
        let (x, y) = hardness_gadget(&inst);
        assert_eq!(y[2], 1.5);
        assert!(brute_force_mixed_solve(&x, &y, None).unwrap().is_none());
        assert!(inst.equal_partition().is_none());
    }

    #[test]
    fn solvable_gadget_encodes_partition() {
        let inst = SubsetSumInstance::new(vec![1.0, 2.0, 3.0]).unwrap();
        let (x, y) = hardness_gadget(&inst);
        let sol = brute_force_mixed_solve(&x, &y, None).unwrap().expect("3 = 1 + 2");
        // Each coordinate of each vector is 0 or the matching value; the two are complementary.
        let a = inst.values();
        for i in 0..3 {
            let (b1, b2) = (sol.estimate.beta1[i], sol.estimate.beta2[i]);
            assert!((b1 + b2 - a[i]).abs() < 1e-9);
            assert!(b1.abs() < 1e-9 || (b1 - a[i]).abs() < 1e-9);
        }
        let s: f64 = sol.estimate.beta1.iter().sum();
        assert!((s - 3.0).abs() < 1e-9);
    }

    #[test]
    fn unsolvable_gadget_returns_none() {
        let (x, y) = hardness_gadget(&SubsetSumInstance::new(vec![1.0, 2.0]).unwrap());
        assert!(brute_force_mixed_solve(&x, &y, None).unwrap().is_none());
    }

    #[test]
    fn brute_force_input_limits() {
        let rows = vec![vec![1.0]; 25];
        assert!(brute_force_mixed_solve(&rows, &[0.0; 25], None).is_err());
        assert!(brute_force_mixed_solve(&[], &[], None).is_err());
        assert!(SubsetSumInstance::new(vec![]).is_err());
    }

    #[test]
    fn first_solution_in_index_order() {
        // Rows all equal with targets 1 and 2: rows with target 1 go to the first group.
        let rows = vec![vec![1.0]; 3];
        let sol = brute_force_mixed_solve(&rows, &[1.0, 2.0, 1.0], None).unwrap().unwrap();
        assert_eq!(sol.assignment, vec![true, false, true]);
    }

    #[test]
    fn perturbation_identity_case() {
        let s = SymmetricMatrix::from_diagonal(&[3.0, 2.0, 1.0, 1.0]);
        match perturbation_check(&s, &s).unwrap() {
            PerturbationReport::Checked {
                space, u1, u2, epsilon, ..
            } => {
                assert_eq!(epsilon, 0.0);
                assert!(space.iter().all(|b| b.lhs < 1e-28));
                assert!(u1.unwrap().lhs < 1e-28);
                assert!(u2.unwrap().lhs < 1e-28);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn perturbation_equal_top_eigenvalues_skips_vector_bounds() {
        let s = SymmetricMatrix::from_diagonal(&[2.0, 2.0, 1.0]);
        let m = SymmetricMatrix::new(3, vec![2.0, 0.01, 0.0, 0.01, 2.0, 0.02, 0.0, 0.02, 1.0]).unwrap();
        let r = perturbation_check(&s, &m).unwrap();
        match &r {
            PerturbationReport::Checked { u1, u2, .. } => {
                assert!(u1.is_none() && u2.is_none());
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(r.all_hold());
    }

    #[test]
    fn perturbation_precondition_reported() {
        let s = SymmetricMatrix::from_diagonal(&[3.0, 2.0, 1.9]);
        let m = SymmetricMatrix::from_diagonal(&[3.0, 2.0, 2.5]);
        let r = perturbation_check(&s, &m).unwrap();
        assert!(!r.precondition_met());
    }

    #[test]
    fn cone_alpha_orthogonal_unit_pair() {
        assert!((cone_alpha(&[1.0, 0.0], &[0.0, 1.0]) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn cone_rejects_bad_input() {
        assert!(cone_spectrum_mc(&[0.0, 0.0], &[1.0, 0.0], 20_000, 1, Execution::Sequential).is_err());
        assert!(cone_spectrum_mc(&[1.0, 0.0], &[0.0, 1.0], 100, 1, Execution::Sequential).is_err());
    }

    #[test]
    fn cone_degenerate_event() {
        // With v = 2u the event (xᵀu)² > (xᵀv)² is empty.
        let r = cone_spectrum_mc(&[1.0, 0.0], &[2.0, 0.0], 10_000, 1, Execution::Sequential);
        assert!(matches!(r, Err(Error::DegenerateEvent(_))));
    }

    #[test]
    fn cone_norm_ordering_probabilities() {
        let r = cone_spectrum_mc(&[2.0, 0.0, 0.0], &[0.0, 1.0, 0.0], 100_000, 3, Execution::Sequential).unwrap();
        assert!(r.prob_mc > 0.5);
        let r = cone_spectrum_mc(&[0.1, 0.0, 0.0], &[0.0, 1.0, 0.0], 100_000, 4, Execution::Sequential).unwrap();
        assert!(r.prob_mc <= 0.1 + 3.0 * r.prob_se);
    }

    #[test]
    fn cone_is_schedule_independent() {
        let a = cone_spectrum_mc(&[1.0, 0.3, 0.0], &[0.2, 1.0, 0.5], 20_000, 9, Execution::Sequential).unwrap();
        let b = cone_spectrum_mc(&[1.0, 0.3, 0.0], &[0.2, 1.0, 0.5], 20_000, 9, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sandwich_at_truth_and_far_away() {
        let model = MixtureModel::new(vec![1.0, 0.0], vec![0.0, 1.0], 0.5).unwrap();
        let s = crate::model::generate(&model, 200, 0.0, 1).unwrap();
        let obs = s.observations();
        let r = loss_sandwich_check(&EstimatePair::truth(&model), &model, obs, &obs.all_indices(), 10.0).unwrap();
        assert_eq!(r.err, 0.0);
        assert_eq!(r.lower, 0.0);
        assert!(r.upper_holds() && r.lower_holds());

        let far = EstimatePair::new(vec![5.0, 5.0], vec![-5.0, 5.0]).unwrap();
        let r = loss_sandwich_check(&far, &model, obs, &obs.all_indices(), 10.0).unwrap();
        assert_eq!(r.lower_arm, LowerArm::HalfSeparation);
        assert!((r.lower - 0.2 * 0.5f64.sqrt() * 2f64.sqrt() / 2.0).abs() < 1e-15);

        assert!(loss_sandwich_check(&far, &model, obs, &obs.all_indices(), 100.0).is_err());
    }
}
