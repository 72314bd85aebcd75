//! Dense kernels: vector helpers, a symmetric matrix type, top-2 eigenpairs by
//! block orthogonal iteration, a full Jacobi eigensolver, minimum-norm least
//! squares by pivoted Householder QR, and two-dimensional projections.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};

/// Residual tolerance for [`top2_eig`], relative to the spectral norm.
pub const EIG_TOL: f64 = 1e-10;
/// Iteration cap for [`top2_eig`].
pub const EIG_MAX_ITER: usize = 10_000;

const SIGN_THRESHOLD: f64 = 1e-12;
const ORTHONORMAL_TOL: f64 = 1e-8;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Flips `v` so that its first coordinate above `1e-12` in magnitude is positive.
pub fn canonical_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > SIGN_THRESHOLD) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Dense symmetric matrix, row-major. Symmetrized exactly on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds from row-major entries, replacing `a_ij` and `a_ji` by their mean.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("matrix dimension must be positive"));
        }
        if entries.len() != dim * dim {
            return Err(invalid(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        let mut m = SymmetricMatrix { dim, data: entries };
        m.symmetrize();
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * dim + i] = *d;
        }
        m
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        let mut m = SymmetricMatrix { dim, data };
        m.symmetrize();
        m
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Adds `w * v vᵀ`.
    pub fn add_outer(&mut self, w: f64, v: &[f64]) {
        let n = self.dim;
        for i in 0..n {
            let wi = w * v[i];
            let row = &mut self.data[i * n..(i + 1) * n];
            for j in 0..n {
                row[j] += wi * v[j];
            }
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymmetricMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// Entrywise `self + s * other`.
    pub fn plus(&self, s: f64, other: &SymmetricMatrix) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        SymmetricMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    /// Lower bound on the smallest eigenvalue from Gershgorin discs.
    fn gershgorin_lower(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                let off: f64 = (0..self.dim).filter(|&j| j != i).map(|j| self.get(i, j).abs()).sum();
                self.get(i, i) - off
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// The two leading eigenpairs, `first.value >= second.value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Top2 {
    pub first: EigenPair,
    pub second: EigenPair,
    /// Set when `first.value - second.value < 1e-8 * ||M||`; the vectors are
    /// then only determined up to a rotation within their span.
    pub degenerate: bool,
    pub iterations: usize,
}

/// Full spectrum of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are sorted in nonincreasing order; `vectors[i]` pairs with `values[i]`.
pub fn symmetric_eigen(m: &SymmetricMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.dim;
    let mut a = m.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&c| {
            let mut col: Vec<f64> = (0..n).map(|r| v[r * n + c]).collect();
            canonical_sign(&mut col);
            col
        })
        .collect();
    (values, vectors)
}

/// Largest absolute eigenvalue.
pub fn spectral_norm(m: &SymmetricMatrix) -> f64 {
    let (values, _) = symmetric_eigen(m);
    values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Orthonormalizes the columns in place (two passes of modified Gram-Schmidt).
/// Columns that collapse are replaced by fresh random directions.
fn orthonormalize(block: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    for j in 0..block.len() {
        let mut attempts = 0;
        loop {
            let original = norm(&block[j]);
            for _ in 0..2 {
                for i in 0..j {
                    let (head, tail) = block.split_at_mut(j);
                    let c = dot(&head[i], &tail[0]);
                    axpy(-c, &head[i], &mut tail[0]);
                }
            }
            let nrm = norm(&block[j]);
            if nrm > 1e-10 * original.max(f64::MIN_POSITIVE) && nrm > 0.0 {
                block[j].iter_mut().for_each(|x| *x /= nrm);
                break;
            }
            attempts += 1;
            assert!(attempts < 100, "cannot extend orthonormal block");
            for x in block[j].iter_mut() {
                *x = StandardNormal.sample(rng);
            }
        }
    }
}

/// Top two eigenpairs by block orthogonal iteration with Rayleigh-Ritz
/// extraction. The block carries a few guard vectors beyond the two wanted
/// so convergence is governed by the gap below the block, not below λ2.
pub fn top2_eig(m: &SymmetricMatrix, tol: f64, max_iter: usize) -> Result<Top2> {
    let n = m.dim;
    if n < 2 {
        return Err(invalid("top2_eig requires dimension >= 2"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    // Shift to a positive semidefinite matrix so that the dominant block is the
    // algebraically largest one.
    let shift = (-m.gershgorin_lower()).max(0.0);
    let block_size = n.min(8);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_e16e);
    let mut block: Vec<Vec<f64>> = (0..block_size)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    orthonormalize(&mut block, &mut rng);

    let mut last_residual = f64::INFINITY;
    for iter in 1..=max_iter.max(1) {
        // Rayleigh-Ritz on the current block.
        let images: Vec<Vec<f64>> = block.iter().map(|q| m.mul_vec(q)).collect();
        let h = SymmetricMatrix::from_fn(block_size, |i, j| dot(&block[i], &images[j]));
        let (theta, s) = symmetric_eigen(&h);
        let ritz = |c: usize, src: &[Vec<f64>]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (i, q) in src.iter().enumerate() {
                axpy(s[c][i], q, &mut out);
            }
            out
        };
        let norm_est = theta.iter().fold(0.0_f64, |acc, t| acc.max(t.abs()));
        let mut residual: f64 = 0.0;
        let mut pairs = Vec::with_capacity(2);
        for c in 0..2 {
            let y = ritz(c, &block);
            let my = ritz(c, &images);
            let mut r = my.clone();
            axpy(-theta[c], &y, &mut r);
            residual = residual.max(norm(&r));
            pairs.push(EigenPair {
                value: theta[c],
                vector: y,
            });
        }
        last_residual = residual;
        if residual <= tol * norm_est || norm_est == 0.0 || block_size == n {
            for p in pairs.iter_mut() {
                let nrm = norm(&p.vector);
                p.vector.iter_mut().for_each(|x| *x /= nrm);
                canonical_sign(&mut p.vector);
            }
            let second = pairs.pop().expect("two pairs");
            let first = pairs.pop().expect("two pairs");
            let degenerate = first.value - second.value < 1e-8 * norm_est;
            return Ok(Top2 {
                first,
                second,
                degenerate,
                iterations: iter,
            });
        }
        // Power step on the shifted matrix, seeded with the Ritz basis.
        let ritz_basis: Vec<Vec<f64>> = (0..block_size).map(|c| ritz(c, &block)).collect();
        block = ritz_basis
            .iter()
            .map(|q| {
                let mut z = m.mul_vec(q);
                axpy(shift, q, &mut z);
                z
            })
            .collect();
        orthonormalize(&mut block, &mut rng);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: last_residual,
    })
}

/// `P_T v` for the span of two orthonormal vectors.
pub fn project_onto_span(v: &[f64], b1: &[f64], b2: &[f64]) -> Result<Vec<f64>> {
    if v.len() != b1.len() || v.len() != b2.len() {
        return Err(invalid("dimension mismatch in projection"));
    }
    if (norm(b1) - 1.0).abs() > ORTHONORMAL_TOL
        || (norm(b2) - 1.0).abs() > ORTHONORMAL_TOL
        || dot(b1, b2).abs() > ORTHONORMAL_TOL
    {
        return Err(invalid("projection basis is not orthonormal"));
    }
    let mut out = scale(b1, dot(v, b1));
    axpy(dot(v, b2), b2, &mut out);
    Ok(out)
}

/// Column-major dense matrix used inside the QR routines.
struct ColMajor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ColMajor {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }
    fn col_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }
}

/// Householder reflector stored as (start row, v, tau): H = I - tau v vᵀ acting on rows start..
struct Reflector {
    start: usize,
    v: Vec<f64>,
    tau: f64,
}

impl Reflector {
    fn apply(&self, x: &mut [f64]) {
        let tail = &mut x[self.start..];
        let s = self.tau * dot(&self.v, tail);
        axpy(-s, &self.v, tail);
    }
}

/// Builds the reflector that maps `x` onto `∓||x|| e1`. Returns the new leading value.
fn make_reflector(start: usize, x: &[f64]) -> (Reflector, f64) {
    let alpha = norm(x);
    if alpha == 0.0 {
        return (
            Reflector {
                start,
                v: vec![0.0; x.len()],
                tau: 0.0,
            },
            0.0,
        );
    }
    let beta = if x[0] >= 0.0 { -alpha } else { alpha };
    let mut v = x.to_vec();
    v[0] -= beta;
    let vnorm2 = dot(&v, &v);
    let tau = if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 };
    (Reflector { start, v, tau }, beta)
}

/// Householder QR with column pivoting. Overwrites `a` with R in its upper
/// triangle; returns reflectors and the column permutation.
fn pivoted_qr(a: &mut ColMajor) -> (Vec<Reflector>, Vec<usize>) {
    let (m, n) = (a.rows, a.cols);
    let steps = m.min(n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors = Vec::with_capacity(steps);
    for j in 0..steps {
        // Pivot on the largest remaining column norm (recomputed; sizes are small).
        let best = (j..n)
            .max_by(|&p, &q| {
                let np: f64 = (j..m).map(|r| a.at(r, p).powi(2)).sum();
                let nq: f64 = (j..m).map(|r| a.at(r, q).powi(2)).sum();
                np.total_cmp(&nq).then(q.cmp(&p))
            })
            .expect("nonempty range");
        if best != j {
            for r in 0..m {
                a.data.swap(j * m + r, best * m + r);
            }
            perm.swap(j, best);
        }
        let x: Vec<f64> = (j..m).map(|r| a.at(r, j)).collect();
        let (h, beta) = make_reflector(j, &x);
        for c in (j + 1)..n {
            h.apply(a.col_mut(c));
        }
        let col = a.col_mut(j);
        col[j] = beta;
        for r in (j + 1)..m {
            col[r] = 0.0;
        }
        reflectors.push(h);
    }
    (reflectors, perm)
}

/// Minimum-norm least-squares solution of `rows · β ≈ targets`.
///
/// Uses column-pivoted Householder QR; when the numerical rank `r` is below the
/// column count, a second QR of the leading `r` rows of `R` (a complete
/// orthogonal decomposition) picks the minimizer orthogonal to the null space.
pub fn least_squares<R: AsRef<[f64]>>(rows: &[R], targets: &[f64]) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(invalid("least squares requires at least one row"));
    }
    if rows.len() != targets.len() {
        return Err(invalid("row and target counts differ"));
    }
    let k = rows[0].as_ref().len();
    if k == 0 {
        return Err(invalid("rows must have positive length"));
    }
    if rows.iter().any(|r| r.as_ref().len() != k) {
        return Err(invalid("rows have inconsistent lengths"));
    }
    let m = rows.len();
    let mut a = ColMajor {
        rows: m,
        cols: k,
        data: vec![0.0; m * k],
    };
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.as_ref().iter().enumerate() {
            a.data[j * m + i] = *v;
        }
    }
    let (reflectors, perm) = pivoted_qr(&mut a);
    let mut c = targets.to_vec();
    for h in &reflectors {
        h.apply(&mut c);
    }
    let steps = m.min(k);
    let r00 = a.at(0, 0).abs();
    let rank_tol = (m.max(k) as f64) * f64::EPSILON * 10.0 * r00;
    let rank = (0..steps).take_while(|&j| a.at(j, j).abs() > rank_tol).count();

    let mut z = vec![0.0; k];
    if rank == k {
        for j in (0..k).rev() {
            let mut s = c[j];
            for l in (j + 1)..k {
                s -= a.at(j, l) * z[l];
            }
            z[j] = s / a.at(j, j);
        }
    } else if rank > 0 {
        // [R11 R12] is rank x k. Factor its transpose (k x rank) = Z L.
        let mut bt = ColMajor {
            rows: k,
            cols: rank,
            data: vec![0.0; k * rank],
        };
        for i in 0..rank {
            for j in i..k {
                bt.data[i * k + j] = a.at(i, j);
            }
        }
        let mut refl2 = Vec::with_capacity(rank);
        for j in 0..rank {
            let x: Vec<f64> = (j..k).map(|r| bt.at(r, j)).collect();
            let (h, beta) = make_reflector(j, &x);
            for cc in (j + 1)..rank {
                h.apply(bt.col_mut(cc));
            }
            let col = bt.col_mut(j);
            col[j] = beta;
            for r in (j + 1)..k {
                col[r] = 0.0;
            }
            refl2.push(h);
        }
        // [R11 R12] = Lᵀ Zᵀ with L upper triangular (rank x rank), so solve
        // Lᵀ w = c[..rank] by forward substitution, then z = Z [w; 0].
        let mut w = vec![0.0; k];
        for i in 0..rank {
            let mut s = c[i];
            for l in 0..i {
                s -= bt.at(l, i) * w[l];
            }
            w[i] = s / bt.at(i, i);
        }
        for h in refl2.iter().rev() {
            h.apply(&mut w);
        }
        z = w;
    }
    let mut beta = vec![0.0; k];
    for (j, &p) in perm.iter().enumerate() {
        beta[p] = z[j];
    }
    Ok(beta)
}
