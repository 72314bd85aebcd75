//! Dense linear algebra checked against nalgebra.

use mlr_core::linalg::{least_squares, spectral_norm, symmetric_eigen, top2_eig, SymmetricMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_symmetric(k: usize, rng: &mut ChaCha8Rng) -> SymmetricMatrix {
    let entries: Vec<f64> = (0..k * k).map(|_| rng.sample(StandardNormal)).collect();
    SymmetricMatrix::new(k, entries).unwrap()
}

fn to_nalgebra(m: &SymmetricMatrix) -> DMatrix<f64> {
    let k = m.dim();
    DMatrix::from_fn(k, k, |i, j| m.get(i, j))
}

/// Eigenvalues of `m` in nonincreasing order with matching unit eigenvectors.
fn reference_eigen(m: &SymmetricMatrix) -> Vec<(f64, Vec<f64>)> {
    let eig = to_nalgebra(m).symmetric_eigen();
    let mut pairs: Vec<(f64, Vec<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, eig.eigenvectors.column(i).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

fn sign_free_distance(a: &[f64], b: &[f64]) -> f64 {
    let plus: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let minus: f64 = a.iter().zip(b).map(|(x, y)| (x + y).powi(2)).sum();
    plus.min(minus).sqrt()
}

#[test]
fn jacobi_spectrum_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in [2, 3, 6, 10, 25] {
        for _ in 0..10 {
            let m = random_symmetric(k, &mut rng);
            let (values, vectors) = symmetric_eigen(&m);
            let reference = reference_eigen(&m);
            for (i, (l, v)) in reference.iter().enumerate() {
                assert!((values[i] - l).abs() <= 1e-9 * (1.0 + l.abs()), "k={k} i={i}");
                let gap = reference
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, (o, _))| (o - l).abs())
                    .fold(f64::INFINITY, f64::min);
                if gap > 1e-3 {
                    assert!(sign_free_distance(&vectors[i], v) < 1e-7, "k={k} i={i}");
                }
            }
        }
    }
}

#[test]
fn top2_matches_reference_on_random_6x6() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    while checked < 50 {
        let m = random_symmetric(6, &mut rng);
        let reference = reference_eigen(&m);
        if reference[0].0 - reference[1].0 < 1e-3 || reference[1].0 - reference[2].0 < 1e-3 {
            continue;
        }
        let top = top2_eig(&m, 1e-12, 10_000).unwrap();
        assert!((top.first.value - reference[0].0).abs() < 1e-8);
        assert!((top.second.value - reference[1].0).abs() < 1e-8);
        assert!(sign_free_distance(&top.first.vector, &reference[0].1) < 1e-8);
        assert!(sign_free_distance(&top.second.vector, &reference[1].1) < 1e-8);
        checked += 1;
    }
}

#[test]
fn top2_orthonormal_with_small_residual_on_many_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let tol = 1e-10;
    let mut checked = 0;
    while checked < 1000 {
        let k = rng.random_range(2..=12);
        let m = random_symmetric(k, &mut rng);
        let reference = reference_eigen(&m);
        let gaps_ok = reference.windows(2).take(2).all(|w| w[0].0 - w[1].0 >= 1e-3);
        if !gaps_ok {
            continue;
        }
        let top = top2_eig(&m, tol, 10_000).unwrap();
        let norm = spectral_norm(&m);
        let (a, b) = (&top.first.vector, &top.second.vector);
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        assert!((dot(a, a) - 1.0).abs() < 1e-8);
        assert!((dot(b, b) - 1.0).abs() < 1e-8);
        assert!(dot(a, b).abs() < 1e-8);
        assert!(top.first.value >= top.second.value);
        for pair in [&top.first, &top.second] {
            let mv = m.mul_vec(&pair.vector);
            let r: f64 = mv
                .iter()
                .zip(&pair.vector)
                .map(|(x, v)| (x - pair.value * v).powi(2))
                .sum::<f64>();
            assert!(r.sqrt() <= tol * norm, "k={k} residual {}", r.sqrt());
        }
        checked += 1;
    }
}

#[test]
fn spectral_norm_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in [1, 2, 5, 5, 5, 9, 30] {
        let m = random_symmetric(k, &mut rng);
        let expected = to_nalgebra(&m)
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |a, l| a.max(l.abs()));
        assert!((spectral_norm(&m) - expected).abs() <= 1e-8 * expected, "k={k}");
    }
}

fn random_rows(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..k).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

fn pinv_solution(rows: &[Vec<f64>], ys: &[f64]) -> Vec<f64> {
    let k = rows[0].len();
    let x = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
    let pinv = x.pseudo_inverse(1e-10).unwrap();
    (pinv * DVector::from_column_slice(ys)).iter().copied().collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn least_squares_matches_pseudo_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (n, k) in [(10, 3), (50, 20), (5, 5), (2, 3), (4, 9), (100, 50)] {
        let rows = random_rows(n, k, &mut rng);
        let ys: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let got = least_squares(&rows, &ys).unwrap();
        let want = pinv_solution(&rows, &ys);
        let scale = want.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        assert!(max_abs_diff(&got, &want) <= 1e-8 * scale, "n={n} k={k}");
    }
}

#[test]
fn least_squares_rank_deficient_matches_pseudo_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (n, k, rank) in [(12, 6, 3), (30, 10, 1), (8, 8, 5)] {
        let left = random_rows(n, rank, &mut rng);
        let right = random_rows(rank, k, &mut rng);
        let rows: Vec<Vec<f64>> = left
            .iter()
            .map(|l| (0..k).map(|j| (0..rank).map(|r| l[r] * right[r][j]).sum()).collect())
            .collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let got = least_squares(&rows, &ys).unwrap();
        let want = pinv_solution(&rows, &ys);
        let scale = want.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        assert!(max_abs_diff(&got, &want) <= 1e-7 * scale, "n={n} k={k} rank={rank}");
    }
}

#[test]
fn least_squares_recovers_consistent_systems_up_to_k50() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for k in [1, 2, 7, 20, 50] {
        let rows = random_rows(2 * k + 3, k, &mut rng);
        let beta: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let ys: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum())
            .collect();
        let got = least_squares(&rows, &ys).unwrap();
        let err: f64 = got.iter().zip(&beta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(err <= 1e-8 * nb, "k={k}");
    }
}
