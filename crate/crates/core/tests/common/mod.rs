//! Oracles that share no numerical code with the library: closed-form cubic
//! roots, power iteration, Rayleigh-quotient sampling and brute-force subset
//! scans.

#![allow(dead_code)]

use isolab::{Matrix, SubsetMask};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn dense(m: &Matrix) -> Dense {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect()).collect()
}

/// Eigenvalues of a symmetric 3×3 matrix from the characteristic polynomial,
/// ascending. Trigonometric form of the depressed cubic.
pub fn cubic_eigs(a: &Dense) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut d = [a[0][0], a[1][1], a[2][2]];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b: Dense = (0..3)
        .map(|i| (0..3).map(|j| (a[i][j] - if i == j { q } else { 0.0 }) / p).collect())
        .collect();
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let mid = 3.0 * q - hi - lo;
    [lo, mid, hi]
}

fn mat_vec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Largest eigenvalue of a positive semidefinite matrix with its eigenvector.
fn power_top(a: &Dense, iterations: usize) -> (f64, Vec<f64>) {
    let k = a.len();
    // Generic start vector so no eigenvector is missed by symmetry.
    let mut v = unit((0..k).map(|i| 1.0 + 0.1 * (i as f64 + 1.0).sqrt()).collect());
    let mut last = f64::NAN;
    for _ in 0..iterations {
        let w = mat_vec(a, &v);
        if dot(&w, &w) == 0.0 {
            break;
        }
        v = unit(w);
        // Slow progress only happens with a tiny eigengap, where the
        // Rayleigh quotient is already close to the top eigenvalue.
        let q = dot(&mat_vec(a, &v), &v);
        if (q - last).abs() <= 1e-15 * q.abs().max(1.0) {
            break;
        }
        last = q;
    }
    (dot(&mat_vec(a, &v), &v), v)
}

/// `(λ_min, λ_max)` of a positive semidefinite matrix by power iteration on
/// `A` and on `tr(A)·I − A`, returning the Rayleigh quotients of both vectors.
pub fn power_extremes(a: &Dense, iterations: usize) -> (f64, f64) {
    let k = a.len();
    let (_, top) = power_top(a, iterations);
    let trace: f64 = (0..k).map(|i| a[i][i]).sum();
    let shifted: Dense = (0..k)
        .map(|i| (0..k).map(|j| if i == j { trace - a[i][j] } else { -a[i][j] }).collect())
        .collect();
    let (_, bottom) = power_top(&shifted, iterations);
    (dot(&mat_vec(a, &bottom), &bottom), dot(&mat_vec(a, &top), &top))
}

/// Normalized columns of `t` indexed by σ, skipping zero columns.
pub fn normalized_columns(t: &Matrix, sigma: &SubsetMask) -> Vec<Vec<f64>> {
    sigma
        .iter()
        .filter_map(|j| {
            let col: Vec<f64> = (0..t.rows()).map(|i| t.get(i, j)).collect();
            let n = dot(&col, &col).sqrt();
            (n > 0.0).then(|| col.iter().map(|x| x / n).collect())
        })
        .collect()
}

fn gram_of(cols: &[Vec<f64>]) -> Dense {
    cols.iter().map(|a| cols.iter().map(|b| dot(a, b)).collect()).collect()
}

/// Extremes of `‖Σ x_i t̂_i‖² / ‖x‖²` over `samples` random Gaussian `x` plus
/// the power-iteration extremal vectors. Inner approximation of the spectrum.
pub fn rayleigh_extremes(t: &Matrix, sigma: &SubsetMask, samples: usize, rng: &mut ChaCha8Rng) -> Option<(f64, f64)> {
    let cols = normalized_columns(t, sigma);
    if cols.is_empty() {
        return None;
    }
    let g = gram_of(&cols);
    let (mut lo, mut hi) = power_extremes(&g, 3000);
    for _ in 0..samples {
        let x: Vec<f64> = (0..cols.len()).map(|_| gaussian(rng)).collect();
        let q = dot(&mat_vec(&g, &x), &x) / dot(&x, &x);
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Some((lo, hi))
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Membership decided from sampled quotients. Sets with at most one nonzero
/// column are members.
pub fn oracle_member(t: &Matrix, eps: f64, sigma: &SubsetMask, tau: f64, rng: &mut ChaCha8Rng) -> bool {
    if normalized_columns(t, sigma).len() <= 1 {
        return true;
    }
    let (lo, hi) = rayleigh_extremes(t, sigma, 1000, rng).expect("nonempty");
    lo >= 1.0 - eps - tau && hi <= 1.0 + eps + tau
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| gaussian(rng)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let x = rng.random_range(-1.0..1.0);
            data[i * n + j] = x;
            data[j * n + i] = x;
        }
    }
    Matrix::new(n, n, data).unwrap()
}

/// All subsets of `{0..n}` satisfying `pred`.
pub fn brute_members(n: usize, mut pred: impl FnMut(&SubsetMask) -> bool) -> Vec<SubsetMask> {
    (0..1u64 << n)
        .map(|b| SubsetMask::from_bits(n, b).unwrap())
        .filter(|s| pred(s))
        .collect()
}

/// Largest eigenvalue modulus of a symmetric matrix by brute power iteration
/// on its square.
pub fn sym_norm(a: &Dense) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sq: Dense = (0..a.len())
        .map(|i| (0..a.len()).map(|j| (0..a.len()).map(|k| a[i][k] * a[k][j]).sum()).collect())
        .collect();
    power_top(&sq, 3000).0.max(0.0).sqrt()
}

pub fn restrict(a: &Dense, sigma: &SubsetMask) -> Dense {
    let idx = sigma.indices();
    idx.iter().map(|&i| idx.iter().map(|&j| a[i][j]).collect()).collect()
}
