mod common;

use common::{cubic_eigs, dense, random_symmetric};
use isolab::linalg;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn jacobi_matches_cubic_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let a = random_symmetric(&mut rng, 3);
        let got = linalg::sym_eigs(&a).unwrap().eigenvalues;
        let want = cubic_eigs(&dense(&a));
        for k in 0..3 {
            worst = worst.max((got[k] - want[k]).abs());
        }
    }
    assert!(worst <= 1e-9, "max error {worst:e}");
}

#[test]
fn repeated_and_diagonal_cases() {
    let a = isolab::Matrix::from_rows(&[[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, -1.0]]).unwrap();
    assert_eq!(linalg::sym_eigs(&a).unwrap().eigenvalues, vec![-1.0, 2.0, 2.0]);
    // All-ones: eigenvalues 0, 0, 3.
    let ones = isolab::Matrix::from_rows(&[[1.0; 3]; 3]).unwrap();
    let got = linalg::sym_eigs(&ones).unwrap().eigenvalues;
    let want = cubic_eigs(&dense(&ones));
    for k in 0..3 {
        assert!((got[k] - want[k]).abs() < 1e-12);
    }
    assert!((got[2] - 3.0).abs() < 1e-12);
}

#[test]
fn eigenpairs_reconstruct_larger_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [1, 2, 5, 9, 16] {
        let a = random_symmetric(&mut rng, n);
        let eig = linalg::sym_eigen(&a).unwrap();
        for k in 0..n {
            let v = eig.vector(k);
            let av = a.mat_vec(&v);
            let lam = eig.spectrum.eigenvalues[k];
            let resid: f64 = av.iter().zip(&v).map(|(x, y)| (x - lam * y).powi(2)).sum::<f64>().sqrt();
            assert!(resid < 1e-9, "n={n} k={k} residual {resid:e}");
        }
        let sum_sq: f64 = eig.spectrum.eigenvalues.iter().map(|x| x * x).sum();
        let hs = linalg::hs_norm(&a);
        assert!((sum_sq - hs * hs).abs() < 1e-9 * (1.0 + hs * hs));
    }
}
