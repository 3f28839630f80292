use isolab::prooftrace::{run_pipeline, DEFAULT_C};
use isolab::structure::check_isomorphism;
use isolab::testbed::{generate_one, EnsembleKind};
use isolab::{Error, IndexMeasure, Matrix, SubsetMask};

#[test]
fn random_traces_are_sound() {
    for seed in 0..12 {
        for (eps, c) in [(0.3, 1.5), (0.5, DEFAULT_C), (0.3, 3.0)] {
            let t = generate_one(EnsembleKind::GaussianNormalized, 8, seed).unwrap().scaled(1.7);
            let tr = run_pipeline(&t, eps, &IndexMeasure::counting(8), c).unwrap();
            assert!(tr.passed && tr.first_failure().is_none());
            assert!(tr.sigma2_mask().is_subset_of(&tr.sigma1_mask()));
            assert!(check_isomorphism(&t, eps, &tr.sigma2_mask(), 1e-9).unwrap());
            if !tr.short_circuited {
                let d = tr.delta.unwrap();
                assert!(d >= eps / (c * c + 1.0) - 1e-9);
            }
        }
    }
}

#[test]
fn bt_optimum_equals_best_subset_of_sigma1() {
    for seed in 20..30 {
        let t = generate_one(EnsembleKind::RankDeficient(3), 7, seed).unwrap();
        let mu = IndexMeasure::general((0..7).map(|i| 1.0 + i as f64 * 0.1).collect()).unwrap();
        let tr = run_pipeline(&t, 0.4, &mu, 2.0).unwrap();
        let best = tr
            .sigma1_mask()
            .subsets()
            .filter(|s| check_isomorphism(&t, 0.4, s, 1e-9).unwrap())
            .map(|s| mu.value(&s))
            .fold(0.0, f64::max);
        assert!((tr.mu_value - best).abs() < 1e-12, "seed {seed}");
    }
}

#[test]
fn failed_trace_carries_ledger() {
    // Not reachable with consistent numerics; check the error shape instead.
    let err = run_pipeline(&Matrix::zeros(3, 3), 0.5, &IndexMeasure::counting(3), 2.0).unwrap_err();
    assert!(matches!(err, Error::DegenerateInput(_)));
    let tr = run_pipeline(&Matrix::identity(3), 0.5, &IndexMeasure::counting(3), 2.0).unwrap();
    assert_eq!(tr.sigma2_mask(), SubsetMask::full(3));
}
