use isolab::structure;
use isolab::testbed::{doubling, doubling_collisions, random_subset_rate};

#[test]
fn no_member_holds_a_colliding_pair() {
    for n in 1..=12 {
        let t = doubling(n);
        let pairs = doubling_collisions(n);
        assert_eq!(pairs.len(), (n - 1) / 2);
        for eps in [0.1, 0.5, 0.9, 0.99] {
            let fam = structure::isomorphism_family(&t, eps, 1e-9).unwrap();
            for m in fam.maximal_sets() {
                for &(a, b) in &pairs {
                    assert!(!(m.contains(a) && m.contains(b)), "n={n} eps={eps} {m}");
                }
            }
            // Every member avoids every pair, and every such set is a member.
            assert_eq!(fam.member_count(), (1usize << (n - 2 * pairs.len())) * 3usize.pow(pairs.len() as u32));
        }
    }
}

#[test]
fn rate_matches_three_quarters_power() {
    for n in 1..=12 {
        let r = random_subset_rate(n, 0.5, 4000, 1).unwrap();
        let exact = r.exact.unwrap();
        assert!((exact - r.analytic).abs() < 1e-15, "n={n}");
        assert!((r.estimate - exact).abs() <= 3.0 * r.std_error + 1e-12, "n={n}");
    }
    assert_eq!(random_subset_rate(4, 0.5, 10, 0).unwrap().exact, Some(0.75));
    assert_eq!(random_subset_rate(2, 0.5, 10, 0).unwrap().exact, Some(1.0));
}
