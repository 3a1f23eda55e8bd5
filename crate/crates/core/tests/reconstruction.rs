use bipartite_cartan::classify::{annotate, inventory};
use bipartite_cartan::recursion::Locality;
use bipartite_cartan::sample::{random_special_orthogonal, random_unitary};
use bipartite_cartan::{recursive_decompose, BipartiteShape, SplitPlan, SplitStrategy, Tolerance};

fn run(d1: usize, d2: usize, seeds: std::ops::Range<u64>, strategy: &SplitStrategy) {
    let tol = Tolerance::default();
    let shape = BipartiteShape::new(d1, d2).unwrap();
    for seed in seeds {
        let u = random_unitary(d1 * d2, seed);
        let t = recursive_decompose(&u, shape, strategy, &tol).unwrap();
        assert!(t.residual() <= 1e-8, "{d1}x{d2} seed {seed}: {}", t.residual());
        assert!(t.max_block_pattern_residual() <= 1e-10);
        assert!(t.max_membership_residual() <= 1e-12);
    }
}

#[test]
fn random_unitaries_of_six() {
    run(2, 3, 0..50, &SplitStrategy::Balanced);
}

#[test]
fn random_unitaries_of_four() {
    run(2, 2, 0..50, &SplitStrategy::Balanced);
}

#[test]
fn larger_and_skewed_shapes() {
    run(3, 3, 0..5, &SplitStrategy::Balanced);
    run(
        2,
        4,
        0..5,
        &SplitStrategy::Explicit(vec![SplitPlan::new(1, 1, 2, 2).unwrap()]),
    );
    run(
        3,
        4,
        0..3,
        &SplitStrategy::Explicit(vec![SplitPlan::new(2, 1, 3, 1).unwrap()]),
    );
    run(4, 3, 0..3, &SplitStrategy::Balanced);
}

#[test]
fn orthogonal_inputs() {
    let tol = Tolerance::default();
    let shape = BipartiteShape::new(3, 2).unwrap();
    for seed in 0..10 {
        let k = random_special_orthogonal(6, seed);
        let t = recursive_decompose(&k, shape, &SplitStrategy::Balanced, &tol).unwrap();
        assert!(t.residual() <= 1e-9);
        assert!(t.root[1].leaves().is_empty());
    }
}

#[test]
fn every_factor_is_classified() {
    let tol = Tolerance::default();
    let shape = BipartiteShape::new(2, 3).unwrap();
    let mut t = recursive_decompose(&random_unitary(6, 9), shape, &SplitStrategy::Balanced, &tol).unwrap();
    annotate(&mut t, &tol).unwrap();
    let entangling = t
        .factors
        .iter()
        .filter(|f| f.locality == Some(Locality::Entangling))
        .count();
    let inv = inventory(&t, &tol).unwrap();
    assert_eq!(inv.entries.iter().map(|e| e.count).sum::<usize>(), entangling);
}
