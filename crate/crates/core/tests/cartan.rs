//! Commutativity and counts of the abelian subalgebras for every split of
//! every shape up to `4×4`, in exact integer arithmetic.

use bipartite_cartan::bases::{cartan_a_dprime, cartan_a_prime, double_prime_spans, prime_spans};
use bipartite_cartan::{BipartiteShape, SplitPlan};

fn splits(d: usize) -> Vec<(usize, usize)> {
    (1..d).filter(|&r| r >= d - r).map(|r| (r, d - r)).collect()
}

fn all_plans() -> Vec<SplitPlan> {
    let mut out = Vec::new();
    for d1 in 2..=4 {
        for d2 in 2..=4 {
            for (r1, q1) in splits(d1) {
                for (r2, q2) in splits(d2) {
                    out.push(SplitPlan::new(r1, q1, r2, q2).unwrap());
                }
            }
        }
    }
    out
}

#[test]
fn first_family_commutes_exactly() {
    for p in all_plans() {
        let a = cartan_a_prime(p);
        assert_eq!(a.dim(), p.r1 * p.q2 + p.q1 * p.r2, "{p:?}");
        for x in &a.elements {
            assert!(x.is_integer());
            for y in &a.elements {
                assert_eq!(x.commutator(y).max_abs(), 0.0, "{p:?}");
            }
        }
    }
}

#[test]
fn second_family_commutes_exactly() {
    for p in all_plans() {
        let a = cartan_a_dprime(p);
        assert_eq!(a.dim(), p.q1 * p.q2 + (p.r1 * p.q2).min(p.q1 * p.r2), "{p:?}");
        for x in &a.elements {
            assert!(x.is_integer());
            for y in &a.elements {
                assert_eq!(x.commutator(y).max_abs(), 0.0, "{p:?}");
            }
        }
    }
}

#[test]
fn families_sit_in_their_complements() {
    for p in all_plans() {
        let shape: BipartiteShape = p.shape();
        let (_, pp) = prime_spans(shape, p).unwrap();
        let (_, pdd) = double_prime_spans(shape, p).unwrap();
        for x in &cartan_a_prime(p).elements {
            assert!(pp.projection_residual(x) < 1e-12, "{p:?}");
        }
        for x in &cartan_a_dprime(p).elements {
            assert!(pdd.projection_residual(x) < 1e-12, "{p:?}");
        }
    }
}
