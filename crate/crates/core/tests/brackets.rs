use bipartite_cartan::bases::{bipartite_spans, bracket_residual, prime_spans};
use bipartite_cartan::{BipartiteShape, SplitPlan};

const SHAPES: [(usize, usize); 4] = [(2, 2), (2, 3), (2, 4), (3, 3)];

fn splits(d: usize) -> Vec<(usize, usize)> {
    (1..d).filter(|&r| r >= d - r).map(|r| (r, d - r)).collect()
}

#[test]
fn first_split_is_a_cartan_pair() {
    for (d1, d2) in SHAPES {
        let n = d1 * d2;
        let (k, p, _) = bipartite_spans(BipartiteShape::new(d1, d2).unwrap());
        assert_eq!(k.dim(), n * (n - 1) / 2);
        assert_eq!(p.dim(), n * (n + 1) / 2);
        assert!(bracket_residual(&k, &k, &k) <= 1e-12);
        assert!(bracket_residual(&p, &p, &k) <= 1e-12);
        assert!(bracket_residual(&k, &p, &p) <= 1e-12);
    }
}

#[test]
fn refined_split_is_a_cartan_pair() {
    for (d1, d2) in SHAPES {
        let shape = BipartiteShape::new(d1, d2).unwrap();
        for (r1, q1) in splits(d1) {
            for (r2, q2) in splits(d2) {
                let plan = SplitPlan::new(r1, q1, r2, q2).unwrap();
                let (k, p) = prime_spans(shape, plan).unwrap();
                let (r, q) = (plan.r(), plan.q());
                assert_eq!(k.dim(), r * (r - 1) / 2 + q * (q - 1) / 2);
                assert!(bracket_residual(&k, &k, &k) <= 1e-12);
                assert!(bracket_residual(&p, &p, &k) <= 1e-12);
                assert!(bracket_residual(&k, &p, &p) <= 1e-12);
            }
        }
    }
}
