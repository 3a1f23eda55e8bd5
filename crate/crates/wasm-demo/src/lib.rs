//! Browser bindings: each export returns a JSON string for `www/index.html`.
//!
//! The `*_json` functions are plain Rust so they can be tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use bipartite_cartan::bases::{cartan_a_dprime, cartan_a_prime, SubspaceBasis};
use bipartite_cartan::classify::annotate;
use bipartite_cartan::recursion::Locality;
use bipartite_cartan::sample::random_unitary;
use bipartite_cartan::{
    inventory, recursive_decompose, tensor_expand, BipartiteShape, FactorTree, Matrix, SplitPlan, SplitStrategy,
    Tolerance,
};
use num_complex::Complex64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest `d1·d2` accepted from the page.
pub const MAX_DIM: usize = 16;

#[derive(Debug, Serialize)]
struct Heatmap {
    n: usize,
    /// Row-major moduli.
    abs: Vec<f64>,
    /// Row-major arguments in radians.
    arg: Vec<f64>,
}

impl From<&Matrix> for Heatmap {
    fn from(m: &Matrix) -> Self {
        Heatmap {
            n: m.rows(),
            abs: m.entries().iter().map(|z| z.norm()).collect(),
            arg: m.entries().iter().map(|z| z.arg()).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
struct FactorView {
    kind: String,
    level: usize,
    entangling: bool,
    angle: f64,
    support: Vec<usize>,
    terms: Vec<String>,
}

#[derive(Debug, Serialize)]
struct FamilyView {
    family: String,
    count: usize,
    terms: Vec<String>,
}

#[derive(Debug, Serialize)]
struct DecompositionView {
    d1: usize,
    d2: usize,
    strategy: String,
    residual: f64,
    input: Heatmap,
    factors: Vec<FactorView>,
    inventory: Vec<FamilyView>,
}

#[derive(Debug, Serialize)]
struct BasisView {
    name: &'static str,
    elements: Vec<Vec<String>>,
}

fn term_strings(h: &Matrix, shape: BipartiteShape, tol: &Tolerance) -> Result<Vec<String>, String> {
    let c = tensor_expand(h, shape, tol).map_err(|e| e.to_string())?;
    Ok(c.terms
        .iter()
        .map(|t| format!("{} {}⊗{}", coefficient(t.coefficient), t.left, t.right))
        .collect())
}

fn coefficient(z: Complex64) -> String {
    let r = |x: f64| (x * 1e4).round() / 1e4;
    match (r(z.re), r(z.im)) {
        (re, 0.0) => format!("{re}"),
        (0.0, im) => format!("{im}i"),
        (re, im) => format!("({re}{im:+}i)"),
    }
}

fn shape_of(d1: usize, d2: usize) -> Result<BipartiteShape, String> {
    if d1 * d2 > MAX_DIM {
        return Err(format!("d1·d2 must be at most {MAX_DIM}"));
    }
    BipartiteShape::new(d1, d2).map_err(|e| e.to_string())
}

fn strategy(d1: usize, d2: usize, split: &[usize]) -> Result<SplitStrategy, String> {
    match split {
        [] => Ok(SplitStrategy::Balanced),
        [r1, q1, r2, q2] => {
            let p = SplitPlan::new(*r1, *q1, *r2, *q2).map_err(|e| e.to_string())?;
            if p.shape() != shape_of(d1, d2)? {
                return Err(format!("split {r1},{q1},{r2},{q2} does not fit {d1}x{d2}"));
            }
            Ok(SplitStrategy::Explicit(vec![p]))
        }
        _ => Err("split needs four numbers r1,q1,r2,q2".into()),
    }
}

fn swap() -> Matrix {
    let mut m = Matrix::zeros(8, 8);
    for v in 0..8usize {
        let (i, j, k) = (v >> 2, (v >> 1) & 1, v & 1);
        m[(k * 4 + i * 2 + j, i * 4 + j * 2 + k)] = Complex64::new(1.0, 0.0);
    }
    m
}

fn input(d1: usize, d2: usize, seed: Option<u64>) -> Result<Matrix, String> {
    match seed {
        Some(s) => Ok(random_unitary(shape_of(d1, d2)?.n(), s)),
        None if (d1, d2) == (2, 4) => Ok(swap()),
        None => Err("the SWAP example lives on 2x4".into()),
    }
}

fn decompose_tree(d1: usize, d2: usize, seed: Option<u64>, split: &[usize]) -> Result<FactorTree, String> {
    let tol = Tolerance::default();
    let x = input(d1, d2, seed)?;
    let mut tree =
        recursive_decompose(&x, shape_of(d1, d2)?, &strategy(d1, d2, split)?, &tol).map_err(|e| e.to_string())?;
    annotate(&mut tree, &tol).map_err(|e| e.to_string())?;
    Ok(tree)
}

/// Full decomposition; `seed = None` selects the SWAP example.
pub fn decompose_json(d1: usize, d2: usize, seed: Option<u64>, split: &[usize]) -> Result<String, String> {
    let tol = Tolerance::default();
    let tree = decompose_tree(d1, d2, seed, split)?;
    let mut factors = Vec::with_capacity(tree.factors.len());
    for f in &tree.factors {
        factors.push(FactorView {
            kind: f.kind.to_string(),
            level: f.level,
            entangling: f.locality == Some(Locality::Entangling),
            angle: f.angle,
            support: f.support.clone(),
            terms: term_strings(&f.generator(), tree.shape, &tol)?,
        });
    }
    let mut families = Vec::new();
    for e in inventory(&tree, &tol).map_err(|e| e.to_string())?.entries {
        families.push(FamilyView {
            family: e.family.label(),
            count: e.count,
            terms: term_strings(&e.representative, tree.shape, &tol)?,
        });
    }
    let view = DecompositionView {
        d1,
        d2,
        strategy: tree.strategy.label(),
        residual: tree.residual(),
        input: Heatmap::from(&tree.input),
        factors,
        inventory: families,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Product of the first `count` factors, for stepping through the
/// reconstruction.
pub fn partial_product_json(
    d1: usize,
    d2: usize,
    seed: Option<u64>,
    split: &[usize],
    count: usize,
) -> Result<String, String> {
    let tree = decompose_tree(d1, d2, seed, split)?;
    let mut m = Matrix::identity(tree.n());
    for f in tree.factors.iter().take(count) {
        f.apply_right(&mut m);
    }
    #[derive(Serialize)]
    struct View {
        count: usize,
        total: usize,
        distance: f64,
        product: Heatmap,
    }
    let view = View {
        count: count.min(tree.factors.len()),
        total: tree.factors.len(),
        distance: m.distance(&tree.input),
        product: Heatmap::from(&m),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

fn basis_view(name: &'static str, basis: &SubspaceBasis, shape: BipartiteShape) -> Result<BasisView, String> {
    let tol = Tolerance::default();
    let elements = basis
        .elements
        .iter()
        .map(|b| {
            let g = if b.is_skew_hermitian(tol.zero) {
                b.clone()
            } else {
                b.scale(Complex64::new(0.0, 1.0))
            };
            term_strings(&g, shape, &tol)
        })
        .collect::<Result<_, _>>()?;
    Ok(BasisView { name, elements })
}

/// The abelian bases a′ and a″ of one split.
pub fn bases_json(r1: usize, q1: usize, r2: usize, q2: usize) -> Result<String, String> {
    let p = SplitPlan::new(r1, q1, r2, q2).map_err(|e| e.to_string())?;
    let shape = p.shape();
    shape_of(shape.d1, shape.d2)?;
    let views = [
        basis_view("a'", &cartan_a_prime(p), shape)?,
        basis_view("a''", &cartan_a_dprime(p), shape)?,
    ];
    serde_json::to_string(&views).map_err(|e| e.to_string())
}

fn seed_arg(seed: f64) -> Option<u64> {
    (seed >= 0.0).then_some(seed as u64)
}

/// `seed < 0` selects the SWAP example; `split` is empty or `[r1, q1, r2, q2]`.
#[wasm_bindgen]
pub fn decompose(d1: usize, d2: usize, seed: f64, split: Vec<usize>) -> Result<String, JsError> {
    decompose_json(d1, d2, seed_arg(seed), &split).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn partial_product(d1: usize, d2: usize, seed: f64, split: Vec<usize>, count: usize) -> Result<String, JsError> {
    partial_product_json(d1, d2, seed_arg(seed), &split, count).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bases(r1: usize, q1: usize, r2: usize, q2: usize) -> Result<String, JsError> {
    bases_json(r1, q1, r2, q2).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn swap_view() {
        let v: Value = serde_json::from_str(&decompose_json(2, 4, None, &[1, 1, 2, 2]).unwrap()).unwrap();
        assert_eq!(v["inventory"].as_array().unwrap().len(), 3);
        assert_eq!(v["residual"].as_f64().unwrap(), 0.0);
        assert_eq!(v["input"]["abs"].as_array().unwrap().len(), 64);
    }

    #[test]
    fn partial_products_end_at_the_input() {
        let full: Value = serde_json::from_str(&partial_product_json(2, 3, Some(2), &[], usize::MAX).unwrap()).unwrap();
        assert!(full["distance"].as_f64().unwrap() < 1e-10);
        let none: Value = serde_json::from_str(&partial_product_json(2, 3, Some(2), &[], 0).unwrap()).unwrap();
        assert!(none["distance"].as_f64().unwrap() > 0.1);
    }

    #[test]
    fn bases_view() {
        let v: Value = serde_json::from_str(&bases_json(1, 1, 2, 2).unwrap()).unwrap();
        assert_eq!(v[0]["elements"].as_array().unwrap().len(), 4);
        assert_eq!(v[1]["elements"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(decompose_json(3, 3, None, &[]).is_err());
        assert!(decompose_json(4, 5, Some(1), &[]).is_err());
        assert!(decompose_json(2, 3, Some(1), &[1, 1, 1]).is_err());
        assert!(decompose_json(2, 3, Some(1), &[1, 1, 1, 1]).is_err());
        assert!(bases_json(1, 2, 1, 1).is_err());
    }
}
